#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace lamp {

/// Per-component standardization statistics (population std).
struct NormStats {
    std::vector<double> mean;
    std::vector<double> stddev;

    std::size_t components() const { return mean.size(); }
    bool operator==(const NormStats&) const = default;
};

/// Half-open range of snapshot indices [begin, end).
struct TimeRange {
    std::size_t begin = 0;
    std::size_t end = 0;

    std::size_t size() const { return end > begin ? end - begin : 0; }
    bool operator==(const TimeRange&) const = default;
};

/**
 * A time series of 2D multi-component fields.
 *
 * Storage is snapshot-major, then row-major over pixels, with the component
 * index fastest: data[((t * H + i) * W + j) * C + c].
 *
 * When norm_stats is present the stored values are standardized and the
 * stats describe how to map them back to physical units.
 */
class SnapshotSet {
public:
    SnapshotSet() = default;
    SnapshotSet(std::size_t height, std::size_t width, std::size_t components,
                std::size_t snapshots, std::vector<double> data,
                std::optional<NormStats> stats = std::nullopt);

    static SnapshotSet zeros(std::size_t height, std::size_t width,
                             std::size_t components, std::size_t snapshots);

    std::size_t height() const { return height_; }
    std::size_t width() const { return width_; }
    std::size_t components() const { return components_; }
    std::size_t snapshots() const { return snapshots_; }
    std::size_t snapshot_size() const { return height_ * width_ * components_; }

    const std::vector<double>& data() const { return data_; }
    std::vector<double>& data() { return data_; }

    std::span<const double> snapshot(std::size_t t) const;
    std::span<double> snapshot(std::size_t t);

    double at(std::size_t t, std::size_t i, std::size_t j, std::size_t c) const {
        return data_[((t * height_ + i) * width_ + j) * components_ + c];
    }
    double& at(std::size_t t, std::size_t i, std::size_t j, std::size_t c) {
        return data_[((t * height_ + i) * width_ + j) * components_ + c];
    }

    const std::optional<NormStats>& norm_stats() const { return stats_; }
    bool normalized() const { return stats_.has_value(); }
    void set_norm_stats(std::optional<NormStats> stats);

    /// Copy of snapshots [range.begin, range.end), keeping the stats.
    SnapshotSet slice(TimeRange range) const;

    bool same_geometry(const SnapshotSet& other) const {
        return height_ == other.height_ && width_ == other.width_ &&
               components_ == other.components_;
    }

    bool operator==(const SnapshotSet&) const = default;

private:
    std::size_t height_ = 0;
    std::size_t width_ = 0;
    std::size_t components_ = 0;
    std::size_t snapshots_ = 0;
    std::vector<double> data_;
    std::optional<NormStats> stats_;
};

/// Computes per-component stats over train_range and standardizes all
/// snapshots with them. The input must not already carry stats.
SnapshotSet normalize(const SnapshotSet& set, TimeRange train_range);

/// Standardizes raw data with frozen stats (e.g. test inputs).
SnapshotSet apply_normalization(const SnapshotSet& raw, const NormStats& stats);

/// Maps a standardized set back to physical units; drops the stats.
SnapshotSet denormalize(const SnapshotSet& set);

/**
 * Geometry of the non-overlapping P x P tiling.
 *
 * Patches are numbered row-major over the patch grid. Inside a patch the
 * flattened vector is row-major over pixels with the component fastest, so
 * entry ((a * P + b) * C + c) holds pixel (row0 + a, col0 + b), component c.
 */
class PatchGrid {
public:
    PatchGrid() = default;
    PatchGrid(std::size_t height, std::size_t width, std::size_t components,
              std::size_t patch_size);

    std::size_t height() const { return height_; }
    std::size_t width() const { return width_; }
    std::size_t components() const { return components_; }
    std::size_t patch_size() const { return patch_size_; }
    std::size_t rows() const { return height_ / patch_size_; }
    std::size_t cols() const { return width_ / patch_size_; }
    std::size_t count() const { return rows() * cols(); }
    std::size_t dim() const { return components_ * patch_size_ * patch_size_; }

    std::size_t patch_row(std::size_t n) const { return n / cols(); }
    std::size_t patch_col(std::size_t n) const { return n % cols(); }

    /// Offset within a snapshot of entry k of patch n.
    std::size_t field_offset(std::size_t n, std::size_t k) const;

    bool matches(const SnapshotSet& set) const {
        return set.height() == height_ && set.width() == width_ &&
               set.components() == components_;
    }

    bool operator==(const PatchGrid&) const = default;

private:
    std::size_t height_ = 0;
    std::size_t width_ = 0;
    std::size_t components_ = 0;
    std::size_t patch_size_ = 1;
};

/// T x N x D patch vectors; values[(t * N + n) * D + k].
class PatchedSeries {
public:
    PatchedSeries() = default;
    PatchedSeries(PatchGrid grid, std::size_t snapshots, std::vector<double> values);

    const PatchGrid& grid() const { return grid_; }
    std::size_t snapshots() const { return snapshots_; }
    const std::vector<double>& values() const { return values_; }
    std::vector<double>& values() { return values_; }

    std::span<const double> patch(std::size_t t, std::size_t n) const;
    std::span<double> patch(std::size_t t, std::size_t n);

    bool operator==(const PatchedSeries&) const = default;

private:
    PatchGrid grid_;
    std::size_t snapshots_ = 0;
    std::vector<double> values_;
};

PatchedSeries patchify(const SnapshotSet& set, std::size_t patch_size);
PatchedSeries patchify(const SnapshotSet& set, const PatchGrid& grid);

/// Inverse of patchify. The result carries no norm stats.
SnapshotSet unpatchify(const PatchedSeries& series);

/// Contiguous train / gap / test blocks in time.
struct SplitSpec {
    double train_fraction = 0.75;
    double test_fraction = 0.20;
    double gap_fraction = 0.05;
};

struct SplitRanges {
    TimeRange train;
    TimeRange test;
};

SplitRanges split_ranges(std::size_t snapshots, const SplitSpec& spec);

struct SplitResult {
    SnapshotSet train;
    SnapshotSet test;
    SplitRanges ranges;
};

SplitResult split(const SnapshotSet& set, const SplitSpec& spec);

} // namespace lamp
