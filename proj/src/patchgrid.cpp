#include "lamp/patchgrid.hpp"

#include <cmath>
#include <sstream>

#include "lamp/error.hpp"

namespace lamp {

namespace {

void check_stats(const NormStats& stats, std::size_t components) {
    if (stats.mean.size() != components || stats.stddev.size() != components) {
        throw ValidationError("norm stats carry " + std::to_string(stats.mean.size()) +
                              " components, field has " + std::to_string(components));
    }
    for (std::size_t c = 0; c < components; ++c) {
        if (!std::isfinite(stats.mean[c]) || !std::isfinite(stats.stddev[c]) ||
            !(stats.stddev[c] > 0.0)) {
            throw ValidationError("invalid norm stats for component " + std::to_string(c));
        }
    }
}

// Floor of fraction * count with a small allowance for representation error
// (0.29 * 100 must give 29).
std::size_t block_length(double fraction, std::size_t count) {
    return static_cast<std::size_t>(std::floor(fraction * static_cast<double>(count) + 1e-9));
}

} // namespace

SnapshotSet::SnapshotSet(std::size_t height, std::size_t width, std::size_t components,
                         std::size_t snapshots, std::vector<double> data,
                         std::optional<NormStats> stats)
    : height_(height), width_(width), components_(components), snapshots_(snapshots),
      data_(std::move(data)) {
    if (height == 0 || width == 0 || components == 0 || snapshots == 0) {
        throw ValidationError("snapshot set dimensions must be positive");
    }
    if (data_.size() != snapshots * height * width * components) {
        std::ostringstream msg;
        msg << "snapshot data has " << data_.size() << " values, expected T*H*W*C = "
            << snapshots * height * width * components;
        throw ValidationError(msg.str());
    }
    for (std::size_t k = 0; k < data_.size(); ++k) {
        if (!std::isfinite(data_[k])) {
            throw ValidationError("non-finite value at flat index " + std::to_string(k));
        }
    }
    set_norm_stats(std::move(stats));
}

SnapshotSet SnapshotSet::zeros(std::size_t height, std::size_t width, std::size_t components,
                               std::size_t snapshots) {
    return SnapshotSet(height, width, components, snapshots,
                       std::vector<double>(height * width * components * snapshots, 0.0));
}

std::span<const double> SnapshotSet::snapshot(std::size_t t) const {
    return std::span<const double>(data_).subspan(t * snapshot_size(), snapshot_size());
}

std::span<double> SnapshotSet::snapshot(std::size_t t) {
    return std::span<double>(data_).subspan(t * snapshot_size(), snapshot_size());
}

void SnapshotSet::set_norm_stats(std::optional<NormStats> stats) {
    if (stats) check_stats(*stats, components_);
    stats_ = std::move(stats);
}

SnapshotSet SnapshotSet::slice(TimeRange range) const {
    if (range.begin >= range.end || range.end > snapshots_) {
        throw ValidationError("snapshot range [" + std::to_string(range.begin) + ", " +
                              std::to_string(range.end) + ") outside [0, " +
                              std::to_string(snapshots_) + ")");
    }
    const auto first = data_.begin() + static_cast<std::ptrdiff_t>(range.begin * snapshot_size());
    const auto last = data_.begin() + static_cast<std::ptrdiff_t>(range.end * snapshot_size());
    SnapshotSet out;
    out.height_ = height_;
    out.width_ = width_;
    out.components_ = components_;
    out.snapshots_ = range.size();
    out.data_.assign(first, last);
    out.stats_ = stats_;
    return out;
}

SnapshotSet normalize(const SnapshotSet& set, TimeRange train_range) {
    if (set.normalized()) {
        throw ValidationError("data set is already normalized");
    }
    if (train_range.size() == 0 || train_range.end > set.snapshots()) {
        throw ValidationError("normalization range must be non-empty and inside the series");
    }

    const std::size_t C = set.components();
    const std::size_t pixels = set.height() * set.width();
    const auto count = static_cast<double>(train_range.size() * pixels);

    NormStats stats;
    stats.mean.assign(C, 0.0);
    stats.stddev.assign(C, 0.0);

    const auto& data = set.data();
    const std::size_t first = train_range.begin * set.snapshot_size();
    const std::size_t last = train_range.end * set.snapshot_size();
    for (std::size_t k = first; k < last; ++k) stats.mean[k % C] += data[k];
    for (auto& m : stats.mean) m /= count;
    for (std::size_t k = first; k < last; ++k) {
        const double d = data[k] - stats.mean[k % C];
        stats.stddev[k % C] += d * d;
    }
    for (std::size_t c = 0; c < C; ++c) {
        const double var = stats.stddev[c] / count;
        if (!(var > 0.0)) {
            throw NumericalError("component " + std::to_string(c) +
                                 " has zero variance over the training range");
        }
        stats.stddev[c] = std::sqrt(var);
    }
    return apply_normalization(set, stats);
}

SnapshotSet apply_normalization(const SnapshotSet& raw, const NormStats& stats) {
    if (raw.normalized()) {
        throw ValidationError("data set is already normalized");
    }
    check_stats(stats, raw.components());
    const std::size_t C = raw.components();
    std::vector<double> out(raw.data().size());
    const auto& in = raw.data();
    for (std::size_t k = 0; k < in.size(); ++k) {
        out[k] = (in[k] - stats.mean[k % C]) / stats.stddev[k % C];
    }
    return SnapshotSet(raw.height(), raw.width(), C, raw.snapshots(), std::move(out), stats);
}

SnapshotSet denormalize(const SnapshotSet& set) {
    if (!set.normalized()) {
        throw ValidationError("data set carries no normalization stats");
    }
    const auto& stats = *set.norm_stats();
    const std::size_t C = set.components();
    std::vector<double> out(set.data().size());
    const auto& in = set.data();
    for (std::size_t k = 0; k < in.size(); ++k) {
        out[k] = in[k] * stats.stddev[k % C] + stats.mean[k % C];
    }
    return SnapshotSet(set.height(), set.width(), C, set.snapshots(), std::move(out));
}

PatchGrid::PatchGrid(std::size_t height, std::size_t width, std::size_t components,
                     std::size_t patch_size)
    : height_(height), width_(width), components_(components), patch_size_(patch_size) {
    if (height == 0 || width == 0 || components == 0) {
        throw ValidationError("patch grid dimensions must be positive");
    }
    if (patch_size == 0 || height % patch_size != 0 || width % patch_size != 0) {
        std::ostringstream msg;
        msg << "patch size P=" << patch_size << " must divide both H=" << height
            << " and W=" << width;
        throw ValidationError(msg.str());
    }
}

std::size_t PatchGrid::field_offset(std::size_t n, std::size_t k) const {
    const std::size_t c = k % components_;
    const std::size_t pixel = k / components_;
    const std::size_t i = patch_row(n) * patch_size_ + pixel / patch_size_;
    const std::size_t j = patch_col(n) * patch_size_ + pixel % patch_size_;
    return (i * width_ + j) * components_ + c;
}

PatchedSeries::PatchedSeries(PatchGrid grid, std::size_t snapshots, std::vector<double> values)
    : grid_(grid), snapshots_(snapshots), values_(std::move(values)) {
    if (values_.size() != snapshots_ * grid_.count() * grid_.dim()) {
        std::ostringstream msg;
        msg << "patched series has " << values_.size() << " values, grid expects T*N*D = "
            << snapshots_ * grid_.count() * grid_.dim();
        throw ValidationError(msg.str());
    }
}

std::span<const double> PatchedSeries::patch(std::size_t t, std::size_t n) const {
    const std::size_t D = grid_.dim();
    return std::span<const double>(values_).subspan((t * grid_.count() + n) * D, D);
}

std::span<double> PatchedSeries::patch(std::size_t t, std::size_t n) {
    const std::size_t D = grid_.dim();
    return std::span<double>(values_).subspan((t * grid_.count() + n) * D, D);
}

PatchedSeries patchify(const SnapshotSet& set, std::size_t patch_size) {
    return patchify(set, PatchGrid(set.height(), set.width(), set.components(), patch_size));
}

PatchedSeries patchify(const SnapshotSet& set, const PatchGrid& grid) {
    if (!grid.matches(set)) {
        throw ValidationError("patch grid geometry does not match the snapshot set");
    }
    const std::size_t N = grid.count();
    const std::size_t D = grid.dim();
    const std::size_t P = grid.patch_size();
    const std::size_t C = grid.components();
    const std::size_t W = grid.width();
    const std::size_t row_len = P * C;

    std::vector<double> values(set.snapshots() * N * D);
    for (std::size_t t = 0; t < set.snapshots(); ++t) {
        const auto snap = set.snapshot(t);
        for (std::size_t n = 0; n < N; ++n) {
            double* dst = values.data() + (t * N + n) * D;
            const std::size_t i0 = grid.patch_row(n) * P;
            const std::size_t j0 = grid.patch_col(n) * P;
            for (std::size_t a = 0; a < P; ++a) {
                const double* src = snap.data() + ((i0 + a) * W + j0) * C;
                std::copy(src, src + row_len, dst + a * row_len);
            }
        }
    }
    return PatchedSeries(grid, set.snapshots(), std::move(values));
}

SnapshotSet unpatchify(const PatchedSeries& series) {
    const auto& grid = series.grid();
    const std::size_t N = grid.count();
    const std::size_t D = grid.dim();
    const std::size_t P = grid.patch_size();
    const std::size_t C = grid.components();
    const std::size_t W = grid.width();
    const std::size_t row_len = P * C;
    const std::size_t snap_size = grid.height() * W * C;

    std::vector<double> data(series.snapshots() * snap_size);
    for (std::size_t t = 0; t < series.snapshots(); ++t) {
        double* snap = data.data() + t * snap_size;
        for (std::size_t n = 0; n < N; ++n) {
            const double* src = series.values().data() + (t * N + n) * D;
            const std::size_t i0 = grid.patch_row(n) * P;
            const std::size_t j0 = grid.patch_col(n) * P;
            for (std::size_t a = 0; a < P; ++a) {
                std::copy(src + a * row_len, src + (a + 1) * row_len,
                          snap + ((i0 + a) * W + j0) * C);
            }
        }
    }
    return SnapshotSet(grid.height(), grid.width(), C, series.snapshots(), std::move(data));
}

SplitRanges split_ranges(std::size_t snapshots, const SplitSpec& spec) {
    const double fractions[] = {spec.train_fraction, spec.test_fraction, spec.gap_fraction};
    for (double f : fractions) {
        if (!std::isfinite(f) || f < 0.0) {
            throw ValidationError("split fractions must be finite and nonnegative");
        }
    }
    if (spec.train_fraction + spec.test_fraction + spec.gap_fraction > 1.0 + 1e-12) {
        throw ValidationError("split fractions sum to more than 1");
    }
    const std::size_t n_train = block_length(spec.train_fraction, snapshots);
    const std::size_t n_gap = block_length(spec.gap_fraction, snapshots);
    const std::size_t n_test = block_length(spec.test_fraction, snapshots);

    SplitRanges ranges;
    ranges.train = {0, std::min(n_train, snapshots)};
    const std::size_t test_begin = std::min(ranges.train.end + n_gap, snapshots);
    ranges.test = {test_begin, std::min(test_begin + n_test, snapshots)};
    if (ranges.train.size() == 0) {
        throw ValidationError("split leaves the training block empty (T=" +
                              std::to_string(snapshots) + ")");
    }
    if (ranges.test.size() == 0) {
        throw ValidationError("split leaves the test block empty (T=" +
                              std::to_string(snapshots) + ")");
    }
    return ranges;
}

SplitResult split(const SnapshotSet& set, const SplitSpec& spec) {
    const auto ranges = split_ranges(set.snapshots(), spec);
    return SplitResult{set.slice(ranges.train), set.slice(ranges.test), ranges};
}

} // namespace lamp
