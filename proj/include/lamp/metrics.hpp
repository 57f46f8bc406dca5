#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "lamp/latentattn.hpp"
#include "lamp/patchgrid.hpp"

namespace lamp {

/// Mean squared error per element between two fields of equal geometry.
double pred_loss(const SnapshotSet& reconstruction, const SnapshotSet& truth);

/// Per-source-patch predictive power laid out on the patch grid.
struct PowerMap {
    PatchGrid grid;
    std::vector<double> values; // length N, row-major over the patch grid
    double min = 0.0;
    double max = 0.0;
};

/// value(n) = mean over m != n of -log(max(pair_losses[m][n], error_floor)).
/// A single-patch grid has no other targets and maps to 0.
PowerMap predictive_power(const AttentionModel& model);

/// Unmasks the k patches with the largest power; ties go to the lower index.
MaskSpec place_sensors(const PowerMap& map, std::size_t k);

/// CSV form: a "# height=.. width=.. components=.. patch_size=.." line, a
/// header, then one "patch,row,col,power" row per patch.
std::string power_map_csv(const PowerMap& map);
PowerMap parse_power_map_csv(std::string_view text);

/// Median of a non-empty sample (mean of the middle pair for even sizes).
double median(std::vector<double> values);

/// Normalized-unit variance of noise with raw variance sigma2: the mean over
/// components of sigma2 / std_c^2.
double normalized_noise_variance(double sigma2, const NormStats& stats);

struct SweepConfig {
    SnapshotSet dataset; // raw, or standardized with stats
    SplitSpec split;
    std::vector<std::size_t> patch_sizes;
    std::vector<std::size_t> latent_dims;
    std::vector<double> snr_db; // +inf = noise-free
    std::vector<double> coverages;
    std::size_t n_arrangements = 25;
    std::uint64_t seed = 0;
    AttentionOptions attention;
    bool copy_through = true;
};

struct SweepCell {
    std::size_t patch_size = 0;
    std::size_t latent_dim = 0;
    double snr_db = 0.0;
    double coverage = 0.0;
    double median_pred_loss = 0.0;
    double ae_loss = 0.0;        // test-split autoencoding floor
    double noise_variance = 0.0; // normalized units, mean over arrangements
    std::size_t n_arrangements = 0;
    std::uint64_t seed = 0;
    std::vector<double> losses;              // one per arrangement
    std::vector<std::uint64_t> mask_seeds;   // one per arrangement
    bool skipped = false;
    std::string reason;
};

struct SweepResult {
    std::vector<std::size_t> patch_sizes;
    std::vector<std::size_t> latent_dims;
    std::vector<double> snr_db;
    std::vector<double> coverages;
    std::size_t n_arrangements = 0;
    std::vector<SweepCell> cells; // ordered by (P, N_e, snr, coverage)

    const SweepCell& cell(std::size_t patch_size, std::size_t latent_dim, double snr_db,
                          double coverage) const;
    std::string to_csv() const;
};

/// Mask seed for arrangement a of coverage level c; shared by every (P, N_e)
/// and SNR so cells differ only in the swept parameter.
std::uint64_t arrangement_seed(std::uint64_t base, std::size_t coverage_index, std::size_t a);
std::uint64_t noise_seed(std::uint64_t base, std::size_t snr_index, std::size_t coverage_index,
                         std::size_t a);

/**
 * Trains on the train split for every (P, N_e), then evaluates the median
 * L^pred over n_arrangements random masks for each (SNR, coverage) on the
 * test split. Noise is injected in raw units and the input is standardized
 * with the frozen training stats; losses are measured against the
 * noise-free standardized target. Invalid (P, N_e) cells are recorded as
 * skipped.
 */
SweepResult run_sweep(const SweepConfig& config);

} // namespace lamp
