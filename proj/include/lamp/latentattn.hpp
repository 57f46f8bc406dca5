#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "lamp/patchgrid.hpp"
#include "lamp/patchpod.hpp"

namespace lamp {

/// Logit stored on diagonal attention cells. Never used at inference since
/// self pairs are always excluded there.
inline constexpr double kSelfAttentionLogit = 1.0e30;

/// Set of observed (unmasked) patches for one inference scenario.
class MaskSpec {
public:
    MaskSpec() = default;
    /// Indices are sorted and must be unique and inside [0, patch_count).
    MaskSpec(std::size_t patch_count, std::vector<std::size_t> unmasked,
             std::optional<std::uint64_t> seed = std::nullopt);

    static MaskSpec all(std::size_t patch_count);
    /// k distinct patches drawn uniformly with a seeded generator.
    static MaskSpec random(std::size_t patch_count, std::size_t k, std::uint64_t seed);

    std::size_t patch_count() const { return patch_count_; }
    const std::vector<std::size_t>& unmasked() const { return unmasked_; }
    const std::optional<std::uint64_t>& seed() const { return seed_; }
    bool is_unmasked(std::size_t n) const { return observed_[n] != 0; }
    double coverage() const {
        return patch_count_ ? static_cast<double>(unmasked_.size()) / patch_count_ : 0.0;
    }

    bool operator==(const MaskSpec&) const = default;

private:
    std::size_t patch_count_ = 0;
    std::vector<std::size_t> unmasked_;
    std::vector<std::uint8_t> observed_;
    std::optional<std::uint64_t> seed_;
};

/// Number of patches to unmask for a coverage fraction: round(coverage * N),
/// at least 1.
std::size_t patches_for_coverage(std::size_t patch_count, double coverage);

/// N x N_e latent snapshot with masked rows forced to zero.
class MaskedLatentSnapshot {
public:
    MaskedLatentSnapshot(Eigen::MatrixXd values, MaskSpec mask);

    const Eigen::MatrixXd& values() const { return values_; }
    const MaskSpec& mask() const { return mask_; }

private:
    Eigen::MatrixXd values_;
    MaskSpec mask_;
};

/// Per-snapshot squared pair errors l_mn(t); values[(m * N + n) * T + t].
struct PairErrors {
    std::size_t patches = 0;
    std::size_t snapshots = 0;
    std::vector<double> values;

    std::span<const double> pair(std::size_t m, std::size_t n) const {
        return std::span<const double>(values).subspan((m * patches + n) * snapshots, snapshots);
    }
    std::span<double> pair(std::size_t m, std::size_t n) {
        return std::span<double>(values).subspan((m * patches + n) * snapshots, snapshots);
    }
};

struct ValueTensorFit {
    std::vector<Eigen::MatrixXd> maps; // index m * N + n, each N_e x N_e
    PairErrors errors;
};

struct AttentionTensorFit {
    std::vector<Eigen::VectorXd> vectors; // index m * N + n, each N_e
    std::vector<double> intercepts;       // index m * N + n
};

/**
 * Closed-form fit of every value map W_mn = argmin sum_t |z_m - W z_n|^2 +
 * lambda |W|_F^2, via W = (Z_m Z_n^T)(Z_n Z_n^T + lambda I)^-1.
 *
 * `ridge_lambda` is relative: the applied penalty is
 * ridge_lambda * trace(Z_n Z_n^T) / N_e. Diagonal maps are the identity
 * with zero error.
 */
ValueTensorFit fit_value_tensor(const LatentSeries& train, double ridge_lambda);

/**
 * Ridge regression of the log-error target -log(max(l_mn(t), error_floor))
 * on z_n(t), with an unpenalized intercept when `intercept` is set (the
 * intercept is forced to zero otherwise). The relative ridge is scaled by
 * the trace of the uncentered Gram matrix of z_n.
 */
AttentionTensorFit fit_attention_tensor(const LatentSeries& train, const PairErrors& errors,
                                        double ridge_lambda, double error_floor,
                                        bool intercept = true);

struct AttentionOptions {
    double ridge_lambda = 1e-8;
    double error_floor = 1e-12;
    bool intercept = true;
};

/// POD bases plus the two regression tensors.
struct AttentionModel {
    PatchPodModel pod;
    NormStats norm_stats;
    std::vector<Eigen::MatrixXd> value_maps;   // m * N + n
    std::vector<Eigen::VectorXd> attn_vectors; // m * N + n
    std::vector<double> attn_intercepts;       // m * N + n
    std::vector<double> pair_losses;           // mean over snapshots of l_mn(t)
    double ridge_lambda = 1e-8;
    double error_floor = 1e-12;
    bool intercept = true;

    const PatchGrid& grid() const { return pod.grid; }
    std::size_t patches() const { return pod.patches(); }
    std::size_t latent_dim() const { return pod.latent_dim; }
    std::size_t pair(std::size_t m, std::size_t n) const { return m * patches() + n; }
};

/// Fits both tensors on the encoded training series. The model's norm stats
/// default to identity stats; callers working on standardized data set them.
AttentionModel fit_attention_model(PatchPodModel pod, const PatchedSeries& train,
                                   const AttentionOptions& options = {});

/// Stable softmax with -inf entries mapping to exactly 0. NaN or +inf entries
/// and rows without a finite entry are errors.
Eigen::VectorXd softmax_row(std::span<const double> logits);

/// Softmax-weighted pair-wise prediction of the full latent snapshot
/// (N x N_e). Self pairs and masked sources receive -inf logits.
Eigen::MatrixXd predict_masked(const AttentionModel& model, const MaskedLatentSnapshot& input,
                               bool copy_through = true);

/// Batch masked reconstruction of standardized fields:
/// patchify, zero masked patches, encode, predict, decode, unpatchify.
/// The output keeps the input's norm stats.
SnapshotSet reconstruct(const AttentionModel& model, const SnapshotSet& field,
                        const MaskSpec& mask, bool copy_through = true);

} // namespace lamp
