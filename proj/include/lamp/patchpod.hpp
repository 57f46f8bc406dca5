#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "lamp/patchgrid.hpp"

namespace lamp {

/// T x N x N_e latent codes; values[(t * N + n) * N_e + e].
class LatentSeries {
public:
    LatentSeries() = default;
    LatentSeries(std::size_t snapshots, std::size_t patches, std::size_t latent_dim,
                 std::vector<double> values);

    std::size_t snapshots() const { return snapshots_; }
    std::size_t patches() const { return patches_; }
    std::size_t latent_dim() const { return latent_dim_; }
    const std::vector<double>& values() const { return values_; }

    std::span<const double> code(std::size_t t, std::size_t n) const;
    std::span<double> code(std::size_t t, std::size_t n);

    /// N_e x T matrix whose columns are patch n's codes over time.
    Eigen::MatrixXd patch_matrix(std::size_t n) const;

    bool operator==(const LatentSeries&) const = default;

private:
    std::size_t snapshots_ = 0;
    std::size_t patches_ = 0;
    std::size_t latent_dim_ = 0;
    std::vector<double> values_;
};

/// Per-patch truncated POD bases. Together they form the block-diagonal
/// encoder (blocks U_n^T) and decoder (blocks U_n).
struct PatchPodModel {
    PatchGrid grid;
    std::size_t latent_dim = 0;
    std::vector<Eigen::MatrixXd> bases;           // N of D x N_e
    std::vector<Eigen::VectorXd> singular_values; // N of N_e, nonincreasing

    std::size_t patches() const { return bases.size(); }
};

/// Fits U_n from the leading left singular vectors of each patch's D x T
/// training matrix. No mean is subtracted.
PatchPodModel fit_patch_pod(const PatchedSeries& train, std::size_t latent_dim);

LatentSeries encode(const PatchPodModel& model, const PatchedSeries& series);
PatchedSeries decode(const PatchPodModel& model, const LatentSeries& latent);

/// Sum over snapshots and patches of ||U U^T x - x||^2.
double ae_loss_sum(const PatchPodModel& model, const PatchedSeries& data);

/// ae_loss_sum divided by T * N * D (mean squared error per element).
double ae_loss(const PatchPodModel& model, const PatchedSeries& data);

} // namespace lamp
