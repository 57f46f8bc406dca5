#pragma once

#include <cstddef>
#include <optional>

#include <Eigen/Dense>

#include "lamp/latentattn.hpp"
#include "lamp/patchgrid.hpp"

namespace lamp {

/// Global (unpatched) POD basis used by the gappy reconstruction.
struct GappyPodModel {
    std::size_t height = 0;
    std::size_t width = 0;
    std::size_t components = 0;
    Eigen::MatrixXd modes;          // H*W*C x r, orthonormal columns
    Eigen::VectorXd singular_values; // r
    std::optional<NormStats> norm_stats;

    std::size_t rank() const { return static_cast<std::size_t>(modes.cols()); }
};

/// Default relative ridge for the gappy normal equations. Small enough that
/// a fully observed field reproduces the plain POD projection.
inline constexpr double kGappyRidge = 1e-12;

GappyPodModel fit_gappy(const SnapshotSet& train, std::size_t rank);

/**
 * Fits mode coefficients to the pixels inside unmasked patches of `grid`
 * and evaluates the fitted expansion everywhere. `ridge_lambda` is relative
 * to trace(Phi_obs^T Phi_obs) / r.
 */
SnapshotSet reconstruct_gappy(const GappyPodModel& model, const SnapshotSet& field,
                              const PatchGrid& grid, const MaskSpec& mask,
                              double ridge_lambda = kGappyRidge);

/// Plain rank-r projection Phi Phi^T x of every snapshot.
SnapshotSet project_gappy(const GappyPodModel& model, const SnapshotSet& field);

} // namespace lamp
