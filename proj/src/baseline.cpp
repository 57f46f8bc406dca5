#include "lamp/baseline.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "lamp/error.hpp"
#include "lamp/linalg.hpp"
#include "lamp/parallel.hpp"

namespace lamp {

namespace {

using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;
using VecMap = Eigen::Map<Eigen::VectorXd>;

void check_geometry(const GappyPodModel& model, const SnapshotSet& field) {
    if (field.height() != model.height || field.width() != model.width ||
        field.components() != model.components) {
        throw ValidationError("field geometry does not match the gappy POD model");
    }
}

} // namespace

GappyPodModel fit_gappy(const SnapshotSet& train, std::size_t rank) {
    const std::size_t rows = train.snapshot_size();
    const std::size_t T = train.snapshots();
    if (rank < 1 || rank > std::min(rows, T)) {
        std::ostringstream msg;
        msg << "gappy mode count r=" << rank << " must lie in [1, min(H*W*C=" << rows
            << ", T_train=" << T << ")]";
        throw ValidationError(msg.str());
    }
    const Eigen::Map<const Eigen::MatrixXd> x(train.data().data(),
                                              static_cast<Eigen::Index>(rows),
                                              static_cast<Eigen::Index>(T));
    auto svd = linalg::truncated_svd(x, static_cast<Eigen::Index>(rank));

    GappyPodModel model;
    model.height = train.height();
    model.width = train.width();
    model.components = train.components();
    model.modes = std::move(svd.left);
    model.singular_values = std::move(svd.values);
    model.norm_stats = train.norm_stats();
    return model;
}

SnapshotSet reconstruct_gappy(const GappyPodModel& model, const SnapshotSet& field,
                              const PatchGrid& grid, const MaskSpec& mask,
                              double ridge_lambda) {
    check_geometry(model, field);
    if (!grid.matches(field) || mask.patch_count() != grid.count()) {
        throw ValidationError("mask grid does not match the field");
    }
    if (!std::isfinite(ridge_lambda) || ridge_lambda < 0.0) {
        throw ValidationError("ridge lambda must be finite and nonnegative");
    }

    std::vector<Eigen::Index> observed;
    observed.reserve(mask.unmasked().size() * grid.dim());
    for (std::size_t n : mask.unmasked()) {
        for (std::size_t k = 0; k < grid.dim(); ++k) {
            observed.push_back(static_cast<Eigen::Index>(grid.field_offset(n, k)));
        }
    }
    std::sort(observed.begin(), observed.end());
    const std::size_t r = model.rank();
    if (observed.size() < r) {
        throw ValidationError("only " + std::to_string(observed.size()) +
                              " observed values for r=" + std::to_string(r) +
                              " modes; choose a smaller r");
    }

    const Eigen::MatrixXd phi_obs = model.modes(observed, Eigen::all);
    const Eigen::MatrixXd gram = phi_obs.transpose() * phi_obs;
    const double lambda = linalg::scaled_ridge(gram, ridge_lambda);
    Eigen::MatrixXd a = gram;
    a.diagonal().array() += lambda;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
    if (linalg::is_singular(ldlt)) {
        throw NumericalError("gappy normal matrix is singular; use fewer modes or more coverage");
    }

    SnapshotSet out = field;
    const auto size = static_cast<Eigen::Index>(field.snapshot_size());
    parallel_for(field.snapshots(), [&](std::size_t t) {
        const auto snap = field.snapshot(t);
        const ConstVecMap x(snap.data(), size);
        const Eigen::VectorXd coeffs = ldlt.solve(phi_obs.transpose() * x(observed));
        VecMap(out.snapshot(t).data(), size).noalias() = model.modes * coeffs;
    });
    return out;
}

SnapshotSet project_gappy(const GappyPodModel& model, const SnapshotSet& field) {
    check_geometry(model, field);
    SnapshotSet out = field;
    const auto size = static_cast<Eigen::Index>(field.snapshot_size());
    for (std::size_t t = 0; t < field.snapshots(); ++t) {
        const auto snap = field.snapshot(t);
        const ConstVecMap x(snap.data(), size);
        const Eigen::VectorXd coeffs = model.modes.transpose() * x;
        VecMap(out.snapshot(t).data(), size).noalias() = model.modes * coeffs;
    }
    return out;
}

} // namespace lamp
