#include "lamp/patchpod.hpp"

#include <cmath>
#include <sstream>

#include "lamp/error.hpp"
#include "lamp/linalg.hpp"
#include "lamp/parallel.hpp"

namespace lamp {

namespace {

using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;
using VecMap = Eigen::Map<Eigen::VectorXd>;

void check_compatible(const PatchPodModel& model, const PatchGrid& grid) {
    if (!(model.grid == grid)) {
        throw ValidationError("patched series grid does not match the POD model grid");
    }
}

} // namespace

LatentSeries::LatentSeries(std::size_t snapshots, std::size_t patches, std::size_t latent_dim,
                           std::vector<double> values)
    : snapshots_(snapshots), patches_(patches), latent_dim_(latent_dim),
      values_(std::move(values)) {
    if (values_.size() != snapshots * patches * latent_dim) {
        throw ValidationError("latent series size does not match T*N*N_e");
    }
    for (double v : values_) {
        if (!std::isfinite(v)) throw NumericalError("latent series contains non-finite values");
    }
}

std::span<const double> LatentSeries::code(std::size_t t, std::size_t n) const {
    return std::span<const double>(values_).subspan((t * patches_ + n) * latent_dim_,
                                                    latent_dim_);
}

std::span<double> LatentSeries::code(std::size_t t, std::size_t n) {
    return std::span<double>(values_).subspan((t * patches_ + n) * latent_dim_, latent_dim_);
}

Eigen::MatrixXd LatentSeries::patch_matrix(std::size_t n) const {
    Eigen::MatrixXd z(static_cast<Eigen::Index>(latent_dim_),
                      static_cast<Eigen::Index>(snapshots_));
    for (std::size_t t = 0; t < snapshots_; ++t) {
        const auto c = code(t, n);
        z.col(static_cast<Eigen::Index>(t)) = ConstVecMap(c.data(), c.size());
    }
    return z;
}

PatchPodModel fit_patch_pod(const PatchedSeries& train, std::size_t latent_dim) {
    const auto& grid = train.grid();
    const std::size_t D = grid.dim();
    const std::size_t T = train.snapshots();
    if (latent_dim < 1 || latent_dim > std::min(D, T)) {
        std::ostringstream msg;
        msg << "latent dimension N_e=" << latent_dim << " must lie in [1, min(D=" << D
            << ", T_train=" << T << ")]";
        throw ValidationError(msg.str());
    }

    PatchPodModel model;
    model.grid = grid;
    model.latent_dim = latent_dim;
    model.bases.resize(grid.count());
    model.singular_values.resize(grid.count());

    parallel_for(grid.count(), [&](std::size_t n) {
        Eigen::MatrixXd x(static_cast<Eigen::Index>(D), static_cast<Eigen::Index>(T));
        for (std::size_t t = 0; t < T; ++t) {
            const auto p = train.patch(t, n);
            x.col(static_cast<Eigen::Index>(t)) = ConstVecMap(p.data(), p.size());
        }
        try {
            auto svd = linalg::truncated_svd(x, static_cast<Eigen::Index>(latent_dim));
            model.bases[n] = std::move(svd.left);
            model.singular_values[n] = std::move(svd.values);
        } catch (const NumericalError& e) {
            throw NumericalError("patch " + std::to_string(n) + ": " + e.what());
        }
    });
    return model;
}

LatentSeries encode(const PatchPodModel& model, const PatchedSeries& series) {
    check_compatible(model, series.grid());
    const std::size_t N = model.patches();
    const std::size_t Ne = model.latent_dim;
    const std::size_t T = series.snapshots();
    std::vector<double> values(T * N * Ne);
    for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t n = 0; n < N; ++n) {
            const auto x = series.patch(t, n);
            VecMap(values.data() + (t * N + n) * Ne, static_cast<Eigen::Index>(Ne)).noalias() =
                model.bases[n].transpose() * ConstVecMap(x.data(), x.size());
        }
    }
    return LatentSeries(T, N, Ne, std::move(values));
}

PatchedSeries decode(const PatchPodModel& model, const LatentSeries& latent) {
    if (latent.patches() != model.patches() || latent.latent_dim() != model.latent_dim) {
        throw ValidationError("latent series dimensions do not match the POD model");
    }
    const std::size_t N = model.patches();
    const std::size_t D = model.grid.dim();
    const std::size_t T = latent.snapshots();
    std::vector<double> values(T * N * D);
    for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t n = 0; n < N; ++n) {
            const auto z = latent.code(t, n);
            VecMap(values.data() + (t * N + n) * D, static_cast<Eigen::Index>(D)).noalias() =
                model.bases[n] * ConstVecMap(z.data(), z.size());
        }
    }
    return PatchedSeries(model.grid, T, std::move(values));
}

double ae_loss_sum(const PatchPodModel& model, const PatchedSeries& data) {
    check_compatible(model, data.grid());
    double total = 0.0;
    Eigen::VectorXd z(static_cast<Eigen::Index>(model.latent_dim));
    for (std::size_t t = 0; t < data.snapshots(); ++t) {
        for (std::size_t n = 0; n < model.patches(); ++n) {
            const auto p = data.patch(t, n);
            const ConstVecMap x(p.data(), p.size());
            z.noalias() = model.bases[n].transpose() * x;
            total += (model.bases[n] * z - x).squaredNorm();
        }
    }
    return total;
}

double ae_loss(const PatchPodModel& model, const PatchedSeries& data) {
    const double elements =
        static_cast<double>(data.snapshots() * model.patches() * model.grid.dim());
    return ae_loss_sum(model, data) / elements;
}

} // namespace lamp
