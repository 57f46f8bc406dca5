#include "lamp/latentattn.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "lamp/error.hpp"
#include "lamp/linalg.hpp"
#include "lamp/parallel.hpp"

namespace lamp {

namespace {

using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

} // namespace

MaskSpec::MaskSpec(std::size_t patch_count, std::vector<std::size_t> unmasked,
                   std::optional<std::uint64_t> seed)
    : patch_count_(patch_count), unmasked_(std::move(unmasked)),
      observed_(patch_count, 0), seed_(seed) {
    std::sort(unmasked_.begin(), unmasked_.end());
    for (std::size_t n : unmasked_) {
        if (n >= patch_count) {
            throw ValidationError("mask index " + std::to_string(n) + " outside [0, " +
                                  std::to_string(patch_count) + ")");
        }
        if (observed_[n]) throw ValidationError("duplicate mask index " + std::to_string(n));
        observed_[n] = 1;
    }
}

MaskSpec MaskSpec::all(std::size_t patch_count) {
    std::vector<std::size_t> idx(patch_count);
    for (std::size_t n = 0; n < patch_count; ++n) idx[n] = n;
    return MaskSpec(patch_count, std::move(idx));
}

MaskSpec MaskSpec::random(std::size_t patch_count, std::size_t k, std::uint64_t seed) {
    if (k > patch_count) {
        throw ValidationError("cannot unmask " + std::to_string(k) + " of " +
                              std::to_string(patch_count) + " patches");
    }
    std::vector<std::size_t> pool(patch_count);
    for (std::size_t n = 0; n < patch_count; ++n) pool[n] = n;
    std::mt19937_64 rng(seed);
    // Partial Fisher-Yates.
    for (std::size_t i = 0; i < k; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, patch_count - 1);
        std::swap(pool[i], pool[pick(rng)]);
    }
    pool.resize(k);
    return MaskSpec(patch_count, std::move(pool), seed);
}

std::size_t patches_for_coverage(std::size_t patch_count, double coverage) {
    if (!(coverage > 0.0) || coverage > 1.0) {
        throw ValidationError("coverage must lie in (0, 1]");
    }
    const auto k = static_cast<std::size_t>(std::llround(coverage * static_cast<double>(patch_count)));
    return std::clamp<std::size_t>(k, 1, patch_count);
}

MaskedLatentSnapshot::MaskedLatentSnapshot(Eigen::MatrixXd values, MaskSpec mask)
    : values_(std::move(values)), mask_(std::move(mask)) {
    if (static_cast<std::size_t>(values_.rows()) != mask_.patch_count()) {
        throw ValidationError("masked snapshot rows do not match the mask patch count");
    }
    for (std::size_t n = 0; n < mask_.patch_count(); ++n) {
        if (!mask_.is_unmasked(n)) values_.row(static_cast<Eigen::Index>(n)).setZero();
    }
}

ValueTensorFit fit_value_tensor(const LatentSeries& train, double ridge_lambda) {
    if (!std::isfinite(ridge_lambda) || ridge_lambda < 0.0) {
        throw ValidationError("ridge lambda must be finite and nonnegative");
    }
    const std::size_t N = train.patches();
    const std::size_t T = train.snapshots();
    const auto Ne = static_cast<Eigen::Index>(train.latent_dim());

    std::vector<Eigen::MatrixXd> z(N);
    for (std::size_t n = 0; n < N; ++n) z[n] = train.patch_matrix(n);

    ValueTensorFit fit;
    fit.maps.assign(N * N, Eigen::MatrixXd());
    fit.errors.patches = N;
    fit.errors.snapshots = T;
    fit.errors.values.assign(N * N * T, 0.0);

    // One factorization per source patch n, reused for every target m.
    parallel_for(N, [&](std::size_t n) {
        const Eigen::MatrixXd gram = z[n] * z[n].transpose();
        const double lambda = linalg::scaled_ridge(gram, ridge_lambda);
        Eigen::MatrixXd a = gram;
        a.diagonal().array() += lambda;
        Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
        if (linalg::is_singular(ldlt)) {
            throw NumericalError("value regression for source patch " + std::to_string(n) +
                                 " is singular; use a positive ridge lambda");
        }
        for (std::size_t m = 0; m < N; ++m) {
            auto& w = fit.maps[m * N + n];
            auto err = fit.errors.pair(m, n);
            if (m == n) {
                w = Eigen::MatrixXd::Identity(Ne, Ne);
                std::fill(err.begin(), err.end(), 0.0);
                continue;
            }
            // W^T = (Z_n Z_n^T + lambda I)^-1 Z_n Z_m^T
            w = ldlt.solve(z[n] * z[m].transpose()).transpose();
            if (!w.allFinite()) {
                throw NumericalError("value map (" + std::to_string(m) + ", " +
                                     std::to_string(n) + ") is not finite");
            }
            const Eigen::MatrixXd residual = z[m] - w * z[n];
            for (std::size_t t = 0; t < T; ++t) {
                err[t] = residual.col(static_cast<Eigen::Index>(t)).squaredNorm();
            }
        }
    });
    return fit;
}

AttentionTensorFit fit_attention_tensor(const LatentSeries& train, const PairErrors& errors,
                                        double ridge_lambda, double error_floor,
                                        bool intercept) {
    if (!(error_floor > 0.0) || !std::isfinite(error_floor)) {
        throw ValidationError("error floor must be positive and finite");
    }
    if (!std::isfinite(ridge_lambda) || ridge_lambda < 0.0) {
        throw ValidationError("ridge lambda must be finite and nonnegative");
    }
    const std::size_t N = train.patches();
    const std::size_t T = train.snapshots();
    const auto Ne = static_cast<Eigen::Index>(train.latent_dim());
    if (errors.patches != N || errors.snapshots != T || errors.values.size() != N * N * T) {
        throw ValidationError("pair errors do not match the latent series");
    }

    AttentionTensorFit fit;
    fit.vectors.assign(N * N, Eigen::VectorXd());
    fit.intercepts.assign(N * N, 0.0);

    parallel_for(N, [&](std::size_t n) {
        Eigen::MatrixXd z = train.patch_matrix(n);
        // Penalty scaled by the raw latent energy so that near-constant
        // sources (centered Gram ~ rounding noise) stay well posed.
        const double lambda =
            linalg::scaled_ridge(Eigen::MatrixXd(z * z.transpose()), ridge_lambda);
        Eigen::VectorXd mean = Eigen::VectorXd::Zero(Ne);
        if (intercept) {
            mean = z.rowwise().mean();
            z.colwise() -= mean;
        }
        const Eigen::MatrixXd gram = z * z.transpose();
        Eigen::MatrixXd a = gram;
        a.diagonal().array() += lambda;
        Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
        if (linalg::is_singular(ldlt)) {
            throw NumericalError("attention regression for source patch " +
                                 std::to_string(n) + " is singular; use a positive ridge lambda");
        }

        // Targets for all m at once: T x N.
        Eigen::MatrixXd targets(static_cast<Eigen::Index>(T), static_cast<Eigen::Index>(N));
        for (std::size_t m = 0; m < N; ++m) {
            const auto err = errors.pair(m, n);
            for (std::size_t t = 0; t < T; ++t) {
                targets(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(m)) =
                    -std::log(std::max(err[t], error_floor));
            }
        }
        Eigen::RowVectorXd target_mean = Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(N));
        if (intercept) {
            target_mean = targets.colwise().mean();
            targets.rowwise() -= target_mean;
        }
        const Eigen::MatrixXd weights = ldlt.solve(z * targets); // N_e x N

        for (std::size_t m = 0; m < N; ++m) {
            const std::size_t cell = m * N + n;
            if (m == n) {
                fit.vectors[cell] = Eigen::VectorXd::Zero(Ne);
                fit.intercepts[cell] = kSelfAttentionLogit;
                continue;
            }
            fit.vectors[cell] = weights.col(static_cast<Eigen::Index>(m));
            fit.intercepts[cell] =
                intercept ? target_mean(static_cast<Eigen::Index>(m)) -
                                fit.vectors[cell].dot(mean)
                          : 0.0;
            if (!fit.vectors[cell].allFinite() || !std::isfinite(fit.intercepts[cell])) {
                throw NumericalError("attention cell (" + std::to_string(m) + ", " +
                                     std::to_string(n) + ") is not finite");
            }
        }
    });
    return fit;
}

AttentionModel fit_attention_model(PatchPodModel pod, const PatchedSeries& train,
                                   const AttentionOptions& options) {
    const auto latent = encode(pod, train);
    auto values = fit_value_tensor(latent, options.ridge_lambda);
    auto attn = fit_attention_tensor(latent, values.errors, options.ridge_lambda,
                                     options.error_floor, options.intercept);

    const std::size_t N = pod.patches();
    const std::size_t T = latent.snapshots();
    AttentionModel model;
    model.norm_stats.mean.assign(pod.grid.components(), 0.0);
    model.norm_stats.stddev.assign(pod.grid.components(), 1.0);
    model.pod = std::move(pod);
    model.value_maps = std::move(values.maps);
    model.attn_vectors = std::move(attn.vectors);
    model.attn_intercepts = std::move(attn.intercepts);
    model.pair_losses.assign(N * N, 0.0);
    for (std::size_t m = 0; m < N; ++m) {
        for (std::size_t n = 0; n < N; ++n) {
            if (m == n) continue;
            const auto err = values.errors.pair(m, n);
            double sum = 0.0;
            for (double e : err) sum += e;
            model.pair_losses[m * N + n] = sum / static_cast<double>(T);
        }
    }
    model.ridge_lambda = options.ridge_lambda;
    model.error_floor = options.error_floor;
    model.intercept = options.intercept;
    return model;
}

Eigen::VectorXd softmax_row(std::span<const double> logits) {
    double peak = kNegInf;
    for (double a : logits) {
        if (std::isnan(a) || a == std::numeric_limits<double>::infinity()) {
            throw NumericalError("attention logit is NaN or +inf");
        }
        peak = std::max(peak, a);
    }
    if (peak == kNegInf) throw NumericalError("softmax row has no finite entry");

    Eigen::VectorXd w(static_cast<Eigen::Index>(logits.size()));
    double total = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        const double e = logits[i] == kNegInf ? 0.0 : std::exp(logits[i] - peak);
        w(static_cast<Eigen::Index>(i)) = e;
        total += e;
    }
    w /= total;
    return w;
}

Eigen::MatrixXd predict_masked(const AttentionModel& model, const MaskedLatentSnapshot& input,
                               bool copy_through) {
    const std::size_t N = model.patches();
    const auto Ne = static_cast<Eigen::Index>(model.latent_dim());
    const auto& mask = input.mask();
    const auto& z = input.values();
    if (mask.patch_count() != N || z.cols() != Ne) {
        throw ValidationError("masked latent snapshot does not match the model dimensions");
    }
    if (mask.unmasked().empty()) throw ValidationError("every patch is masked");

    Eigen::MatrixXd out(static_cast<Eigen::Index>(N), Ne);
    std::vector<double> logits(N);
    Eigen::VectorXd acc(Ne);
    for (std::size_t m = 0; m < N; ++m) {
        const auto row = static_cast<Eigen::Index>(m);
        const bool observed = mask.is_unmasked(m);
        const bool sole_source = observed && mask.unmasked().size() == 1;
        if (observed && (copy_through || sole_source)) {
            // A lone observed patch has no other source to attend to; its
            // own code is returned unchanged.
            out.row(row) = z.row(row);
            continue;
        }
        for (std::size_t n = 0; n < N; ++n) {
            if (n == m || !mask.is_unmasked(n)) {
                logits[n] = kNegInf;
                continue;
            }
            const std::size_t cell = model.pair(m, n);
            logits[n] = model.attn_vectors[cell].dot(z.row(static_cast<Eigen::Index>(n)).transpose()) +
                        model.attn_intercepts[cell];
            if (!std::isfinite(logits[n])) {
                throw NumericalError("non-finite attention logit for pair (" + std::to_string(m) +
                                     ", " + std::to_string(n) + ")");
            }
        }
        const Eigen::VectorXd weights = softmax_row(logits);
        acc.setZero();
        for (std::size_t n : mask.unmasked()) {
            const double w = weights(static_cast<Eigen::Index>(n));
            if (w == 0.0) continue;
            acc.noalias() += w * (model.value_maps[model.pair(m, n)] *
                                  z.row(static_cast<Eigen::Index>(n)).transpose());
        }
        out.row(row) = acc.transpose();
    }
    return out;
}

SnapshotSet reconstruct(const AttentionModel& model, const SnapshotSet& field,
                        const MaskSpec& mask, bool copy_through) {
    const auto& grid = model.grid();
    if (!grid.matches(field)) {
        std::ostringstream msg;
        msg << "field geometry " << field.height() << "x" << field.width() << "x"
            << field.components() << " does not match model geometry " << grid.height() << "x"
            << grid.width() << "x" << grid.components();
        throw ValidationError(msg.str());
    }
    if (mask.patch_count() != grid.count()) {
        throw ValidationError("mask covers " + std::to_string(mask.patch_count()) +
                              " patches, model has " + std::to_string(grid.count()));
    }
    if (mask.unmasked().empty()) throw ValidationError("every patch is masked");

    const std::size_t N = grid.count();
    const std::size_t D = grid.dim();
    const auto Ne = static_cast<Eigen::Index>(model.latent_dim());
    const std::size_t T = field.snapshots();
    const auto patches = patchify(field, grid);
    std::vector<double> out(T * N * D);

    parallel_for(T, [&](std::size_t t) {
        Eigen::MatrixXd z = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(N), Ne);
        for (std::size_t n : mask.unmasked()) {
            const auto x = patches.patch(t, n);
            z.row(static_cast<Eigen::Index>(n)).noalias() =
                (model.pod.bases[n].transpose() * ConstVecMap(x.data(), x.size())).transpose();
        }
        const Eigen::MatrixXd pred =
            predict_masked(model, MaskedLatentSnapshot(std::move(z), mask), copy_through);
        for (std::size_t n = 0; n < N; ++n) {
            Eigen::Map<Eigen::VectorXd>(out.data() + (t * N + n) * D, static_cast<Eigen::Index>(D))
                .noalias() = model.pod.bases[n] * pred.row(static_cast<Eigen::Index>(n)).transpose();
        }
    });

    auto result = unpatchify(PatchedSeries(grid, T, std::move(out)));
    result.set_norm_stats(field.norm_stats());
    return result;
}

} // namespace lamp
