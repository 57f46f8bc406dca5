#include "lamp/datagen.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "lamp/error.hpp"
#include "lamp/parallel.hpp"
#include "lamp/random.hpp"

namespace lamp {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void check_dims(const FlowSpec& spec) {
    if (spec.height == 0 || spec.width == 0 || spec.snapshots == 0) {
        throw ValidationError("flow dimensions must be positive");
    }
}

SnapshotSet generate_laminar(const FlowSpec& spec) {
    const auto& p = spec.laminar;
    if (p.harmonics < 1 || !(p.wavelength > 0.0) || !(p.convection_speed > 0.0) ||
        !(p.envelope_width > 0.0) || !(p.band_half_width > 0.0)) {
        throw ValidationError("invalid laminar surrogate parameters");
    }
    const std::size_t H = spec.height;
    const std::size_t W = spec.width;
    const std::size_t oscillating = p.harmonics - 1;

    std::mt19937_64 rng(derive_seed(spec.seed, {0}));
    std::uniform_real_distribution<double> phase_dist(0.0, kTwoPi);
    std::vector<double> phase(oscillating), weight(oscillating);
    for (std::size_t k = 0; k < oscillating; ++k) {
        phase[k] = phase_dist(rng);
        weight[k] = p.amplitude * std::pow(p.harmonic_decay, static_cast<double>(k));
    }

    // Envelope and its derivative per row.
    const double centre = 0.5 * static_cast<double>(H - 1);
    std::vector<double> env(H), denv(H);
    for (std::size_t i = 0; i < H; ++i) {
        const double dy = static_cast<double>(i) - centre;
        if (p.inert_border) {
            if (std::abs(dy) < p.band_half_width) {
                const double s = std::numbers::pi * dy / (2.0 * p.band_half_width);
                env[i] = std::cos(s) * std::cos(s);
                denv[i] = -std::sin(2.0 * s) * std::numbers::pi / (2.0 * p.band_half_width);
            } else {
                env[i] = 0.0;
                denv[i] = 0.0;
            }
        } else {
            const double w2 = p.envelope_width * p.envelope_width;
            env[i] = std::exp(-0.5 * dy * dy / w2);
            denv[i] = -dy / w2 * env[i];
        }
    }

    const double kappa = kTwoPi / p.wavelength;
    std::vector<double> data(spec.snapshots * H * W * 2);
    parallel_for(spec.snapshots, [&](std::size_t t) {
        std::vector<double> s_sum(W), c_sum(W);
        for (std::size_t j = 0; j < W; ++j) {
            const double theta =
                kTwoPi * (static_cast<double>(j) - p.convection_speed * static_cast<double>(t)) /
                p.wavelength;
            double s = 0.0, c = 0.0;
            for (std::size_t k = 0; k < oscillating; ++k) {
                const double arg = static_cast<double>(k + 1) * theta + phase[k];
                s += weight[k] * std::sin(arg);
                c += weight[k] * static_cast<double>(k + 1) * std::cos(arg);
            }
            s_sum[j] = s;
            c_sum[j] = c;
        }
        double* snap = data.data() + t * H * W * 2;
        for (std::size_t i = 0; i < H; ++i) {
            for (std::size_t j = 0; j < W; ++j) {
                double* px = snap + (i * W + j) * 2;
                px[0] = p.freestream + denv[i] * s_sum[j];
                px[1] = -env[i] * kappa * c_sum[j];
            }
        }
    });
    return SnapshotSet(H, W, 2, spec.snapshots, std::move(data));
}

SnapshotSet generate_chaotic(const FlowSpec& spec) {
    const auto& p = spec.chaotic;
    if (p.modes < 1 || !(p.k_min > 0.0) || !(p.k_max >= p.k_min) || !(p.base_frequency > 0.0)) {
        throw ValidationError("invalid chaotic surrogate parameters");
    }
    const std::size_t H = spec.height;
    const std::size_t W = spec.width;
    const std::size_t K = p.modes;

    std::mt19937_64 rng(derive_seed(spec.seed, {1}));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    struct Mode {
        double kx, ky, omega, phase, amp;
    };
    std::vector<Mode> modes(K);
    for (auto& m : modes) {
        const double mag = p.k_min + (p.k_max - p.k_min) * unit(rng);
        const double dir = kTwoPi * unit(rng);
        m.kx = mag * std::cos(dir);
        m.ky = mag * std::sin(dir);
        m.omega = p.base_frequency * (0.5 + unit(rng));
        m.phase = kTwoPi * unit(rng);
        m.amp = std::pow(mag, -p.decay_exponent);
    }

    // Separable evaluation: exp(i(kx x + ky y + phase - omega t)).
    std::vector<std::complex<double>> ex(K * W), ey(K * H);
    for (std::size_t q = 0; q < K; ++q) {
        for (std::size_t j = 0; j < W; ++j) ex[q * W + j] = std::polar(1.0, modes[q].kx * j);
        for (std::size_t i = 0; i < H; ++i) ey[q * H + i] = std::polar(1.0, modes[q].ky * i);
    }

    std::vector<double> data(spec.snapshots * H * W * 2);
    parallel_for(spec.snapshots, [&](std::size_t t) {
        double* snap = data.data() + t * H * W * 2;
        for (std::size_t k = 0; k < H * W; ++k) {
            snap[2 * k] = p.freestream;
            snap[2 * k + 1] = 0.0;
        }
        std::vector<std::complex<double>> row(W);
        for (std::size_t q = 0; q < K; ++q) {
            const auto& m = modes[q];
            const auto temporal =
                std::polar(m.amp, m.phase - m.omega * static_cast<double>(t));
            for (std::size_t i = 0; i < H; ++i) {
                const auto a = temporal * ey[q * H + i];
                for (std::size_t j = 0; j < W; ++j) {
                    // psi = amp * sin(phase); u = dpsi/dy, v = -dpsi/dx.
                    const double c = (a * ex[q * W + j]).real();
                    double* px = snap + (i * W + j) * 2;
                    px[0] += m.ky * c;
                    px[1] -= m.kx * c;
                }
            }
        }
    });
    return SnapshotSet(H, W, 2, spec.snapshots, std::move(data));
}

} // namespace

std::string to_string(FlowKind kind) {
    return kind == FlowKind::laminar ? "laminar" : "chaotic";
}

FlowKind parse_flow_kind(const std::string& name) {
    if (name == "laminar") return FlowKind::laminar;
    if (name == "chaotic") return FlowKind::chaotic;
    throw ValidationError("unknown flow kind '" + name + "' (expected laminar or chaotic)");
}

SnapshotSet generate(const FlowSpec& spec) {
    check_dims(spec);
    return spec.kind == FlowKind::laminar ? generate_laminar(spec) : generate_chaotic(spec);
}

double signal_power(const SnapshotSet& raw, const PatchGrid& grid, const MaskSpec& mask) {
    if (!grid.matches(raw) || mask.patch_count() != grid.count()) {
        throw ValidationError("mask grid does not match the field");
    }
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t t = 0; t < raw.snapshots(); ++t) {
        const auto snap = raw.snapshot(t);
        for (std::size_t n : mask.unmasked()) {
            for (std::size_t k = 0; k < grid.dim(); ++k) {
                const double v = snap[grid.field_offset(n, k)];
                sum += v * v;
            }
            count += grid.dim();
        }
    }
    return count ? sum / static_cast<double>(count) : 0.0;
}

double noise_variance(const SnapshotSet& raw, const PatchGrid& grid, const MaskSpec& mask,
                      double snr_db) {
    if (std::isnan(snr_db) || snr_db == -std::numeric_limits<double>::infinity()) {
        throw ValidationError("SNR must be a number or +inf");
    }
    if (std::isinf(snr_db)) return 0.0;
    const double power = signal_power(raw, grid, mask);
    if (!(power > 0.0)) {
        throw ValidationError("signal power is zero; a finite SNR is undefined");
    }
    return power * std::pow(10.0, -snr_db / 10.0);
}

SnapshotSet add_noise(const SnapshotSet& raw, const PatchGrid& grid, const MaskSpec& mask,
                      const NoiseSpec& noise) {
    if (raw.normalized()) throw ValidationError("noise is added to unnormalized data");
    const double variance = noise_variance(raw, grid, mask, noise.snr_db);
    if (variance == 0.0) return raw;

    const double sigma = std::sqrt(variance);
    SnapshotSet out = raw;
    parallel_for(raw.snapshots(), [&](std::size_t t) {
        std::mt19937_64 rng(derive_seed(noise.seed, {t}));
        std::normal_distribution<double> gauss(0.0, sigma);
        auto snap = out.snapshot(t);
        for (std::size_t n : mask.unmasked()) {
            for (std::size_t k = 0; k < grid.dim(); ++k) snap[grid.field_offset(n, k)] += gauss(rng);
        }
    });
    return out;
}

} // namespace lamp
