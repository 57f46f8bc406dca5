#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include "lamp/latentattn.hpp"
#include "lamp/patchgrid.hpp"

namespace lamp {

enum class FlowKind { laminar, chaotic };

std::string to_string(FlowKind kind);
FlowKind parse_flow_kind(const std::string& name);

/**
 * Periodic vortex-street surrogate. The stream function
 *   psi = amplitude * E(y) * sum_k decay^(k-1) sin(k * theta + phase_k),
 *   theta = 2 pi (x - convection_speed * t) / wavelength,
 * gives u = freestream + dpsi/dy and v = -dpsi/dx. `harmonics` counts the
 * steady mean-flow term as harmonic zero, so harmonics - 1 oscillating
 * harmonics are present and the period is wavelength / convection_speed
 * snapshots.
 *
 * E is a Gaussian of width `envelope_width` centred on the mid-height row,
 * or, with `inert_border`, a cos^2 bump that vanishes identically beyond
 * `band_half_width` rows from the centre.
 */
struct LaminarParams {
    double freestream = 1.0;
    double amplitude = 2.5;
    double convection_speed = 1.0; // pixels per snapshot
    double wavelength = 32.0;      // pixels
    double envelope_width = 10.0;  // pixels
    std::size_t harmonics = 6;
    double harmonic_decay = 0.1;
    bool inert_border = false;
    double band_half_width = 16.0;
};

/**
 * Broadband surrogate: sum of `modes` travelling waves of a stream function
 * with random wavevectors (|k| uniform in [k_min, k_max] rad/pixel, random
 * direction), random phases, incommensurate random frequencies in
 * base_frequency * [0.5, 1.5), and amplitude |k|^-decay_exponent.
 */
struct ChaoticParams {
    std::size_t modes = 40;
    double k_min = 0.1;
    double k_max = 0.6;
    double base_frequency = 0.2;
    double decay_exponent = 1.0;
    double freestream = 1.0;
};

struct FlowSpec {
    FlowKind kind = FlowKind::laminar;
    std::size_t height = 64;
    std::size_t width = 64;
    std::size_t snapshots = 160;
    std::uint64_t seed = 0;
    LaminarParams laminar;
    ChaoticParams chaotic;

    /// Laminar shedding period in snapshots.
    double period() const { return laminar.wavelength / laminar.convection_speed; }
};

/// Unnormalized two-component (u, v) velocity series; a pure function of spec.
SnapshotSet generate(const FlowSpec& spec);

struct NoiseSpec {
    double snr_db = 0.0; // +inf means noise-free
    std::uint64_t seed = 0;
};

/// Mean squared value over the pixels of unmasked patches (all snapshots).
double signal_power(const SnapshotSet& raw, const PatchGrid& grid, const MaskSpec& mask);

/// sigma^2 = signal_power * 10^(-snr_db / 10); zero for infinite SNR.
double noise_variance(const SnapshotSet& raw, const PatchGrid& grid, const MaskSpec& mask,
                      double snr_db);

/// Adds i.i.d. N(0, sigma^2) to every value inside unmasked patches of a raw
/// (unnormalized) field. Snapshot t draws from a stream seeded with
/// derive_seed(seed, {t}).
SnapshotSet add_noise(const SnapshotSet& raw, const PatchGrid& grid, const MaskSpec& mask,
                      const NoiseSpec& noise);

} // namespace lamp
