#include "doctest.h"

#include <cmath>
#include <limits>

#include "lamp/datagen.hpp"
#include "lamp/error.hpp"
#include "oracles.hpp"

using namespace lamp;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::size_t energy_rank(const std::vector<double>& s2, double fraction) {
    double total = 0.0;
    for (double v : s2) total += std::max(v, 0.0);
    double acc = 0.0;
    for (std::size_t k = 0; k < s2.size(); ++k) {
        acc += std::max(s2[k], 0.0);
        if (acc >= fraction * total) return k + 1;
    }
    return s2.size();
}

} // namespace

TEST_CASE("laminar surrogate repeats after one period") {
    FlowSpec spec;
    spec.snapshots = 64;
    REQUIRE(spec.period() == 32.0);
    auto f = generate(spec);
    CHECK(f.components() == 2);
    double worst = 0.0;
    for (std::size_t t = 0; t < 32; ++t) {
        auto a = f.snapshot(t);
        auto b = f.snapshot(t + 32);
        for (std::size_t k = 0; k < a.size(); ++k) worst = std::max(worst, std::fabs(a[k] - b[k]));
    }
    CHECK(worst < 1e-10);
    // The field is not trivially constant in time.
    CHECK(std::fabs(f.at(0, 32, 5, 1) - f.at(7, 32, 5, 1)) > 1e-3);
}

TEST_CASE("generators are deterministic and seed dependent") {
    for (auto kind : {FlowKind::laminar, FlowKind::chaotic}) {
        FlowSpec spec;
        spec.kind = kind;
        spec.height = spec.width = 16;
        spec.snapshots = 20;
        spec.seed = 5;
        auto a = generate(spec);
        auto b = generate(spec);
        CHECK(a == b);
        spec.seed = 6;
        CHECK_FALSE(generate(spec) == a);
    }
}

TEST_CASE("chaotic surrogate has high effective rank") {
    FlowSpec spec;
    spec.kind = FlowKind::chaotic;
    spec.height = spec.width = 48;
    spec.snapshots = 600;
    spec.seed = 1;
    REQUIRE(spec.chaotic.modes == 40);
    auto f = generate(spec);
    oracle::Mat x(f.snapshot_size(), f.snapshots());
    for (std::size_t t = 0; t < f.snapshots(); ++t)
        for (std::size_t k = 0; k < f.snapshot_size(); ++k) x(k, t) = f.snapshot(t)[k];
    // Remove the steady freestream so the count reflects the fluctuations.
    for (std::size_t k = 0; k < x.rows; ++k) {
        double mean = 0.0;
        for (std::size_t t = 0; t < x.cols; ++t) mean += x(k, t);
        mean /= static_cast<double>(x.cols);
        for (std::size_t t = 0; t < x.cols; ++t) x(k, t) -= mean;
    }
    const auto s2 = oracle::squared_singular_values(x);
    CHECK(energy_rank(s2, 0.99) > 30);
}

TEST_CASE("laminar per-patch rank is at most twice the harmonic count") {
    FlowSpec spec;
    spec.snapshots = 96;
    auto f = generate(spec);
    auto patched = patchify(f, 16);
    const auto& g = patched.grid();
    for (std::size_t n = 0; n < g.count(); ++n) {
        oracle::Mat x(g.dim(), f.snapshots());
        for (std::size_t t = 0; t < f.snapshots(); ++t)
            for (std::size_t d = 0; d < g.dim(); ++d) x(d, t) = patched.patch(t, n)[d];
        const auto s2 = oracle::squared_singular_values(x);
        // Genuine harmonics sit above 1e-12 of the leading value; double
        // rounding in the samples leaves a floor near 1e-16.
        std::size_t rank = 0;
        for (double v : s2) rank += v > 1e-14 * s2[0];
        CHECK(rank <= 2 * spec.laminar.harmonics);
    }
}

TEST_CASE("inert border rows carry only the freestream") {
    FlowSpec spec;
    spec.laminar.inert_border = true;
    spec.snapshots = 8;
    auto f = generate(spec);
    for (std::size_t t = 0; t < 8; ++t)
        for (std::size_t j = 0; j < 64; ++j) {
            CHECK(f.at(t, 0, j, 0) == spec.laminar.freestream);
            CHECK(f.at(t, 63, j, 1) == 0.0);
        }
    CHECK(std::fabs(f.at(0, 32, 3, 1)) > 1e-3);
}

TEST_CASE("generator input validation") {
    FlowSpec spec;
    spec.snapshots = 0;
    CHECK_THROWS_AS(generate(spec), ValidationError);
    spec.snapshots = 4;
    spec.laminar.harmonics = 0;
    CHECK_THROWS_AS(generate(spec), ValidationError);
    CHECK(parse_flow_kind("chaotic") == FlowKind::chaotic);
    CHECK(to_string(FlowKind::laminar) == "laminar");
    CHECK_THROWS_AS(parse_flow_kind("turbulent"), ValidationError);
}

TEST_CASE("add_noise: infinite SNR returns the input unchanged") {
    FlowSpec spec;
    spec.height = spec.width = 16;
    spec.snapshots = 4;
    auto f = generate(spec);
    PatchGrid grid(16, 16, 2, 4);
    auto out = add_noise(f, grid, MaskSpec::all(16), {kInf, 3});
    CHECK(out == f);
}

TEST_CASE("add_noise: 20 dB on a unit-power signal has variance 0.01") {
    SnapshotSet ones(8, 8, 1, 2, std::vector<double>(128, 1.0));
    PatchGrid grid(8, 8, 1, 4);
    CHECK(noise_variance(ones, grid, MaskSpec::all(4), 20.0) == doctest::Approx(0.01).epsilon(1e-14));
    CHECK(noise_variance(ones, grid, MaskSpec::all(4), kInf) == 0.0);
}

TEST_CASE("add_noise: 10 dB sample variance follows the SNR law") {
    FlowSpec spec;
    spec.snapshots = 40;
    auto f = generate(spec);
    PatchGrid grid(64, 64, 2, 16);
    auto mask = MaskSpec::random(16, 10, 8);
    const double p_sig = signal_power(f, grid, mask);
    auto noisy = add_noise(f, grid, mask, {10.0, 77});
    double sum = 0.0, sq = 0.0;
    std::size_t count = 0;
    for (std::size_t t = 0; t < f.snapshots(); ++t)
        for (std::size_t n = 0; n < 16; ++n)
            for (std::size_t k = 0; k < grid.dim(); ++k) {
                const std::size_t off = grid.field_offset(n, k);
                const double d = noisy.snapshot(t)[off] - f.snapshot(t)[off];
                if (!mask.is_unmasked(n)) {
                    CHECK(d == 0.0);
                    continue;
                }
                sum += d;
                sq += d * d;
                ++count;
            }
    REQUIRE(count >= 100000);
    const double mean = sum / count;
    const double var = sq / count - mean * mean;
    CHECK(std::fabs(var / (p_sig * 0.1) - 1.0) < 0.05);
}

TEST_CASE("add_noise is deterministic and rejects degenerate input") {
    FlowSpec spec;
    spec.height = spec.width = 16;
    spec.snapshots = 3;
    auto f = generate(spec);
    PatchGrid grid(16, 16, 2, 8);
    auto a = add_noise(f, grid, MaskSpec::all(4), {15.0, 4});
    auto b = add_noise(f, grid, MaskSpec::all(4), {15.0, 4});
    auto c = add_noise(f, grid, MaskSpec::all(4), {15.0, 5});
    CHECK(a == b);
    CHECK_FALSE(a == c);

    auto zero = SnapshotSet::zeros(16, 16, 2, 3);
    CHECK_THROWS_AS(add_noise(zero, grid, MaskSpec::all(4), {10.0, 1}), ValidationError);
    CHECK(add_noise(zero, grid, MaskSpec::all(4), {kInf, 1}) == zero);
    auto n = normalize(f, {0, 3});
    CHECK_THROWS_AS(add_noise(n, grid, MaskSpec::all(4), {10.0, 1}), ValidationError);
    CHECK_THROWS_AS(noise_variance(f, grid, MaskSpec::all(4), std::nan("")), ValidationError);
}
