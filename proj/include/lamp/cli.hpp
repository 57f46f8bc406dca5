#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace lamp::cli {

/// Fully resolved configuration of one CLI invocation. Every run records it
/// in its manifest, and `replay` re-executes from it.
struct RunConfig {
    std::string command;
    std::string dataset;
    std::string model;
    std::string out_dir = ".";
    std::string sensors_from;

    // generate
    std::string kind = "laminar";
    std::size_t height = 64;
    std::size_t width = 64;
    std::size_t snapshots = 160;
    std::size_t harmonics = 6;
    std::size_t modes = 40;
    bool inert_border = false;

    std::vector<std::size_t> patch_sizes{16};
    std::vector<std::size_t> latent_dims{8};
    std::vector<double> coverages{0.1};
    std::vector<std::string> snr_db{"inf"};
    std::uint64_t seed = 0;
    std::size_t n_arrangements = 25;
    double ridge_lambda = 1e-8;
    double error_floor = 1e-12;
    bool copy_through = true;
    bool intercept = true;
    std::uint64_t budget_bytes = 2ULL << 30;
    std::size_t gappy_modes = 0; // 0: match the latent dimension
    std::size_t sensor_count = 0; // 0: derive from coverage
    std::size_t snapshot = 0;     // image snapshot index within the test block
    double train_fraction = 0.75;
    double test_fraction = 0.20;
    double gap_fraction = 0.05;
};

/// Executes a resolved configuration; throws lamp::Error on failure.
void execute(const RunConfig& config, std::ostream& out);

/// Parses argv-style arguments (without the program name), runs the
/// command, and returns the process exit code: 0 ok, 2 usage/validation,
/// 3 I/O, 4 numerical failure.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace lamp::cli
