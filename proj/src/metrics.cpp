#include "lamp/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "lamp/datagen.hpp"
#include "lamp/error.hpp"
#include "lamp/parallel.hpp"
#include "lamp/random.hpp"

namespace lamp {

namespace {

std::string format_double(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (std::isnan(v)) return "nan";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double parse_double(std::string_view text) {
    const std::string s(text);
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw IoError("malformed number '" + s + "'");
    }
}

std::vector<std::string_view> split_fields(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(sep, start);
        out.push_back(line.substr(start, pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

} // namespace

double pred_loss(const SnapshotSet& reconstruction, const SnapshotSet& truth) {
    if (!reconstruction.same_geometry(truth) ||
        reconstruction.snapshots() != truth.snapshots()) {
        throw ValidationError("reconstruction and truth differ in geometry");
    }
    const auto& a = reconstruction.data();
    const auto& b = truth.data();
    double sum = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double d = a[k] - b[k];
        sum += d * d;
    }
    return sum / static_cast<double>(a.size());
}

PowerMap predictive_power(const AttentionModel& model) {
    const std::size_t N = model.patches();
    if (model.pair_losses.size() != N * N) {
        throw ValidationError("model carries no pair losses");
    }
    PowerMap map;
    map.grid = model.grid();
    map.values.assign(N, 0.0);
    if (N > 1) {
        for (std::size_t n = 0; n < N; ++n) {
            double sum = 0.0;
            for (std::size_t m = 0; m < N; ++m) {
                if (m == n) continue;
                sum -= std::log(std::max(model.pair_losses[model.pair(m, n)], model.error_floor));
            }
            map.values[n] = sum / static_cast<double>(N - 1);
        }
    }
    const auto [lo, hi] = std::minmax_element(map.values.begin(), map.values.end());
    map.min = *lo;
    map.max = *hi;
    return map;
}

MaskSpec place_sensors(const PowerMap& map, std::size_t k) {
    const std::size_t N = map.values.size();
    if (k < 1 || k > N) {
        throw ValidationError("sensor count k=" + std::to_string(k) + " outside [1, " +
                              std::to_string(N) + "]");
    }
    std::vector<std::size_t> order(N);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return map.values[a] > map.values[b];
    });
    order.resize(k);
    return MaskSpec(N, std::move(order));
}

std::string power_map_csv(const PowerMap& map) {
    std::ostringstream out;
    out << "# height=" << map.grid.height() << " width=" << map.grid.width()
        << " components=" << map.grid.components() << " patch_size=" << map.grid.patch_size()
        << "\n";
    out << "patch,row,col,power\n";
    for (std::size_t n = 0; n < map.values.size(); ++n) {
        out << n << ',' << map.grid.patch_row(n) << ',' << map.grid.patch_col(n) << ','
            << format_double(map.values[n]) << "\n";
    }
    return out.str();
}

PowerMap parse_power_map_csv(std::string_view text) {
    std::vector<std::string_view> lines;
    for (auto line : split_fields(text, '\n')) {
        if (!line.empty()) lines.push_back(line);
    }
    if (lines.size() < 2 || !lines[0].starts_with("# ")) {
        throw IoError("power map CSV is missing its geometry line");
    }
    std::size_t dims[4] = {0, 0, 0, 0};
    const char* keys[4] = {"height=", "width=", "components=", "patch_size="};
    for (auto field : split_fields(lines[0].substr(2), ' ')) {
        for (int i = 0; i < 4; ++i) {
            const std::string_view key = keys[i];
            if (field.starts_with(key)) {
                const auto digits = field.substr(key.size());
                auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), dims[i]);
                if (ec != std::errc() || ptr != digits.data() + digits.size()) {
                    throw IoError("power map CSV: malformed geometry value");
                }
            }
        }
    }
    PowerMap map;
    try {
        map.grid = PatchGrid(dims[0], dims[1], dims[2], dims[3]);
    } catch (const ValidationError& e) {
        throw IoError(std::string("power map CSV: ") + e.what());
    }
    if (lines[1] != "patch,row,col,power") throw IoError("power map CSV: unexpected header");
    if (lines.size() - 2 != map.grid.count()) {
        throw IoError("power map CSV: row count does not match the grid");
    }
    map.values.resize(map.grid.count());
    for (std::size_t n = 0; n < map.grid.count(); ++n) {
        const auto fields = split_fields(lines[n + 2], ',');
        if (fields.size() != 4 || fields[0] != std::to_string(n)) {
            throw IoError("power map CSV: malformed row " + std::to_string(n));
        }
        map.values[n] = parse_double(fields[3]);
    }
    const auto [lo, hi] = std::minmax_element(map.values.begin(), map.values.end());
    map.min = *lo;
    map.max = *hi;
    return map;
}

double median(std::vector<double> values) {
    if (values.empty()) throw ValidationError("median of an empty sample");
    std::sort(values.begin(), values.end());
    const std::size_t mid = values.size() / 2;
    if (values.size() % 2 == 1) return values[mid];
    return 0.5 * (values[mid - 1] + values[mid]);
}

double normalized_noise_variance(double sigma2, const NormStats& stats) {
    double sum = 0.0;
    for (double s : stats.stddev) sum += sigma2 / (s * s);
    return sum / static_cast<double>(stats.stddev.size());
}

const SweepCell& SweepResult::cell(std::size_t patch_size, std::size_t latent_dim, double snr,
                                   double coverage) const {
    for (const auto& c : cells) {
        if (c.patch_size == patch_size && c.latent_dim == latent_dim && c.snr_db == snr &&
            c.coverage == coverage) {
            return c;
        }
    }
    throw ValidationError("no such sweep cell");
}

std::string SweepResult::to_csv() const {
    std::ostringstream out;
    out << "P,N_e,snr_db,coverage,median_pred_loss,ae_loss,noise_variance,n_arrangements,seed,"
           "status\n";
    for (const auto& c : cells) {
        out << c.patch_size << ',' << c.latent_dim << ',' << format_double(c.snr_db) << ','
            << format_double(c.coverage) << ','
            << (c.skipped ? "nan" : format_double(c.median_pred_loss)) << ','
            << (c.skipped ? "nan" : format_double(c.ae_loss)) << ','
            << (c.skipped ? "nan" : format_double(c.noise_variance)) << ',' << c.n_arrangements
            << ',' << c.seed << ',';
        if (c.skipped) {
            std::string reason = c.reason;
            std::replace(reason.begin(), reason.end(), ',', ';');
            out << "skipped: " << reason;
        } else {
            out << "ok";
        }
        out << "\n";
    }
    return out.str();
}

std::uint64_t arrangement_seed(std::uint64_t base, std::size_t coverage_index, std::size_t a) {
    return derive_seed(base, {0x6d61736bULL, coverage_index, a});
}

std::uint64_t noise_seed(std::uint64_t base, std::size_t snr_index, std::size_t coverage_index,
                         std::size_t a) {
    return derive_seed(base, {0x6e6f6973ULL, snr_index, coverage_index, a});
}

SweepResult run_sweep(const SweepConfig& config) {
    if (config.n_arrangements < 1) throw ValidationError("need at least one arrangement");
    if (config.patch_sizes.empty() || config.latent_dims.empty() || config.snr_db.empty() ||
        config.coverages.empty()) {
        throw ValidationError("every sweep axis needs at least one value");
    }
    for (double c : config.coverages) {
        if (!(c > 0.0) || c > 1.0) throw ValidationError("coverage must lie in (0, 1]");
    }
    for (double s : config.snr_db) {
        if (std::isnan(s) || s == -std::numeric_limits<double>::infinity()) {
            throw ValidationError("SNR must be a number or +inf");
        }
    }

    const SnapshotSet raw =
        config.dataset.normalized() ? denormalize(config.dataset) : config.dataset;
    const auto ranges = split_ranges(raw.snapshots(), config.split);
    const SnapshotSet standardized = normalize(raw, ranges.train);
    const NormStats& stats = *standardized.norm_stats();
    const SnapshotSet train = standardized.slice(ranges.train);
    const SnapshotSet test = standardized.slice(ranges.test);
    const SnapshotSet test_raw = raw.slice(ranges.test);

    SweepResult result;
    result.patch_sizes = config.patch_sizes;
    result.latent_dims = config.latent_dims;
    result.snr_db = config.snr_db;
    result.coverages = config.coverages;
    result.n_arrangements = config.n_arrangements;

    const std::size_t n_models = config.patch_sizes.size() * config.latent_dims.size();
    const std::size_t per_model = config.snr_db.size() * config.coverages.size();
    result.cells.resize(n_models * per_model);

    // One job per (P, N_e); each writes its own block of cells.
    parallel_for(n_models, [&](std::size_t job) {
        const std::size_t P = config.patch_sizes[job / config.latent_dims.size()];
        const std::size_t Ne = config.latent_dims[job % config.latent_dims.size()];
        SweepCell* block = result.cells.data() + job * per_model;
        for (std::size_t s = 0; s < config.snr_db.size(); ++s) {
            for (std::size_t c = 0; c < config.coverages.size(); ++c) {
                auto& cell = block[s * config.coverages.size() + c];
                cell.patch_size = P;
                cell.latent_dim = Ne;
                cell.snr_db = config.snr_db[s];
                cell.coverage = config.coverages[c];
                cell.n_arrangements = config.n_arrangements;
                cell.seed = config.seed;
            }
        }
        try {
            const PatchGrid grid(raw.height(), raw.width(), raw.components(), P);
            auto pod = fit_patch_pod(patchify(train, grid), Ne);
            const double floor = ae_loss(pod, patchify(test, grid));
            auto model = fit_attention_model(std::move(pod), patchify(train, grid), config.attention);
            model.norm_stats = stats;

            for (std::size_t s = 0; s < config.snr_db.size(); ++s) {
                for (std::size_t c = 0; c < config.coverages.size(); ++c) {
                    auto& cell = block[s * config.coverages.size() + c];
                    cell.ae_loss = floor;
                    const std::size_t k = patches_for_coverage(grid.count(), cell.coverage);
                    double noise_sum = 0.0;
                    for (std::size_t a = 0; a < config.n_arrangements; ++a) {
                        const auto mseed = arrangement_seed(config.seed, c, a);
                        const auto mask = MaskSpec::random(grid.count(), k, mseed);
                        SnapshotSet input = test;
                        if (!std::isinf(cell.snr_db)) {
                            const NoiseSpec noise{cell.snr_db, noise_seed(config.seed, s, c, a)};
                            const double sigma2 =
                                noise_variance(test_raw, grid, mask, cell.snr_db);
                            noise_sum += normalized_noise_variance(sigma2, stats);
                            input = apply_normalization(add_noise(test_raw, grid, mask, noise),
                                                        stats);
                        }
                        const auto recon = reconstruct(model, input, mask, config.copy_through);
                        cell.losses.push_back(pred_loss(recon, test));
                        cell.mask_seeds.push_back(mseed);
                    }
                    cell.noise_variance = noise_sum / static_cast<double>(config.n_arrangements);
                    cell.median_pred_loss = median(cell.losses);
                }
            }
        } catch (const Error& e) {
            for (std::size_t i = 0; i < per_model; ++i) {
                block[i].skipped = true;
                block[i].reason = e.what();
                block[i].losses.clear();
                block[i].mask_seeds.clear();
            }
        }
    });
    return result;
}

} // namespace lamp
