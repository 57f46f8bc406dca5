#include "lamp/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "lamp/baseline.hpp"
#include "lamp/binary_io.hpp"
#include "lamp/dataset_io.hpp"
#include "lamp/datagen.hpp"
#include "lamp/error.hpp"
#include "lamp/image.hpp"
#include "lamp/metrics.hpp"
#include "lamp/model_io.hpp"

namespace lamp::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kManifestFormat = "lamp-manifest v1";

std::string fmt(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (std::isnan(v)) return "nan";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double parse_snr(const std::string& token) {
    std::string t = token;
    std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
    if (t == "inf" || t == "+inf" || t == "infinity") return std::numeric_limits<double>::infinity();
    try {
        std::size_t used = 0;
        const double v = std::stod(t, &used);
        if (used != t.size() || std::isnan(v) || std::isinf(v)) throw std::invalid_argument(t);
        return v;
    } catch (const std::exception&) {
        throw ValidationError("invalid --snr-db value '" + token + "'");
    }
}

json to_json(const RunConfig& c) {
    return json{
        {"command", c.command},
        {"dataset", c.dataset},
        {"model", c.model},
        {"out_dir", c.out_dir},
        {"sensors_from", c.sensors_from},
        {"kind", c.kind},
        {"height", c.height},
        {"width", c.width},
        {"snapshots", c.snapshots},
        {"harmonics", c.harmonics},
        {"modes", c.modes},
        {"inert_border", c.inert_border},
        {"patch_sizes", c.patch_sizes},
        {"latent_dims", c.latent_dims},
        {"coverages", c.coverages},
        {"snr_db", c.snr_db},
        {"seed", c.seed},
        {"n_arrangements", c.n_arrangements},
        {"ridge_lambda", c.ridge_lambda},
        {"error_floor", c.error_floor},
        {"copy_through", c.copy_through},
        {"intercept", c.intercept},
        {"budget_bytes", c.budget_bytes},
        {"gappy_modes", c.gappy_modes},
        {"sensor_count", c.sensor_count},
        {"snapshot", c.snapshot},
        {"train_fraction", c.train_fraction},
        {"test_fraction", c.test_fraction},
        {"gap_fraction", c.gap_fraction},
    };
}

RunConfig from_json(const json& j) {
    RunConfig c;
    try {
        j.at("command").get_to(c.command);
        j.at("dataset").get_to(c.dataset);
        j.at("model").get_to(c.model);
        j.at("out_dir").get_to(c.out_dir);
        j.at("sensors_from").get_to(c.sensors_from);
        j.at("kind").get_to(c.kind);
        j.at("height").get_to(c.height);
        j.at("width").get_to(c.width);
        j.at("snapshots").get_to(c.snapshots);
        j.at("harmonics").get_to(c.harmonics);
        j.at("modes").get_to(c.modes);
        j.at("inert_border").get_to(c.inert_border);
        j.at("patch_sizes").get_to(c.patch_sizes);
        j.at("latent_dims").get_to(c.latent_dims);
        j.at("coverages").get_to(c.coverages);
        j.at("snr_db").get_to(c.snr_db);
        j.at("seed").get_to(c.seed);
        j.at("n_arrangements").get_to(c.n_arrangements);
        j.at("ridge_lambda").get_to(c.ridge_lambda);
        j.at("error_floor").get_to(c.error_floor);
        j.at("copy_through").get_to(c.copy_through);
        j.at("intercept").get_to(c.intercept);
        j.at("budget_bytes").get_to(c.budget_bytes);
        j.at("gappy_modes").get_to(c.gappy_modes);
        j.at("sensor_count").get_to(c.sensor_count);
        j.at("snapshot").get_to(c.snapshot);
        j.at("train_fraction").get_to(c.train_fraction);
        j.at("test_fraction").get_to(c.test_fraction);
        j.at("gap_fraction").get_to(c.gap_fraction);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("manifest config is incomplete: ") + e.what());
    }
    return c;
}

/// Collects what a run produced; written last so its presence marks success.
class Manifest {
public:
    explicit Manifest(const RunConfig& config) {
        doc_["command"] = config.command;
        doc_["config"] = to_json(config);
        doc_["formats"] = {{"dataset", std::string(kDatasetFormat)},
                           {"model", std::string(kModelFormat)},
                           {"manifest", kManifestFormat}};
        doc_["outputs"] = json::array();
        doc_["diagnostics"] = json::object();
        doc_["image_ranges"] = json::object();
    }

    void output(const std::string& name) { doc_["outputs"].push_back(name); }
    void image(const std::string& name, const RenderedImage& img) {
        output(name);
        doc_["image_ranges"][name] = {{"min", img.min}, {"max", img.max}};
    }
    json& diagnostics() { return doc_["diagnostics"]; }

    void write(const fs::path& dir) const {
        write_file_atomic(dir / "manifest.json", doc_.dump(2) + "\n");
    }

private:
    json doc_;
};

struct Context {
    const RunConfig& config;
    fs::path out_dir;
    Manifest manifest;
    std::ostream& log;

    void write_text(const std::string& name, const std::string& text) {
        write_file_atomic(out_dir / name, text);
        manifest.output(name);
    }
    void write_image(const std::string& name, const SnapshotSet& field, std::size_t snapshot,
                     const std::optional<MaskOutline>& outline = std::nullopt) {
        manifest.image(name, emit_field_image(field, snapshot, 0, out_dir / name, outline));
    }
};

void require_input(const std::string& path, const char* flag) {
    if (path.empty()) throw ValidationError(std::string(flag) + " is required");
    std::error_code ec;
    if (!fs::is_regular_file(path, ec)) throw IoError("cannot read " + path);
}

fs::path prepare_out_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory " + dir);
    return fs::path(dir);
}

SplitSpec split_spec(const RunConfig& c) {
    return SplitSpec{c.train_fraction, c.test_fraction, c.gap_fraction};
}

SnapshotSet raw_of(const SnapshotSet& set) {
    return set.normalized() ? denormalize(set) : set;
}

std::size_t first(const std::vector<std::size_t>& v, const char* flag) {
    if (v.empty()) throw ValidationError(std::string(flag) + " needs a value");
    return v.front();
}

double first_coverage(const RunConfig& c) {
    if (c.coverages.empty()) throw ValidationError("--coverage needs a value");
    return c.coverages.front();
}

double first_snr(const RunConfig& c) {
    if (c.snr_db.empty()) throw ValidationError("--snr-db needs a value");
    return parse_snr(c.snr_db.front());
}

void check_geometry(const PatchGrid& grid, const SnapshotSet& set) {
    if (!grid.matches(set)) {
        std::ostringstream msg;
        msg << "dataset geometry " << set.height() << "x" << set.width() << "x"
            << set.components() << " does not match model geometry " << grid.height() << "x"
            << grid.width() << "x" << grid.components();
        throw ValidationError(msg.str());
    }
}

MaskSpec select_mask(const RunConfig& c, const PatchGrid& grid) {
    const std::size_t k =
        c.sensor_count ? c.sensor_count : patches_for_coverage(grid.count(), first_coverage(c));
    if (!c.sensors_from.empty()) {
        auto map = parse_power_map_csv(read_file(c.sensors_from));
        if (!(map.grid == grid)) {
            throw ValidationError("power map grid does not match the model grid");
        }
        return place_sensors(map, k);
    }
    if (k > grid.count()) throw ValidationError("sensor count exceeds the patch count");
    return MaskSpec::random(grid.count(), k, arrangement_seed(c.seed, 0, 0));
}

/// Test block in raw units and standardized with `stats`, plus the noisy
/// standardized input for `mask`.
struct EvalInputs {
    SnapshotSet truth;
    SnapshotSet input;
    double noise_variance = 0.0; // normalized units
};

EvalInputs evaluation_inputs(const RunConfig& c, const SnapshotSet& dataset,
                             const NormStats& stats, const PatchGrid& grid,
                             const MaskSpec& mask) {
    const SnapshotSet raw = raw_of(dataset);
    const auto ranges = split_ranges(raw.snapshots(), split_spec(c));
    const SnapshotSet test_raw = raw.slice(ranges.test);
    if (c.snapshot >= test_raw.snapshots()) {
        throw ValidationError("--snapshot " + std::to_string(c.snapshot) +
                              " outside the test block of " +
                              std::to_string(test_raw.snapshots()) + " snapshots");
    }
    EvalInputs in;
    in.truth = apply_normalization(test_raw, stats);
    const double snr = first_snr(c);
    if (std::isinf(snr)) {
        in.input = in.truth;
    } else {
        const NoiseSpec noise{snr, noise_seed(c.seed, 0, 0, 0)};
        in.noise_variance =
            normalized_noise_variance(noise_variance(test_raw, grid, mask, snr), stats);
        in.input = apply_normalization(add_noise(test_raw, grid, mask, noise), stats);
    }
    return in;
}

/// Input as seen by the model: masked patches zeroed.
SnapshotSet masked_view(const SnapshotSet& input, const PatchGrid& grid, const MaskSpec& mask) {
    auto patches = patchify(input, grid);
    for (std::size_t t = 0; t < patches.snapshots(); ++t) {
        for (std::size_t n = 0; n < grid.count(); ++n) {
            if (mask.is_unmasked(n)) continue;
            auto p = patches.patch(t, n);
            std::fill(p.begin(), p.end(), 0.0);
        }
    }
    auto out = unpatchify(patches);
    out.set_norm_stats(input.norm_stats());
    return out;
}

std::string mask_csv(const MaskSpec& mask) {
    std::ostringstream out;
    out << "patch\n";
    for (std::size_t n : mask.unmasked()) out << n << "\n";
    return out.str();
}

// ---------------------------------------------------------------------------

void cmd_generate(Context& ctx) {
    const auto& c = ctx.config;
    FlowSpec spec;
    spec.kind = parse_flow_kind(c.kind);
    spec.height = c.height;
    spec.width = c.width;
    spec.snapshots = c.snapshots;
    spec.seed = c.seed;
    spec.laminar.harmonics = c.harmonics;
    spec.laminar.inert_border = c.inert_border;
    spec.chaotic.modes = c.modes;
    const auto set = generate(spec);
    write_dataset(ctx.out_dir / "dataset.lampds", set);
    ctx.manifest.output("dataset.lampds");
    ctx.log << "wrote " << set.snapshots() << " snapshots of " << set.height() << "x"
            << set.width() << " to " << (ctx.out_dir / "dataset.lampds").string() << "\n";
}

void cmd_train(Context& ctx) {
    const auto& c = ctx.config;
    const std::size_t P = first(c.patch_sizes, "--patch-size");
    const std::size_t Ne = first(c.latent_dims, "--latent-dim");
    const SnapshotSet raw = raw_of(read_dataset(c.dataset));
    const PatchGrid grid(raw.height(), raw.width(), raw.components(), P);
    const auto bytes = model_file_size(raw.height(), raw.width(), raw.components(), P, Ne);
    if (bytes > c.budget_bytes) {
        throw ValidationError("model would need " + std::to_string(bytes) +
                              " bytes, over the --budget-bytes limit of " +
                              std::to_string(c.budget_bytes));
    }
    const auto ranges = split_ranges(raw.snapshots(), split_spec(c));
    const SnapshotSet standardized = normalize(raw, ranges.train);
    const auto train = patchify(standardized.slice(ranges.train), grid);
    const auto test = patchify(standardized.slice(ranges.test), grid);

    auto pod = fit_patch_pod(train, Ne);
    const double ae_train = ae_loss(pod, train);
    const double ae_test = ae_loss(pod, test);
    auto model = fit_attention_model(std::move(pod), train,
                                     AttentionOptions{c.ridge_lambda, c.error_floor, c.intercept});
    model.norm_stats = *standardized.norm_stats();
    write_model(ctx.out_dir / "model.lampmd", model);
    ctx.manifest.output("model.lampmd");

    std::vector<double> off_diag;
    const std::size_t N = model.patches();
    for (std::size_t m = 0; m < N; ++m) {
        for (std::size_t n = 0; n < N; ++n) {
            if (m != n) off_diag.push_back(model.pair_losses[model.pair(m, n)]);
        }
    }
    auto& d = ctx.manifest.diagnostics();
    d["ae_loss_train"] = ae_train;
    d["ae_loss_test"] = ae_test;
    d["train_snapshots"] = ranges.train.size();
    d["test_snapshots"] = ranges.test.size();
    d["patches"] = N;
    d["model_bytes"] = bytes;
    if (!off_diag.empty()) {
        const auto [lo, hi] = std::minmax_element(off_diag.begin(), off_diag.end());
        d["pair_loss"] = {{"min", *lo}, {"median", median(off_diag)}, {"max", *hi}};
    }
    ctx.log << "trained P=" << P << " N_e=" << Ne << " (N=" << N << "), ae_loss train "
            << fmt(ae_train) << " test " << fmt(ae_test) << "\n";
}

void cmd_reconstruct(Context& ctx) {
    const auto& c = ctx.config;
    const auto model = read_model(c.model);
    const auto dataset = read_dataset(c.dataset);
    const auto& grid = model.grid();
    check_geometry(grid, dataset);
    const auto mask = select_mask(c, grid);
    const auto in = evaluation_inputs(c, dataset, model.norm_stats, grid, mask);

    const auto recon = reconstruct(model, in.input, mask, c.copy_through);
    const double loss = pred_loss(recon, in.truth);
    const double floor = ae_loss(model.pod, patchify(in.truth, grid));

    write_dataset(ctx.out_dir / "reconstruction.lampds", recon);
    ctx.manifest.output("reconstruction.lampds");
    std::ostringstream csv;
    csv << "coverage,snr_db,pred_loss,ae_loss,noise_variance\n"
        << fmt(mask.coverage()) << ',' << fmt(first_snr(c)) << ',' << fmt(loss) << ','
        << fmt(floor) << ',' << fmt(in.noise_variance) << "\n";
    ctx.write_text("reconstruct.csv", csv.str());
    ctx.write_text("mask.csv", mask_csv(mask));

    const MaskOutline outline{grid, mask};
    ctx.write_image("truth.ppm", in.truth, c.snapshot);
    ctx.write_image("input.ppm", masked_view(in.input, grid, mask), c.snapshot, outline);
    ctx.write_image("reconstruction.ppm", recon, c.snapshot, outline);
    ctx.manifest.diagnostics()["pred_loss"] = loss;
    ctx.manifest.diagnostics()["ae_loss_test"] = floor;
    ctx.log << "L_pred " << fmt(loss) << " (ae floor " << fmt(floor) << ", coverage "
            << fmt(mask.coverage()) << ")\n";
}

void cmd_sweep(Context& ctx) {
    const auto& c = ctx.config;
    SweepConfig sweep;
    sweep.dataset = read_dataset(c.dataset);
    sweep.split = split_spec(c);
    sweep.patch_sizes = c.patch_sizes;
    sweep.latent_dims = c.latent_dims;
    for (const auto& s : c.snr_db) sweep.snr_db.push_back(parse_snr(s));
    sweep.coverages = c.coverages;
    sweep.n_arrangements = c.n_arrangements;
    sweep.seed = c.seed;
    sweep.attention = AttentionOptions{c.ridge_lambda, c.error_floor, c.intercept};
    sweep.copy_through = c.copy_through;
    const auto result = run_sweep(sweep);
    ctx.write_text("sweep.csv", result.to_csv());

    // One log10-loss heatmap per (SNR, coverage): rows P, columns N_e.
    const std::size_t rows = result.patch_sizes.size();
    const std::size_t cols = result.latent_dims.size();
    for (std::size_t s = 0; s < result.snr_db.size(); ++s) {
        for (std::size_t v = 0; v < result.coverages.size(); ++v) {
            std::vector<double> cells(rows * cols, std::numeric_limits<double>::quiet_NaN());
            double lowest = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < rows; ++i) {
                for (std::size_t j = 0; j < cols; ++j) {
                    const auto& cell = result.cell(result.patch_sizes[i], result.latent_dims[j],
                                                   result.snr_db[s], result.coverages[v]);
                    if (cell.skipped) continue;
                    cells[i * cols + j] = std::log10(std::max(cell.median_pred_loss, 1e-300));
                    lowest = std::min(lowest, cells[i * cols + j]);
                }
            }
            if (std::isinf(lowest)) lowest = 0.0;
            for (auto& x : cells) {
                if (std::isnan(x)) x = lowest;
            }
            const SnapshotSet heat(rows, cols, 1, 1, std::move(cells));
            ctx.write_image("sweep_snr" + std::to_string(s) + "_cov" + std::to_string(v) + ".ppm",
                            heat, 0);
        }
    }
    std::size_t skipped = 0;
    for (const auto& cell : result.cells) skipped += cell.skipped ? 1 : 0;
    ctx.manifest.diagnostics()["cells"] = result.cells.size();
    ctx.manifest.diagnostics()["skipped_cells"] = skipped;
    ctx.log << "sweep finished: " << result.cells.size() << " cells, " << skipped
            << " skipped\n";
}

void cmd_power_map(Context& ctx) {
    const auto model = read_model(ctx.config.model);
    const auto map = predictive_power(model);
    ctx.write_text("powermap.csv", power_map_csv(map));
    const SnapshotSet field(map.grid.rows(), map.grid.cols(), 1, 1, map.values);
    ctx.write_image("powermap.ppm", field, 0);
    ctx.log << "predictive power range [" << fmt(map.min) << ", " << fmt(map.max) << "]\n";
}

void cmd_place_sensors(Context& ctx) {
    const auto& c = ctx.config;
    require_input(c.sensors_from, "--sensors-from");
    const auto map = parse_power_map_csv(read_file(c.sensors_from));
    const std::size_t k = c.sensor_count
                              ? c.sensor_count
                              : patches_for_coverage(map.grid.count(), first_coverage(c));
    const auto mask = place_sensors(map, k);
    ctx.write_text("sensors.csv", mask_csv(mask));
    ctx.log << "placed " << mask.unmasked().size() << " sensors\n";
}

struct GappyRun {
    SnapshotSet reconstruction;
    double loss = 0.0;
    std::size_t modes = 0;
};

GappyRun run_gappy(const RunConfig& c, const SnapshotSet& dataset, const NormStats& stats,
                   const PatchGrid& grid, const MaskSpec& mask, const SnapshotSet& input,
                   const SnapshotSet& truth, std::size_t default_modes) {
    const SnapshotSet raw = raw_of(dataset);
    const auto ranges = split_ranges(raw.snapshots(), split_spec(c));
    const auto train = apply_normalization(raw.slice(ranges.train), stats);
    GappyRun run;
    run.modes = c.gappy_modes ? c.gappy_modes : default_modes;
    const auto model = fit_gappy(train, run.modes);
    run.reconstruction = reconstruct_gappy(model, input, grid, mask);
    run.loss = pred_loss(run.reconstruction, truth);
    return run;
}

void cmd_gappy(Context& ctx) {
    const auto& c = ctx.config;
    const auto dataset = read_dataset(c.dataset);
    const SnapshotSet raw = raw_of(dataset);
    const PatchGrid grid(raw.height(), raw.width(), raw.components(),
                         first(c.patch_sizes, "--patch-size"));
    const auto ranges = split_ranges(raw.snapshots(), split_spec(c));
    const NormStats stats = *normalize(raw, ranges.train).norm_stats();
    const auto mask = select_mask(c, grid);
    const auto in = evaluation_inputs(c, dataset, stats, grid, mask);
    const auto run = run_gappy(c, dataset, stats, grid, mask, in.input, in.truth,
                               first(c.latent_dims, "--latent-dim"));

    std::ostringstream csv;
    csv << "coverage,snr_db,gappy_modes,pred_loss,noise_variance\n"
        << fmt(mask.coverage()) << ',' << fmt(first_snr(c)) << ',' << run.modes << ','
        << fmt(run.loss) << ',' << fmt(in.noise_variance) << "\n";
    ctx.write_text("gappy.csv", csv.str());
    ctx.write_text("mask.csv", mask_csv(mask));
    write_dataset(ctx.out_dir / "gappy.lampds", run.reconstruction);
    ctx.manifest.output("gappy.lampds");
    ctx.write_image("gappy.ppm", run.reconstruction, c.snapshot, MaskOutline{grid, mask});
    ctx.manifest.diagnostics()["pred_loss"] = run.loss;
    ctx.log << "gappy POD r=" << run.modes << " L_pred " << fmt(run.loss) << "\n";
}

void cmd_compare(Context& ctx) {
    const auto& c = ctx.config;
    const auto model = read_model(c.model);
    const auto dataset = read_dataset(c.dataset);
    const auto& grid = model.grid();
    check_geometry(grid, dataset);
    const auto mask = select_mask(c, grid);
    const auto in = evaluation_inputs(c, dataset, model.norm_stats, grid, mask);

    const auto lamp_recon = reconstruct(model, in.input, mask, c.copy_through);
    const double lamp_loss = pred_loss(lamp_recon, in.truth);
    const auto gappy = run_gappy(c, dataset, model.norm_stats, grid, mask, in.input, in.truth,
                                 model.latent_dim());
    const double ratio = lamp_loss / gappy.loss;

    std::ostringstream csv;
    csv << "coverage,snr_db,latent_dim,gappy_modes,lamp_pred_loss,gappy_pred_loss,ratio\n"
        << fmt(mask.coverage()) << ',' << fmt(first_snr(c)) << ',' << model.latent_dim() << ','
        << gappy.modes << ',' << fmt(lamp_loss) << ',' << fmt(gappy.loss) << ',' << fmt(ratio)
        << "\n";
    ctx.write_text("compare.csv", csv.str());
    ctx.write_text("mask.csv", mask_csv(mask));

    const MaskOutline outline{grid, mask};
    ctx.write_image("truth.ppm", in.truth, c.snapshot);
    ctx.write_image("lamp.ppm", lamp_recon, c.snapshot, outline);
    ctx.write_image("gappy.ppm", gappy.reconstruction, c.snapshot, outline);
    auto& d = ctx.manifest.diagnostics();
    d["lamp_pred_loss"] = lamp_loss;
    d["gappy_pred_loss"] = gappy.loss;
    d["ratio"] = ratio;
    ctx.log << "LAMP " << fmt(lamp_loss) << " vs gappy POD " << fmt(gappy.loss) << " (ratio "
            << fmt(ratio) << ")\n";
}

void add_common(CLI::App* app, RunConfig& c) {
    app->add_option("--out-dir", c.out_dir, "Output directory");
    app->add_option("--seed", c.seed, "Seed for masks, noise and generators");
}

void add_split(CLI::App* app, RunConfig& c) {
    app->add_option("--train-fraction", c.train_fraction);
    app->add_option("--test-fraction", c.test_fraction);
    app->add_option("--gap-fraction", c.gap_fraction);
}

void add_eval(CLI::App* app, RunConfig& c) {
    app->add_option("--coverage", c.coverages, "Unmasked patch fraction")->delimiter(',');
    app->add_option("--snr-db", c.snr_db, "Input SNR in dB (inf = noise-free)")->delimiter(',');
    app->add_option("--sensors-from", c.sensors_from, "Power-map CSV; unmask its top patches");
    app->add_option("--sensor-count", c.sensor_count, "Number of unmasked patches");
    app->add_option("--snapshot", c.snapshot, "Test snapshot rendered to images");
}

void add_fit(CLI::App* app, RunConfig& c) {
    app->add_option("--ridge-lambda", c.ridge_lambda, "Relative ridge penalty");
    app->add_flag("!--no-intercept", c.intercept, "Force attention intercepts to zero");
    app->add_option("--error-floor", c.error_floor);
}

} // namespace

void execute(const RunConfig& config, std::ostream& out) {
    static const std::vector<std::string> known = {"generate", "train", "reconstruct",
                                                   "sweep", "power-map", "place-sensors",
                                                   "gappy", "compare"};
    if (std::find(known.begin(), known.end(), config.command) == known.end()) {
        throw ValidationError("unknown command '" + config.command + "'");
    }
    // Inputs are checked before any output is touched.
    const bool needs_dataset = config.command == "train" || config.command == "reconstruct" ||
                               config.command == "sweep" || config.command == "gappy" ||
                               config.command == "compare";
    const bool needs_model = config.command == "reconstruct" || config.command == "power-map" ||
                             config.command == "compare";
    if (needs_dataset) require_input(config.dataset, "--dataset");
    if (needs_model) require_input(config.model, "--model");
    if (!config.sensors_from.empty()) require_input(config.sensors_from, "--sensors-from");
    for (const auto& s : config.snr_db) parse_snr(s);

    Context ctx{config, prepare_out_dir(config.out_dir), Manifest(config), out};
    if (config.command == "generate") cmd_generate(ctx);
    else if (config.command == "train") cmd_train(ctx);
    else if (config.command == "reconstruct") cmd_reconstruct(ctx);
    else if (config.command == "sweep") cmd_sweep(ctx);
    else if (config.command == "power-map") cmd_power_map(ctx);
    else if (config.command == "place-sensors") cmd_place_sensors(ctx);
    else if (config.command == "gappy") cmd_gappy(ctx);
    else if (config.command == "compare") cmd_compare(ctx);
    ctx.manifest.write(ctx.out_dir);
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Masked flow reconstruction with latent attention on patch-wise POD"};
    app.require_subcommand(1);
    RunConfig c;

    auto* gen = app.add_subcommand("generate", "Write a synthetic LAMP-DS v1 dataset");
    add_common(gen, c);
    gen->add_option("--kind", c.kind)->check(CLI::IsMember({"laminar", "chaotic"}));
    gen->add_option("--height", c.height);
    gen->add_option("--width", c.width);
    gen->add_option("--snapshots", c.snapshots);
    gen->add_option("--harmonics", c.harmonics, "Laminar harmonics including the mean flow");
    gen->add_option("--modes", c.modes, "Chaotic travelling-wave count");
    gen->add_flag("--inert-border", c.inert_border, "Laminar wake confined to a central band");

    auto* train = app.add_subcommand("train", "Fit patch POD and attention tensors");
    add_common(train, c);
    add_split(train, c);
    add_fit(train, c);
    train->add_option("--dataset", c.dataset)->required();
    train->add_option("--patch-size", c.patch_sizes)->expected(1);
    train->add_option("--latent-dim", c.latent_dims)->expected(1);
    train->add_option("--budget-bytes", c.budget_bytes, "Maximum model size");

    auto* recon = app.add_subcommand("reconstruct", "Masked reconstruction of the test block");
    add_common(recon, c);
    add_split(recon, c);
    add_eval(recon, c);
    recon->add_option("--dataset", c.dataset)->required();
    recon->add_option("--model", c.model)->required();
    recon->add_flag("!--no-copy-through", c.copy_through, "Predict observed patches too");

    auto* sweep = app.add_subcommand("sweep", "Median L_pred over (P, N_e, SNR, coverage)");
    add_common(sweep, c);
    add_split(sweep, c);
    add_fit(sweep, c);
    sweep->add_option("--dataset", c.dataset)->required();
    sweep->add_option("--patch-size", c.patch_sizes)->delimiter(',');
    sweep->add_option("--latent-dim", c.latent_dims)->delimiter(',');
    sweep->add_option("--coverage", c.coverages)->delimiter(',');
    sweep->add_option("--snr-db", c.snr_db)->delimiter(',');
    sweep->add_option("--arrangements", c.n_arrangements);
    sweep->add_flag("!--no-copy-through", c.copy_through);

    auto* power = app.add_subcommand("power-map", "Predictive-power map of a model");
    add_common(power, c);
    power->add_option("--model", c.model)->required();

    auto* place = app.add_subcommand("place-sensors", "Top-k patches of a power map");
    add_common(place, c);
    place->add_option("--sensors-from", c.sensors_from)->required();
    place->add_option("--coverage", c.coverages)->delimiter(',');
    place->add_option("--sensor-count", c.sensor_count);

    auto* gappy = app.add_subcommand("gappy", "Gappy POD reconstruction of the test block");
    add_common(gappy, c);
    add_split(gappy, c);
    add_eval(gappy, c);
    gappy->add_option("--dataset", c.dataset)->required();
    gappy->add_option("--patch-size", c.patch_sizes)->expected(1);
    gappy->add_option("--latent-dim", c.latent_dims)->expected(1);
    gappy->add_option("--gappy-modes", c.gappy_modes, "Global mode count r");

    auto* compare = app.add_subcommand("compare", "LAMP versus gappy POD on identical inputs");
    add_common(compare, c);
    add_split(compare, c);
    add_eval(compare, c);
    compare->add_option("--dataset", c.dataset)->required();
    compare->add_option("--model", c.model)->required();
    compare->add_option("--gappy-modes", c.gappy_modes, "Global mode count r");
    compare->add_flag("!--no-copy-through", c.copy_through);

    std::string manifest_path;
    std::string replay_out;
    auto* replay = app.add_subcommand("replay", "Re-run a command from its manifest");
    replay->add_option("manifest", manifest_path)->required();
    replay->add_option("--out-dir", replay_out, "Override the recorded output directory");

    std::vector<std::string> argv_storage{"lamp"};
    argv_storage.insert(argv_storage.end(), args.begin(), args.end());
    std::vector<const char*> argv;
    for (const auto& a : argv_storage) argv.push_back(a.c_str());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::Success& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return 2;
    }

    try {
        if (replay->parsed()) {
            json doc;
            try {
                doc = json::parse(read_file(manifest_path));
            } catch (const json::exception& e) {
                throw IoError("cannot parse manifest " + manifest_path + ": " + e.what());
            }
            if (!doc.contains("config")) throw ValidationError("manifest has no config section");
            RunConfig recorded = from_json(doc["config"]);
            if (!replay_out.empty()) recorded.out_dir = replay_out;
            execute(recorded, out);
        } else {
            c.command = app.get_subcommands().front()->get_name();
            execute(c, out);
        }
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return e.exit_code();
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

} // namespace lamp::cli
