#include "doctest.h"

#include <filesystem>
#include <sstream>

#include "json.hpp"
#include "lamp/binary_io.hpp"
#include "lamp/cli.hpp"
#include "lamp/dataset_io.hpp"
#include "lamp/model_io.hpp"

namespace fs = std::filesystem;
using lamp::read_file;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result lamp_run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = lamp::cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::path(LAMP_TEST_TMP) / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

// Small laminar dataset shared by most cases.
fs::path small_dataset(const fs::path& root) {
    const auto dir = root / "data";
    auto r = lamp_run({"generate", "--height", "32", "--width", "32", "--snapshots", "48",
                       "--seed", "3", "--out-dir", dir.string()});
    REQUIRE(r.code == 0);
    return dir / "dataset.lampds";
}

} // namespace

TEST_CASE("train on the laminar surrogate with P=16, N_e=8") {
    const auto root = scratch("train");
    auto g = lamp_run({"generate", "--out-dir", (root / "data").string()});
    REQUIRE(g.code == 0);
    const auto ds = (root / "data" / "dataset.lampds").string();
    auto a = lamp_run({"train", "--dataset", ds, "--patch-size", "16", "--latent-dim", "8",
                       "--out-dir", (root / "a").string()});
    REQUIRE(a.code == 0);
    const auto bytes = read_file(root / "a" / "model.lampmd");
    const auto model = lamp::deserialize_model(bytes);
    CHECK(lamp::serialize_model(model) == bytes);
    CHECK(model.latent_dim() == 8);
    CHECK(model.grid().patch_size() == 16);
    CHECK(model.norm_stats.stddev.size() == 2);

    auto b = lamp_run({"train", "--dataset", ds, "--patch-size", "16", "--latent-dim", "8",
                       "--out-dir", (root / "b").string()});
    REQUIRE(b.code == 0);
    CHECK(read_file(root / "b" / "model.lampmd") == bytes);

    const auto manifest = nlohmann::json::parse(read_file(root / "a" / "manifest.json"));
    CHECK(manifest["command"] == "train");
    CHECK(manifest["formats"]["model"] == "LAMP-MODEL v1");
    CHECK(manifest["diagnostics"].contains("ae_loss_train"));
}

TEST_CASE("train rejects P=7 on a 64x64 grid with exit 2") {
    const auto root = scratch("p7");
    REQUIRE(lamp_run({"generate", "--out-dir", (root / "data").string()}).code == 0);
    auto r = lamp_run({"train", "--dataset", (root / "data" / "dataset.lampds").string(),
                       "--patch-size", "7", "--out-dir", (root / "m").string()});
    CHECK(r.code == 2);
    CHECK(r.err.find("P=7") != std::string::npos);
    CHECK(r.err.find("divide") != std::string::npos);
    CHECK_FALSE(fs::exists(root / "m" / "manifest.json"));
}

TEST_CASE("usage, validation and I/O exit codes") {
    const auto root = scratch("codes");
    const auto ds = small_dataset(root).string();
    CHECK(lamp_run({}).code == 2);
    CHECK(lamp_run({"frobnicate"}).code == 2);
    CHECK(lamp_run({"train"}).code == 2);
    CHECK(lamp_run({"train", "--dataset", ds, "--latent-dim", "9999", "--patch-size", "8",
                    "--out-dir", (root / "x").string()})
              .code == 2);
    CHECK(lamp_run({"train", "--dataset", (root / "nope.lampds").string(), "--out-dir",
                    (root / "x").string()})
              .code == 3);
    CHECK(lamp_run({"train", "--dataset", ds, "--patch-size", "8", "--budget-bytes", "100",
                    "--out-dir", (root / "x").string()})
              .code == 2);
    CHECK(lamp_run({"sweep", "--dataset", ds, "--snr-db", "loud", "--out-dir",
                    (root / "x").string()})
              .code == 2);
    // A file where the output directory should go.
    lamp::write_file_atomic(root / "blocker", "x");
    CHECK(lamp_run({"generate", "--height", "8", "--width", "8", "--snapshots", "4",
                    "--out-dir", (root / "blocker" / "sub").string()})
              .code == 3);
    auto bad = root / "bad.lampds";
    lamp::write_file_atomic(bad, "LAMPDS01garbage");
    CHECK(lamp_run({"train", "--dataset", bad.string(), "--out-dir", (root / "y").string()}).code == 3);
}

TEST_CASE("compare: mismatched geometry exits 2") {
    const auto root = scratch("mismatch");
    const auto ds = small_dataset(root).string();
    REQUIRE(lamp_run({"train", "--dataset", ds, "--patch-size", "8", "--latent-dim", "4",
                      "--out-dir", (root / "m").string()})
                .code == 0);
    REQUIRE(lamp_run({"generate", "--height", "64", "--width", "32", "--snapshots", "48",
                      "--out-dir", (root / "other").string()})
                .code == 0);
    auto r = lamp_run({"compare", "--dataset", (root / "other" / "dataset.lampds").string(),
                       "--model", (root / "m" / "model.lampmd").string(), "--coverage", "0.25",
                       "--out-dir", (root / "c").string()});
    CHECK(r.code == 2);
}

TEST_CASE("compare at full coverage reports both floors") {
    const auto root = scratch("compare_full");
    const auto ds = small_dataset(root).string();
    REQUIRE(lamp_run({"train", "--dataset", ds, "--patch-size", "8", "--latent-dim", "4",
                      "--out-dir", (root / "m").string()})
                .code == 0);
    auto r = lamp_run({"compare", "--dataset", ds, "--model", (root / "m" / "model.lampmd").string(),
                       "--coverage", "1", "--out-dir", (root / "c").string()});
    REQUIRE(r.code == 0);
    const auto csv = read_file(root / "c" / "compare.csv");
    CHECK(csv.rfind("coverage,snr_db,latent_dim,gappy_modes,lamp_pred_loss,gappy_pred_loss,ratio\n", 0) == 0);
    for (const char* f : {"truth.ppm", "lamp.ppm", "gappy.ppm", "mask.csv", "manifest.json"})
        CHECK(fs::exists(root / "c" / f));
}

TEST_CASE("every command replays byte-identically from its manifest") {
    const auto root = scratch("replay");
    const auto ds = small_dataset(root).string();
    const auto model = (root / "m" / "model.lampmd").string();
    std::vector<std::vector<std::string>> commands = {
        {"train", "--dataset", ds, "--patch-size", "8", "--latent-dim", "4", "--out-dir",
         (root / "m").string()},
        {"reconstruct", "--dataset", ds, "--model", model, "--coverage", "0.25", "--snr-db", "20",
         "--seed", "5", "--out-dir", (root / "r").string()},
        {"sweep", "--dataset", ds, "--patch-size", "8,16", "--latent-dim", "2,4", "--coverage",
         "0.25,0.5", "--snr-db", "inf,20", "--arrangements", "3", "--out-dir",
         (root / "s").string()},
        {"power-map", "--model", model, "--out-dir", (root / "p").string()},
        {"place-sensors", "--sensors-from", (root / "p" / "powermap.csv").string(), "--coverage",
         "0.25", "--out-dir", (root / "k").string()},
        {"gappy", "--dataset", ds, "--patch-size", "8", "--latent-dim", "4", "--coverage", "0.5",
         "--out-dir", (root / "g").string()},
        {"compare", "--dataset", ds, "--model", model, "--sensors-from",
         (root / "p" / "powermap.csv").string(), "--coverage", "0.25", "--out-dir",
         (root / "c").string()},
    };
    for (const auto& args : commands) {
        CAPTURE(args[0]);
        auto first = lamp_run(args);
        REQUIRE(first.code == 0);
        const fs::path out_dir = args.back();
        const fs::path again = out_dir.string() + "_replay";
        auto second = lamp_run({"replay", (out_dir / "manifest.json").string(), "--out-dir",
                                again.string()});
        REQUIRE(second.code == 0);
        std::size_t compared = 0;
        for (const auto& entry : fs::directory_iterator(out_dir)) {
            const auto name = entry.path().filename();
            if (name == "manifest.json") continue;
            CAPTURE(name.string());
            CHECK(read_file(entry.path()) == read_file(again / name));
            ++compared;
        }
        CHECK(compared > 0);
        // The manifests differ only in the recorded output directory.
        auto m1 = nlohmann::json::parse(read_file(out_dir / "manifest.json"));
        auto m2 = nlohmann::json::parse(read_file(again / "manifest.json"));
        m2["config"]["out_dir"] = m1["config"]["out_dir"];
        CHECK(m1 == m2);
    }
    CHECK(lamp_run({"replay", (root / "missing.json").string()}).code == 3);
}

TEST_CASE("sweep and sensor outputs have the documented shape") {
    const auto root = scratch("shapes");
    const auto ds = small_dataset(root).string();
    REQUIRE(lamp_run({"sweep", "--dataset", ds, "--patch-size", "8,5", "--latent-dim", "2",
                      "--coverage", "0.25", "--arrangements", "2", "--out-dir",
                      (root / "s").string()})
                .code == 0);
    const auto csv = read_file(root / "s" / "sweep.csv");
    CHECK(csv.find("\n8,2,inf,0.25,") != std::string::npos);
    CHECK(csv.find("\n5,2,inf,0.25,nan,nan,nan,2,0,skipped: ") != std::string::npos);

    REQUIRE(lamp_run({"train", "--dataset", ds, "--patch-size", "8", "--latent-dim", "3",
                      "--out-dir", (root / "m").string()})
                .code == 0);
    REQUIRE(lamp_run({"power-map", "--model", (root / "m" / "model.lampmd").string(), "--out-dir",
                      (root / "p").string()})
                .code == 0);
    REQUIRE(lamp_run({"place-sensors", "--sensors-from", (root / "p" / "powermap.csv").string(),
                      "--sensor-count", "3", "--out-dir", (root / "k").string()})
                .code == 0);
    const auto sensors = read_file(root / "k" / "sensors.csv");
    CHECK(std::count(sensors.begin(), sensors.end(), '\n') == 4);
    const auto ppm = read_file(root / "p" / "powermap.ppm");
    CHECK(ppm.rfind("P6\n4 4\n255\n", 0) == 0);
}
