#include "doctest.h"

#include <cstring>
#include <filesystem>
#include <random>

#include "lamp/binary_io.hpp"
#include "lamp/dataset_io.hpp"
#include "lamp/error.hpp"
#include "lamp/model_io.hpp"

using namespace lamp;

namespace {

// Hand-rolled little-endian encoding, independent of ByteWriter.
void put_u32(std::string& s, std::uint32_t v) {
    const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                                static_cast<unsigned char>(v >> 16),
                                static_cast<unsigned char>(v >> 24)};
    s.append(reinterpret_cast<const char*>(b), 4);
}

void put_f64(std::string& s, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    for (int k = 0; k < 8; ++k) s.push_back(static_cast<char>((bits >> (8 * k)) & 0xff));
}

double get_f64(const std::string& s, std::size_t offset) {
    std::uint64_t bits = 0;
    for (int k = 0; k < 8; ++k)
        bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(s[offset + k])) << (8 * k);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

AttentionModel small_model(bool intercept) {
    std::mt19937_64 rng(42);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<double> data(4 * 4 * 2 * 12);
    for (auto& v : data) v = g(rng);
    SnapshotSet s(4, 4, 2, 12, data);
    auto patched = patchify(s, 2);
    AttentionOptions opts;
    opts.intercept = intercept;
    auto model = fit_attention_model(fit_patch_pod(patched, 3), patched, opts);
    model.norm_stats = NormStats{{0.25, -1.5}, {2.0, 0.5}};
    return model;
}

} // namespace

TEST_CASE("dataset bytes follow the documented layout") {
    SnapshotSet raw(1, 2, 1, 1, {1.5, -2.0});
    std::string expected = "LAMPDS01";
    put_u32(expected, 1);
    put_u32(expected, 2);
    put_u32(expected, 1);
    put_u32(expected, 1);
    expected.push_back('\0');
    put_f64(expected, 1.5);
    put_f64(expected, -2.0);
    CHECK(serialize_dataset(raw) == expected);

    SnapshotSet norm(1, 1, 2, 1, {0.5, 0.25}, NormStats{{3.0, 4.0}, {5.0, 6.0}});
    std::string exp2 = "LAMPDS01";
    put_u32(exp2, 1);
    put_u32(exp2, 1);
    put_u32(exp2, 2);
    put_u32(exp2, 1);
    exp2.push_back('\x01');
    for (double v : {3.0, 5.0, 4.0, 6.0, 0.5, 0.25}) put_f64(exp2, v);
    CHECK(serialize_dataset(norm) == exp2);
}

TEST_CASE("dataset round trip is bit-exact") {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<double> data(3 * 5 * 2 * 4);
    for (auto& v : data) v = g(rng);
    SnapshotSet raw(3, 5, 2, 4, data);
    CHECK(deserialize_dataset(serialize_dataset(raw)) == raw);
    auto n = normalize(raw, {0, 3});
    const auto bytes = serialize_dataset(n);
    CHECK(deserialize_dataset(bytes) == n);
    CHECK(serialize_dataset(deserialize_dataset(bytes)) == bytes);
}

TEST_CASE("dataset reader rejects malformed input") {
    SnapshotSet raw(1, 2, 1, 1, {1.5, -2.0});
    auto bytes = serialize_dataset(raw);
    CHECK_THROWS_AS(deserialize_dataset(bytes + "x"), IoError);
    CHECK_THROWS_AS(deserialize_dataset(bytes.substr(0, bytes.size() - 1)), IoError);
    auto bad = bytes;
    bad[7] = '2';
    CHECK_THROWS_AS(deserialize_dataset(bad), IoError);
    CHECK_THROWS_AS(deserialize_dataset(""), IoError);
    auto flag = bytes;
    flag[24] = '\x07';
    CHECK_THROWS_AS(deserialize_dataset(flag), IoError);
}

TEST_CASE("dataset files round trip on disk") {
    const auto dir = std::filesystem::temp_directory_path() / "lamp_test_io";
    std::filesystem::create_directories(dir);
    SnapshotSet raw(2, 2, 1, 2, {1, 2, 3, 4, 5, 6, 7, 8});
    write_dataset(dir / "d.lampds", raw);
    CHECK(read_dataset(dir / "d.lampds") == raw);
    CHECK_THROWS_AS(read_dataset(dir / "missing.lampds"), IoError);
    CHECK_THROWS_AS(write_dataset(dir / "no_such_dir" / "d.lampds", raw), IoError);
    std::filesystem::remove_all(dir);
}

TEST_CASE("model bytes follow the documented layout") {
    const auto model = small_model(true);
    const auto bytes = serialize_model(model);
    // H=W=4, C=2, P=2 -> N=4, D=8; N_e=3.
    const std::size_t N = 4, D = 8, Ne = 3;
    CHECK(bytes.size() == model_file_size(4, 4, 2, 2, 3));
    CHECK(bytes.size() ==
          8 + 20 + 1 + 16 + 8 * (2 * 2 + N * D * Ne + N * Ne + N * N * Ne * Ne + N * N * Ne + 2 * N * N));
    CHECK(bytes.substr(0, 8) == "LAMPMD01");
    std::string header;
    for (std::uint32_t v : {4u, 4u, 2u, 2u, 3u}) put_u32(header, v);
    CHECK(bytes.substr(8, 20) == header);
    CHECK(bytes[28] == '\x01');
    CHECK(get_f64(bytes, 29) == model.ridge_lambda);
    CHECK(get_f64(bytes, 37) == model.error_floor);
    CHECK(get_f64(bytes, 45) == 0.25);
    CHECK(get_f64(bytes, 53) == 2.0);
    CHECK(get_f64(bytes, 61) == -1.5);
    CHECK(get_f64(bytes, 69) == 0.5);

    // Bases are column-major: entry (row 1, col 2) of patch 1.
    std::size_t off = 77;
    CHECK(get_f64(bytes, off + 8 * (D * Ne + 2 * D + 1)) == model.pod.bases[1](1, 2));
    off += 8 * N * D * Ne;
    CHECK(get_f64(bytes, off + 8 * (Ne * 2 + 1)) == model.pod.singular_values[2](1));
    off += 8 * N * Ne;
    // Value maps are row-major, pair (m=1, n=2).
    const std::size_t pair = 1 * N + 2;
    CHECK(get_f64(bytes, off + 8 * (pair * Ne * Ne + 0 * Ne + 2)) == model.value_maps[pair](0, 2));
    CHECK(get_f64(bytes, off + 8 * (pair * Ne * Ne + 2 * Ne + 0)) == model.value_maps[pair](2, 0));
    off += 8 * N * N * Ne * Ne;
    CHECK(get_f64(bytes, off + 8 * (pair * Ne + 1)) == model.attn_vectors[pair](1));
    off += 8 * N * N * Ne;
    CHECK(get_f64(bytes, off + 8 * pair) == model.attn_intercepts[pair]);
    off += 8 * N * N;
    CHECK(get_f64(bytes, off + 8 * pair) == model.pair_losses[pair]);
    CHECK(off + 8 * N * N == bytes.size());
}

TEST_CASE("model round trip is bit-exact") {
    for (bool intercept : {true, false}) {
        const auto model = small_model(intercept);
        const auto bytes = serialize_model(model);
        const auto back = deserialize_model(bytes);
        CHECK(serialize_model(back) == bytes);
        CHECK(back.intercept == intercept);
        CHECK(back.pod.grid == model.pod.grid);
        CHECK(back.norm_stats == model.norm_stats);
        for (std::size_t k = 0; k < model.value_maps.size(); ++k) {
            CHECK(back.value_maps[k] == model.value_maps[k]);
            CHECK(back.attn_vectors[k] == model.attn_vectors[k]);
        }
        CHECK(back.attn_intercepts == model.attn_intercepts);
        CHECK(back.pair_losses == model.pair_losses);
    }
}

TEST_CASE("model reader rejects malformed input") {
    const auto bytes = serialize_model(small_model(true));
    CHECK_THROWS_AS(deserialize_model(bytes + std::string(8, '\0')), IoError);
    CHECK_THROWS_AS(deserialize_model(bytes.substr(0, bytes.size() - 8)), IoError);
    auto bad = bytes;
    bad[0] = 'X';
    CHECK_THROWS_AS(deserialize_model(bad), IoError);
    auto bad_p = bytes;
    bad_p[20] = '\x03'; // P=3 does not divide 4
    CHECK_THROWS_AS(deserialize_model(bad_p), IoError);
    auto bad_flag = bytes;
    bad_flag[28] = '\x05';
    CHECK_THROWS_AS(deserialize_model(bad_flag), IoError);
}

TEST_CASE("atomic writes leave no temp files behind") {
    const auto dir = std::filesystem::temp_directory_path() / "lamp_test_atomic";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    write_file_atomic(dir / "a.bin", "first");
    write_file_atomic(dir / "a.bin", "second");
    CHECK(read_file(dir / "a.bin") == "second");
    std::size_t entries = 0;
    for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(dir)) ++entries;
    CHECK(entries == 1);
    std::filesystem::remove_all(dir);
}
