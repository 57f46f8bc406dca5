#include "lamp/dataset_io.hpp"

#include "lamp/binary_io.hpp"

namespace lamp {

std::string serialize_dataset(const SnapshotSet& set) {
    ByteWriter w;
    w.bytes(kDatasetMagic);
    w.u32(static_cast<std::uint32_t>(set.height()));
    w.u32(static_cast<std::uint32_t>(set.width()));
    w.u32(static_cast<std::uint32_t>(set.components()));
    w.u32(static_cast<std::uint32_t>(set.snapshots()));
    w.u8(set.normalized() ? 1 : 0);
    if (const auto& stats = set.norm_stats()) {
        for (std::size_t c = 0; c < set.components(); ++c) {
            w.f64(stats->mean[c]);
            w.f64(stats->stddev[c]);
        }
    }
    w.f64s(set.data());
    return w.release();
}

SnapshotSet deserialize_dataset(std::string_view bytes) {
    ByteReader r(bytes, std::string(kDatasetFormat));
    if (r.bytes(kDatasetMagic.size()) != kDatasetMagic) {
        throw IoError("not a LAMP-DS v1 file (bad magic)");
    }
    const std::size_t H = r.u32();
    const std::size_t W = r.u32();
    const std::size_t C = r.u32();
    const std::size_t T = r.u32();
    const std::uint8_t flag = r.u8();
    if (flag > 1) throw IoError("LAMP-DS v1: invalid normalized flag");
    if (H == 0 || W == 0 || C == 0 || T == 0) throw IoError("LAMP-DS v1: zero dimension");

    std::optional<NormStats> stats;
    if (flag == 1) {
        NormStats s;
        s.mean.resize(C);
        s.stddev.resize(C);
        for (std::size_t c = 0; c < C; ++c) {
            s.mean[c] = r.f64();
            s.stddev[c] = r.f64();
        }
        stats = std::move(s);
    }
    const std::size_t count = T * H * W * C;
    if (r.remaining() != count * 8) {
        throw IoError("LAMP-DS v1: payload holds " + std::to_string(r.remaining()) +
                      " bytes, header implies " + std::to_string(count * 8));
    }
    std::vector<double> data(count);
    r.f64s(data);
    r.expect_end();
    try {
        return SnapshotSet(H, W, C, T, std::move(data), std::move(stats));
    } catch (const ValidationError& e) {
        throw IoError(std::string("LAMP-DS v1: ") + e.what());
    }
}

void write_dataset(const std::filesystem::path& path, const SnapshotSet& set) {
    write_file_atomic(path, serialize_dataset(set));
}

SnapshotSet read_dataset(const std::filesystem::path& path) {
    return deserialize_dataset(read_file(path));
}

} // namespace lamp
