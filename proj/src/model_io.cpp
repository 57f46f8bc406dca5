#include "lamp/model_io.hpp"

#include "lamp/binary_io.hpp"

namespace lamp {

std::string serialize_model(const AttentionModel& model) {
    const auto& grid = model.grid();
    const auto Ne = static_cast<Eigen::Index>(model.latent_dim());

    ByteWriter w;
    w.bytes(kModelMagic);
    w.u32(static_cast<std::uint32_t>(grid.height()));
    w.u32(static_cast<std::uint32_t>(grid.width()));
    w.u32(static_cast<std::uint32_t>(grid.components()));
    w.u32(static_cast<std::uint32_t>(grid.patch_size()));
    w.u32(static_cast<std::uint32_t>(model.latent_dim()));
    w.u8(model.intercept ? 1 : 0);
    w.f64(model.ridge_lambda);
    w.f64(model.error_floor);
    for (std::size_t c = 0; c < grid.components(); ++c) {
        w.f64(model.norm_stats.mean.at(c));
        w.f64(model.norm_stats.stddev.at(c));
    }
    for (const auto& basis : model.pod.bases) {
        // Eigen's default storage is column-major.
        w.f64s(std::span<const double>(basis.data(), static_cast<std::size_t>(basis.size())));
    }
    for (const auto& sv : model.pod.singular_values) {
        w.f64s(std::span<const double>(sv.data(), static_cast<std::size_t>(sv.size())));
    }
    for (const auto& map : model.value_maps) {
        for (Eigen::Index i = 0; i < Ne; ++i) {
            for (Eigen::Index j = 0; j < Ne; ++j) w.f64(map(i, j));
        }
    }
    for (const auto& v : model.attn_vectors) {
        w.f64s(std::span<const double>(v.data(), static_cast<std::size_t>(v.size())));
    }
    w.f64s(model.attn_intercepts);
    w.f64s(model.pair_losses);
    return w.release();
}

AttentionModel deserialize_model(std::string_view bytes) {
    ByteReader r(bytes, std::string(kModelFormat));
    if (r.bytes(kModelMagic.size()) != kModelMagic) {
        throw IoError("not a LAMP-MODEL v1 file (bad magic)");
    }
    const std::size_t H = r.u32();
    const std::size_t W = r.u32();
    const std::size_t C = r.u32();
    const std::size_t P = r.u32();
    const std::size_t latent_dim = r.u32();
    const std::uint8_t intercept = r.u8();
    if (intercept > 1) throw IoError("LAMP-MODEL v1: invalid intercept flag");

    AttentionModel model;
    try {
        model.pod.grid = PatchGrid(H, W, C, P);
    } catch (const ValidationError& e) {
        throw IoError(std::string("LAMP-MODEL v1: ") + e.what());
    }
    const std::size_t N = model.pod.grid.count();
    const std::size_t D = model.pod.grid.dim();
    if (latent_dim == 0 || latent_dim > D) throw IoError("LAMP-MODEL v1: invalid latent dim");
    if (r.remaining() != model_file_size(H, W, C, P, latent_dim) - (kModelMagic.size() + 21)) {
        throw IoError("LAMP-MODEL v1: payload size does not match the header");
    }
    const auto Ne = static_cast<Eigen::Index>(latent_dim);

    model.pod.latent_dim = latent_dim;
    model.intercept = intercept == 1;
    model.ridge_lambda = r.f64();
    model.error_floor = r.f64();
    model.norm_stats.mean.resize(C);
    model.norm_stats.stddev.resize(C);
    for (std::size_t c = 0; c < C; ++c) {
        model.norm_stats.mean[c] = r.f64();
        model.norm_stats.stddev[c] = r.f64();
    }
    model.pod.bases.assign(N, Eigen::MatrixXd(static_cast<Eigen::Index>(D), Ne));
    for (auto& basis : model.pod.bases) {
        r.f64s(std::span<double>(basis.data(), static_cast<std::size_t>(basis.size())));
    }
    model.pod.singular_values.assign(N, Eigen::VectorXd(Ne));
    for (auto& sv : model.pod.singular_values) {
        r.f64s(std::span<double>(sv.data(), static_cast<std::size_t>(sv.size())));
    }
    model.value_maps.assign(N * N, Eigen::MatrixXd(Ne, Ne));
    for (auto& map : model.value_maps) {
        for (Eigen::Index i = 0; i < Ne; ++i) {
            for (Eigen::Index j = 0; j < Ne; ++j) map(i, j) = r.f64();
        }
    }
    model.attn_vectors.assign(N * N, Eigen::VectorXd(Ne));
    for (auto& v : model.attn_vectors) {
        r.f64s(std::span<double>(v.data(), static_cast<std::size_t>(v.size())));
    }
    model.attn_intercepts.resize(N * N);
    r.f64s(model.attn_intercepts);
    model.pair_losses.resize(N * N);
    r.f64s(model.pair_losses);
    r.expect_end();
    return model;
}

void write_model(const std::filesystem::path& path, const AttentionModel& model) {
    write_file_atomic(path, serialize_model(model));
}

AttentionModel read_model(const std::filesystem::path& path) {
    return deserialize_model(read_file(path));
}

std::uint64_t model_file_size(std::size_t height, std::size_t width, std::size_t components,
                              std::size_t patch_size, std::size_t latent_dim) {
    const std::uint64_t N = (height / patch_size) * (width / patch_size);
    const std::uint64_t D = components * patch_size * patch_size;
    const std::uint64_t Ne = latent_dim;
    const std::uint64_t header = kModelMagic.size() + 5 * 4 + 1 + 2 * 8;
    const std::uint64_t doubles =
        2 * components + N * D * Ne + N * Ne + N * N * Ne * Ne + N * N * Ne + 2 * N * N;
    return header + 8 * doubles;
}

} // namespace lamp
