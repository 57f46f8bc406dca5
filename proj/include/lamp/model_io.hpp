#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "lamp/latentattn.hpp"

namespace lamp {

// "LAMP-MODEL v1": magic LAMPMD01, u32 H W C P N_e, u8 intercept,
// f64 ridge_lambda, f64 error_floor, C x (f64 mean, f64 std),
// N x (D x N_e bases, column-major), N x N_e singular values,
// N^2 x (N_e x N_e value maps, row-major), N^2 x N_e attention vectors,
// N^2 intercepts, N^2 mean pair losses. Pair blocks run over (m, n) with n
// fastest. Little-endian.
inline constexpr std::string_view kModelMagic = "LAMPMD01";
inline constexpr std::string_view kModelFormat = "LAMP-MODEL v1";

std::string serialize_model(const AttentionModel& model);
AttentionModel deserialize_model(std::string_view bytes);

void write_model(const std::filesystem::path& path, const AttentionModel& model);
AttentionModel read_model(const std::filesystem::path& path);

/// Serialized size in bytes for a given configuration.
std::uint64_t model_file_size(std::size_t height, std::size_t width, std::size_t components,
                              std::size_t patch_size, std::size_t latent_dim);

} // namespace lamp
