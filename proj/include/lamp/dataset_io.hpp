#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "lamp/patchgrid.hpp"

namespace lamp {

// "LAMP-DS v1": magic LAMPDS01, u32 H W C T, u8 normalized,
// [C x (f64 mean, f64 std)], T*H*W*C f64 in storage order. Little-endian.
inline constexpr std::string_view kDatasetMagic = "LAMPDS01";
inline constexpr std::string_view kDatasetFormat = "LAMP-DS v1";

std::string serialize_dataset(const SnapshotSet& set);
SnapshotSet deserialize_dataset(std::string_view bytes);

void write_dataset(const std::filesystem::path& path, const SnapshotSet& set);
SnapshotSet read_dataset(const std::filesystem::path& path);

} // namespace lamp
