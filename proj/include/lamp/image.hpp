#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "lamp/latentattn.hpp"
#include "lamp/patchgrid.hpp"

namespace lamp {

using Rgb = std::array<std::uint8_t, 3>;

/// Piecewise-linear blue (0,0,255) -> white (255,255,255) -> red (255,0,0)
/// over s in [0, 1], anchors at 0, 0.5 and 1. Channels are rounded to the
/// nearest integer; s is clamped.
Rgb colormap(double s);

struct MaskOutline {
    PatchGrid grid;
    MaskSpec mask;
};

struct RenderedImage {
    std::string ppm; // binary P6 bytes
    double min = 0.0;
    double max = 0.0;
};

/**
 * Heatmap of one component of one snapshot, H rows by W columns. Values map
 * linearly from [min, max] onto the colormap; a constant field maps to the
 * middle colour. With an outline, the border pixels of every masked patch
 * are drawn black.
 */
RenderedImage render_field(const SnapshotSet& field, std::size_t snapshot, std::size_t component,
                           const std::optional<MaskOutline>& outline = std::nullopt);

/// Renders and writes atomically; returns the value range used.
RenderedImage emit_field_image(const SnapshotSet& field, std::size_t snapshot,
                               std::size_t component, const std::filesystem::path& path,
                               const std::optional<MaskOutline>& outline = std::nullopt);

} // namespace lamp
