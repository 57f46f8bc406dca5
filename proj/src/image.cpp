#include "lamp/image.hpp"

#include <algorithm>
#include <cmath>

#include "lamp/binary_io.hpp"
#include "lamp/error.hpp"

namespace lamp {

namespace {

std::uint8_t channel(double v) {
    return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
}

} // namespace

Rgb colormap(double s) {
    s = std::clamp(s, 0.0, 1.0);
    if (s <= 0.5) {
        const double f = s / 0.5;
        return {channel(255.0 * f), channel(255.0 * f), 255};
    }
    const double f = (s - 0.5) / 0.5;
    return {255, channel(255.0 * (1.0 - f)), channel(255.0 * (1.0 - f))};
}

RenderedImage render_field(const SnapshotSet& field, std::size_t snapshot, std::size_t component,
                           const std::optional<MaskOutline>& outline) {
    if (snapshot >= field.snapshots() || component >= field.components()) {
        throw ValidationError("snapshot or component index out of range for image output");
    }
    if (outline && (!outline->grid.matches(field) ||
                    outline->mask.patch_count() != outline->grid.count())) {
        throw ValidationError("mask outline does not match the field");
    }
    const std::size_t H = field.height();
    const std::size_t W = field.width();

    RenderedImage image;
    image.min = field.at(snapshot, 0, 0, component);
    image.max = image.min;
    for (std::size_t i = 0; i < H; ++i) {
        for (std::size_t j = 0; j < W; ++j) {
            const double v = field.at(snapshot, i, j, component);
            image.min = std::min(image.min, v);
            image.max = std::max(image.max, v);
        }
    }
    const double span = image.max - image.min;

    std::string& out = image.ppm;
    out = "P6\n" + std::to_string(W) + " " + std::to_string(H) + "\n255\n";
    const std::size_t header = out.size();
    out.resize(header + 3 * H * W);
    for (std::size_t i = 0; i < H; ++i) {
        for (std::size_t j = 0; j < W; ++j) {
            const double v = field.at(snapshot, i, j, component);
            Rgb rgb = colormap(span > 0.0 ? (v - image.min) / span : 0.5);
            if (outline) {
                const std::size_t P = outline->grid.patch_size();
                const std::size_t n = (i / P) * outline->grid.cols() + j / P;
                const bool border = i % P == 0 || i % P == P - 1 || j % P == 0 || j % P == P - 1;
                if (border && !outline->mask.is_unmasked(n)) rgb = {0, 0, 0};
            }
            char* px = out.data() + header + 3 * (i * W + j);
            px[0] = static_cast<char>(rgb[0]);
            px[1] = static_cast<char>(rgb[1]);
            px[2] = static_cast<char>(rgb[2]);
        }
    }
    return image;
}

RenderedImage emit_field_image(const SnapshotSet& field, std::size_t snapshot,
                               std::size_t component, const std::filesystem::path& path,
                               const std::optional<MaskOutline>& outline) {
    auto image = render_field(field, snapshot, component, outline);
    write_file_atomic(path, image.ppm);
    return image;
}

} // namespace lamp
