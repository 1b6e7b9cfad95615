#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace dissect {

/// 8-bit RGB raster, row-major, 3 bytes per pixel.
struct RgbImage {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<std::uint8_t> rgb;

    static RgbImage black(std::size_t width, std::size_t height) {
        return {width, height, std::vector<std::uint8_t>(width * height * 3, 0)};
    }
    std::uint8_t* pixel(std::size_t x, std::size_t y) { return &rgb[(y * width + x) * 3]; }
    const std::uint8_t* pixel(std::size_t x, std::size_t y) const { return &rgb[(y * width + x) * 3]; }

    friend bool operator==(const RgbImage&, const RgbImage&) = default;
};

/// Non-interlaced 8-bit RGB PNG (libpng), no row filters, fixed zlib level.
std::vector<std::byte> encode_png(const RgbImage& image);

}  // namespace dissect
