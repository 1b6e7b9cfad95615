#pragma once

// Minimal PNG reader for tests: 8-bit RGB, any of the five row filters.
#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <string>
#include <vector>

#include <zlib.h>

#include "dissect/png.hpp"

namespace dissect::testing {

inline std::uint32_t be32(const std::byte* p) {
    return (std::uint32_t(p[0]) << 24) | (std::uint32_t(p[1]) << 16) | (std::uint32_t(p[2]) << 8) | std::uint32_t(p[3]);
}

inline RgbImage decode_png(const std::vector<std::byte>& bytes) {
    static const unsigned char sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
    if (bytes.size() < 8 || std::memcmp(bytes.data(), sig, 8) != 0) throw std::runtime_error("bad signature");
    RgbImage img;
    std::vector<unsigned char> idat;
    std::size_t pos = 8;
    bool ended = false;
    while (pos + 12 <= bytes.size()) {
        const auto len = be32(&bytes[pos]);
        const std::string type(reinterpret_cast<const char*>(&bytes[pos + 4]), 4);
        const auto* data = reinterpret_cast<const unsigned char*>(&bytes[pos + 8]);
        const auto crc = crc32(0, reinterpret_cast<const Bytef*>(&bytes[pos + 4]), len + 4);
        if (crc != be32(&bytes[pos + 8 + len])) throw std::runtime_error("bad crc in " + type);
        if (type == "IHDR") {
            img.width = be32(&bytes[pos + 8]);
            img.height = be32(&bytes[pos + 12]);
            if (data[8] != 8 || data[9] != 2 || data[12] != 0) throw std::runtime_error("unsupported IHDR");
        } else if (type == "IDAT") {
            idat.insert(idat.end(), data, data + len);
        } else if (type == "IEND") {
            ended = true;
        }
        pos += 12 + len;
    }
    if (!ended || pos != bytes.size()) throw std::runtime_error("missing IEND or trailing bytes");
    const std::size_t stride = img.width * 3;
    std::vector<unsigned char> raw(img.height * (stride + 1));
    uLongf size = raw.size();
    if (uncompress(raw.data(), &size, idat.data(), idat.size()) != Z_OK || size != raw.size()) {
        throw std::runtime_error("inflate failed");
    }
    img.rgb.assign(img.height * stride, 0);
    for (std::size_t y = 0; y < img.height; ++y) {
        const unsigned char filter = raw[y * (stride + 1)];
        for (std::size_t x = 0; x < stride; ++x) {
            const int a = x >= 3 ? img.rgb[y * stride + x - 3] : 0;
            const int b = y > 0 ? img.rgb[(y - 1) * stride + x] : 0;
            const int c = (x >= 3 && y > 0) ? img.rgb[(y - 1) * stride + x - 3] : 0;
            int pred = 0;
            switch (filter) {
                case 0: pred = 0; break;
                case 1: pred = a; break;
                case 2: pred = b; break;
                case 3: pred = (a + b) / 2; break;
                case 4: {
                    const int p = a + b - c, pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
                    pred = (pa <= pb && pa <= pc) ? a : (pb <= pc ? b : c);
                    break;
                }
                default: throw std::runtime_error("bad filter");
            }
            img.rgb[y * stride + x] = static_cast<std::uint8_t>(raw[y * (stride + 1) + 1 + x] + pred);
        }
    }
    return img;
}

}  // namespace dissect::testing
