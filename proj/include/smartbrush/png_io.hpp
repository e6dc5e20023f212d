#pragma once

#include "smartbrush/tensor.hpp"

#include <cstdint>
#include <filesystem>
#include <vector>

namespace smartbrush::png {

enum class Format {
    Gray8,
    Gray16,
    Rgb8,
};

/// Decoded image with values scaled to [0,1] plus the stored bit depth.
struct Decoded {
    Tensor pixels;  // (channels, height, width); channels is 1 or 3, alpha dropped
    int bit_depth = 8;
};

Decoded read(const std::filesystem::path& path);
Decoded decode(const std::vector<std::uint8_t>& bytes);

/// Values are clamped to [0,1] and rounded to the nearest code.
void write(const std::filesystem::path& path, const Tensor& img, Format format);
std::vector<std::uint8_t> encode(const Tensor& img, Format format);

/// Code quantization used on disk.
inline std::uint8_t to_u8(double v) {
    v = v < 0 ? 0 : (v > 1 ? 1 : v);
    return static_cast<std::uint8_t>(v * 255.0 + 0.5);
}
inline std::uint16_t to_u16(double v) {
    v = v < 0 ? 0 : (v > 1 ? 1 : v);
    return static_cast<std::uint16_t>(v * 65535.0 + 0.5);
}

}  // namespace smartbrush::png
