#pragma once

#include "smartbrush/map_core.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace smartbrush {

enum class MaskMode { Medium, Hard, Complete };

inline constexpr double kHardCoverageThreshold = 0.30;

std::string_view to_string(MaskMode mode);
std::optional<MaskMode> parse_mask_mode(std::string_view text);

/// Medium < 0.30 <= Hard < 1.0 = Complete. 0.30 itself is Hard.
MaskMode classify_mask_mode(const BrushMask& brush);

/// Free-form stroke mask whose coverage lands in `mode`'s band. Deterministic
/// in (mode, seed, side). Medium masks are never empty.
BrushMask generate_random_mask(MaskMode mode, std::uint64_t seed, int side);

/// Rasterizes a capsule (thick segment) into the mask.
void stamp_segment(BrushMask& mask, double x0, double y0, double x1, double y1, double radius);

}  // namespace smartbrush
