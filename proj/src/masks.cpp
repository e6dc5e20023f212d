#include "smartbrush/masks.hpp"

#include "smartbrush/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace smartbrush {

std::string_view to_string(MaskMode mode) {
    switch (mode) {
        case MaskMode::Medium: return "medium";
        case MaskMode::Hard: return "hard";
        case MaskMode::Complete: return "complete";
    }
    return "unknown";
}

std::optional<MaskMode> parse_mask_mode(std::string_view text) {
    if (text == "medium") return MaskMode::Medium;
    if (text == "hard") return MaskMode::Hard;
    if (text == "complete") return MaskMode::Complete;
    return std::nullopt;
}

MaskMode classify_mask_mode(const BrushMask& brush) {
    std::size_t set = 0;
    for (double v : brush.pixels.data()) set += v != 0.0 ? 1 : 0;
    const std::size_t total = brush.pixels.size();
    if (set == total) return MaskMode::Complete;
    // Integer comparison keeps the 0.30 boundary exact: set/total >= 3/10.
    return set * 10 >= total * 3 ? MaskMode::Hard : MaskMode::Medium;
}

void stamp_segment(BrushMask& mask, double x0, double y0, double x1, double y1, double radius) {
    const int side = mask.side();
    const int lo_x = std::max(0, static_cast<int>(std::floor(std::min(x0, x1) - radius)));
    const int hi_x = std::min(side - 1, static_cast<int>(std::ceil(std::max(x0, x1) + radius)));
    const int lo_y = std::max(0, static_cast<int>(std::floor(std::min(y0, y1) - radius)));
    const int hi_y = std::min(side - 1, static_cast<int>(std::ceil(std::max(y0, y1) + radius)));
    const double dx = x1 - x0;
    const double dy = y1 - y0;
    const double len2 = dx * dx + dy * dy;
    for (int y = lo_y; y <= hi_y; ++y) {
        for (int x = lo_x; x <= hi_x; ++x) {
            const double px = x + 0.5;
            const double py = y + 0.5;
            double t = len2 > 0 ? ((px - x0) * dx + (py - y0) * dy) / len2 : 0.0;
            t = std::clamp(t, 0.0, 1.0);
            const double ex = px - (x0 + t * dx);
            const double ey = py - (y0 + t * dy);
            if (ex * ex + ey * ey <= radius * radius) mask.pixels.at(0, y, x) = 1.0;
        }
    }
}

namespace {

struct StrokeParams {
    double min_radius;
    double max_radius;
    int min_strokes;
    int max_strokes;
};

// Radius band is 8..48 px at side 128 and scales with the side.
StrokeParams params_for(MaskMode mode, int side) {
    const double rmin = std::max(1.0, side / 16.0);
    const double rmax = side * 3.0 / 8.0;
    const double mid = 0.5 * (rmin + rmax);
    if (mode == MaskMode::Medium) return {rmin, mid, 1, 4};
    return {mid, rmax, 3, 8};
}

BrushMask draw_strokes(const StrokeParams& p, int side, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<int> stroke_count(p.min_strokes, p.max_strokes);
    std::uniform_int_distribution<int> vertex_count(4, 12);
    std::uniform_real_distribution<double> radius(p.min_radius, p.max_radius);
    std::uniform_real_distribution<double> turn(-std::numbers::pi / 2, std::numbers::pi / 2);
    std::uniform_real_distribution<double> step(side / 8.0, side / 4.0);

    BrushMask mask = BrushMask::zeros(side);
    const int strokes = stroke_count(rng);
    for (int s = 0; s < strokes; ++s) {
        double x = unit(rng) * side;
        double y = unit(rng) * side;
        double angle = unit(rng) * 2 * std::numbers::pi;
        const int vertices = vertex_count(rng);
        for (int v = 0; v < vertices; ++v) {
            angle += turn(rng);
            const double len = step(rng);
            const double nx = std::clamp(x + std::cos(angle) * len, 0.0, static_cast<double>(side));
            const double ny = std::clamp(y + std::sin(angle) * len, 0.0, static_cast<double>(side));
            stamp_segment(mask, x, y, nx, ny, radius(rng));
            x = nx;
            y = ny;
        }
    }
    return mask;
}

}  // namespace

BrushMask generate_random_mask(MaskMode mode, std::uint64_t seed, int side) {
    if (side < 8) fail(ErrorKind::InvalidArgument, "generate_random_mask: side must be >= 8");
    if (mode == MaskMode::Complete) return BrushMask::ones(side);

    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(mode), static_cast<std::uint32_t>(side)};
    std::mt19937_64 rng(seq);
    const StrokeParams params = params_for(mode, side);
    for (int attempt = 0; attempt < 1000; ++attempt) {
        BrushMask mask = draw_strokes(params, side, rng);
        if (classify_mask_mode(mask) == mode && mask.pixels.max() > 0.0) return mask;
    }
    fail(ErrorKind::Numerical, "generate_random_mask: no mask in the " + std::string(to_string(mode)) +
                                   " coverage band after 1000 attempts");
}

}  // namespace smartbrush
