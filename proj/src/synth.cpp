#include "smartbrush/synth.hpp"

#include "smartbrush/error.hpp"
#include "smartbrush/masks.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

namespace smartbrush::synth {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double quantize8(double v) { return std::round(std::clamp(v, 0.0, 1.0) * 255.0) / 255.0; }

}  // namespace

std::string material_name(int i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "mat%02d", i);
    return buf;
}

Tensor smooth_field(std::uint64_t seed, int height, int width, int octaves) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> phase(0.0, kTwoPi);
    std::uniform_int_distribution<int> freq(1, 3);
    Tensor out = Tensor::image(1, height, width);
    double amp = 1.0, norm = 0.0;
    for (int o = 0; o < octaves; ++o) {
        const int fx = freq(rng) * (1 << o);
        const int fy = freq(rng) * (1 << o);
        const double px = phase(rng), py = phase(rng);
        for (int y = 0; y < height; ++y)
            for (int x = 0; x < width; ++x)
                out.at(0, y, x) += amp * std::sin(kTwoPi * fx * x / width + px) * std::cos(kTwoPi * fy * y / height + py);
        norm += amp;
        amp *= 0.5;
    }
    for (double& v : out.data()) v = 0.5 + 0.5 * v / norm;
    return out;
}

Tensor tileable_texture(std::array<double, 3> base, std::uint64_t seed, int side, double detail) {
    Tensor tex = Tensor::image(3, side, side);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> phase(0.0, kTwoPi);
    std::uniform_int_distribution<int> freq(1, std::max(1, side / 8));
    struct Wave {
        int fx, fy;
        double p;
        std::array<double, 3> tint;
    };
    std::vector<Wave> waves;
    std::uniform_real_distribution<double> tint(0.6, 1.0);
    for (int i = 0; i < 4; ++i) waves.push_back({freq(rng), freq(rng), phase(rng), {tint(rng), tint(rng), tint(rng)}});
    for (int y = 0; y < side; ++y)
        for (int x = 0; x < side; ++x) {
            for (int c = 0; c < 3; ++c) {
                double v = 0;
                for (const auto& w : waves) v += w.tint[c] * std::sin(kTwoPi * (w.fx * x + w.fy * y) / side + w.p);
                tex.at(c, y, x) = std::clamp(base[c] + detail * v / waves.size(), 0.0, 1.0);
            }
        }
    // 8-bit exact so bundles round-trip bit-identically.
    for (double& v : tex.data()) v = quantize8(v);
    return tex;
}

GameMap make_map(const MapConfig& config) {
    if (config.palette_size < kTilesPerChunk) fail(ErrorKind::InvalidArgument, "synth: palette needs >= 8 materials");
    std::mt19937_64 rng(config.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const int s = config.tile_size;

    GameMap map;
    map.id = config.id;
    map.category = config.category;
    map.grid_width = config.grid_width;
    map.grid_height = config.grid_height;
    map.tile_size = s;

    for (int i = 0; i < config.palette_size; ++i) {
        // Golden-angle hue walk keeps palette colors well separated.
        const double hue = std::fmod(i * 0.381966, 1.0);
        const double light = 0.3 + 0.4 * unit(rng);
        std::array<double, 3> base{};
        for (int c = 0; c < 3; ++c) base[c] = std::clamp(light + 0.35 * std::cos(kTwoPi * (hue + c / 3.0)), 0.05, 0.95);
        map.materials.add({material_name(i), tileable_texture(base, config.seed * 977 + i, s)});
    }

    for (int cy = 0; cy < config.grid_height; ++cy) {
        for (int cx = 0; cx < config.grid_width; ++cx) {
            Chunk chunk;
            chunk.coord = {cx, cy};
            // Consecutive palette window: neighbours share most materials.
            const int offset = (cx + 2 * cy + static_cast<int>(config.seed % 5)) % config.palette_size;
            std::array<Tensor, kTilesPerChunk> raw;
            std::vector<double> strength(kTilesPerChunk);
            for (int k = 0; k < kTilesPerChunk; ++k) {
                raw[k] = smooth_field(config.seed * 131 + (cy * config.grid_width + cx) * 17 + k, s, s, 2);
                strength[k] = k == 0 ? 2.5 : 0.4 + unit(rng);  // tile 0 dominates
            }
            for (int y = 0; y < s; ++y)
                for (int x = 0; x < s; ++x) {
                    std::array<double, kTilesPerChunk> w{};
                    double sum = 0;
                    for (int k = 0; k < kTilesPerChunk; ++k) {
                        w[k] = std::pow(raw[k].at(0, y, x), 4.0) * strength[k];
                        sum += w[k];
                    }
                    for (int k = 0; k < kTilesPerChunk; ++k) raw[k].at(0, y, x) = w[k] / sum;
                }
            for (int k = 0; k < kTilesPerChunk; ++k) {
                for (double& v : raw[k].data()) v = quantize8(v);
                chunk.tiles[k] = {raw[k], material_name((offset + k) % config.palette_size)};
            }
            map.chunks.emplace(chunk.coord, std::move(chunk));
        }
    }

    const int full_h = config.grid_height * s;
    const int full_w = config.grid_width * s;
    map.global_am = render_region(map, {0, 0}, {config.grid_width - 1, config.grid_height - 1});
    if (config.perturb_am) {
        const Tensor tint = smooth_field(config.seed * 7 + 3, full_h, full_w, 2);
        for (int c = 0; c < 3; ++c)
            for (int y = 0; y < full_h; ++y)
                for (int x = 0; x < full_w; ++x) {
                    double& v = map.global_am.at(c, y, x);
                    v = quantize8(v * (0.92 + 0.16 * tint.at(0, y, x)));
                }
    } else {
        for (double& v : map.global_am.data()) v = quantize8(v);
    }

    map.height_map = smooth_field(config.seed * 11 + 5, full_h, full_w, 3);
    for (double& v : map.height_map.data()) v = std::round(v * 65535.0) / 65535.0;

    Tensor water = Tensor::image(1, full_h, full_w);
    Tensor trees = Tensor::image(1, full_h, full_w);
    Tensor buildings = Tensor::image(1, full_h, full_w);
    const Tensor forest = smooth_field(config.seed * 13 + 1, full_h, full_w, 2);
    for (int y = 0; y < full_h; ++y)
        for (int x = 0; x < full_w; ++x) {
            water.at(0, y, x) = map.height_map.at(0, y, x) < 0.2 ? 1.0 : 0.0;
            trees.at(0, y, x) = forest.at(0, y, x) > 0.75 && water.at(0, y, x) == 0.0 ? 1.0 : 0.0;
        }
    BrushMask road{Tensor::image(1, full_h, full_w)};
    const double y0 = unit(rng) * full_h, y1 = unit(rng) * full_h;
    stamp_segment(road, 0.0, y0, full_w, y1, std::max(1.0, s / 16.0));
    for (int b = 0; b < config.grid_width * config.grid_height; ++b) {
        const int bx = static_cast<int>(unit(rng) * (full_w - 4)), by = static_cast<int>(unit(rng) * (full_h - 4));
        for (int y = by; y < by + 4; ++y)
            for (int x = bx; x < bx + 4; ++x) buildings.at(0, y, x) = 1.0;
    }
    map.object_masks["water"] = water;
    map.object_masks["trees"] = trees;
    map.object_masks["roads"] = road.pixels;
    map.object_masks["buildings"] = buildings;
    map.validate();
    return map;
}

Tensor striped_tiles(std::uint64_t seed, int side) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> period_dist(4, 8);
    std::uniform_int_distribution<int> phase_dist(0, 7);
    std::uniform_int_distribution<int> orient(0, 1);
    const int period = period_dist(rng);
    const int phase = phase_dist(rng);
    const bool vertical = orient(rng) == 1;
    // Two materials alternate in stripes; the remaining six stay empty.
    Tensor out = Tensor::image(kTilesPerChunk, side, side);
    const int a = static_cast<int>(seed % 4);
    const int b = a + 4;
    for (int y = 0; y < side; ++y)
        for (int x = 0; x < side; ++x) {
            const int t = ((vertical ? x : y) + phase) % period;
            const bool first = t < period / 2;
            out.at(a, y, x) = first ? 1.0 : 0.0;
            out.at(b, y, x) = first ? 0.0 : 1.0;
        }
    return out;
}

}  // namespace smartbrush::synth
