#pragma once

#include "smartbrush/map_core.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

/// Procedural fixtures: tileable material textures and complete synthetic
/// maps. Used by the tests, the acceptance suite, and `smartbrush synth`.
namespace smartbrush::synth {

/// Tileable RGB texture around `base` (period divides `side`), amplitude
/// `detail`.
Tensor tileable_texture(std::array<double, 3> base, std::uint64_t seed, int side, double detail = 0.08);

/// Smooth tileable scalar field in [0,1].
Tensor smooth_field(std::uint64_t seed, int height, int width, int octaves = 3);

struct MapConfig {
    std::string id = "synthetic";
    std::string category = "natural";
    int grid_width = 2;
    int grid_height = 2;
    int tile_size = 32;
    int palette_size = 12;
    std::uint64_t seed = 1;
    /// When false the global AM is the exact render of the chunks.
    bool perturb_am = true;
};

/// Map whose chunks draw 8 materials from a shared palette, with smooth
/// 8-bit-exact weights summing to ~1, an AM rendered from the chunks, a height
/// field, and water/trees/roads/buildings object masks.
GameMap make_map(const MapConfig& config);

/// Palette material id for index i ("mat00", "mat01", ...).
std::string material_name(int i);

/// (8, side, side) stack of periodic stripes; `phase` and `period` vary per
/// sample. Used for training smoke runs.
Tensor striped_tiles(std::uint64_t seed, int side);

}  // namespace smartbrush::synth
