#pragma once

#include "smartbrush/tensor.hpp"

#include <array>
#include <compare>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace smartbrush {

inline constexpr int kTilesPerChunk = 8;
inline constexpr int kDefaultTileSize = 128;

struct ChunkCoord {
    int x = 0;
    int y = 0;

    auto operator<=>(const ChunkCoord&) const = default;
    std::string str() const { return std::to_string(x) + "_" + std::to_string(y); }
};

/// Single-channel blend weights for one material over a chunk.
struct TileMask {
    Tensor pixels;  // (1, side, side), values in [0,1]
    std::string material_id;

    int side() const { return pixels.height(); }
};

struct Material {
    std::string id;
    Tensor texture;  // (3, side, side), values in [0,1]
};

/// Materials keyed by id.
class MaterialSet {
public:
    void add(Material material);
    bool contains(const std::string& id) const { return by_id_.count(id) != 0; }
    const Material& get(const std::string& id) const;
    std::vector<std::string> ids() const;
    std::size_t size() const { return by_id_.size(); }
    bool empty() const { return by_id_.empty(); }

    auto begin() const { return by_id_.begin(); }
    auto end() const { return by_id_.end(); }

private:
    std::map<std::string, Material> by_id_;
};

struct Chunk {
    ChunkCoord coord;
    std::array<TileMask, kTilesPerChunk> tiles;

    int side() const { return tiles[0].side(); }
    /// The 8 weight planes stacked as an (8, side, side) tensor.
    Tensor weights() const;
    void set_weights(const Tensor& stack);
    std::vector<std::string> material_ids() const;
    /// Index of the tile whose material id matches, or -1.
    int tile_index(const std::string& material_id) const;
};

/// Binary region to regenerate; 1 = regenerate.
struct BrushMask {
    Tensor pixels;  // (1, side, side), values in {0,1}

    int side() const { return pixels.height(); }
    double coverage() const { return pixels.mean(); }
    static BrushMask zeros(int side) { return {Tensor::image(1, side, side, 0.0)}; }
    static BrushMask ones(int side) { return {Tensor::image(1, side, side, 1.0)}; }
};

struct GameMap {
    std::string id;
    std::string category;
    int grid_width = 0;
    int grid_height = 0;
    int tile_size = kDefaultTileSize;
    std::map<ChunkCoord, Chunk> chunks;
    MaterialSet materials;
    Tensor global_am;                          // (3, grid_height*tile, grid_width*tile)
    Tensor height_map;                         // (1, ...), normalized to [0,1]
    std::map<std::string, Tensor> object_masks;  // name -> (1, ...)

    bool in_bounds(ChunkCoord c) const { return c.x >= 0 && c.y >= 0 && c.x < grid_width && c.y < grid_height; }
    const Chunk& chunk(ChunkCoord c) const;
    Chunk& chunk(ChunkCoord c);

    /// Checks every structural invariant; throws on the first violation.
    void validate() const;
};

/// Per-pixel sum of T_i * M_i, clamped to [0,1]. Result is (3, side, side).
Tensor blend_chunk(const Chunk& chunk, const MaterialSet& materials);

/// Index of the tile with the largest total weight; ties go to the lower index.
int dominant_tile(const Chunk& chunk);

/// Rescales weights so every pixel sums to 1. Pixels whose weights sum to 0
/// receive weight 1 on `dominant` (default: dominant_tile()).
Chunk normalize_weights(const Chunk& chunk, std::optional<int> dominant = std::nullopt);

/// Raw per-pixel weight-sum statistics, reported before normalization.
struct WeightSumStats {
    double min = 0;
    double max = 0;
    double mean = 0;
    std::size_t zero_pixels = 0;
};
WeightSumStats weight_sum_stats(const Chunk& chunk);

/// Zeroes every tile where the brush is set.
Chunk apply_brush(const Chunk& chunk, const BrushMask& brush);

/// Renders a rectangular block of chunks [x0..x1] x [y0..y1] (inclusive).
Tensor render_region(const GameMap& map, ChunkCoord from, ChunkCoord to);

}  // namespace smartbrush
