#pragma once

#include "smartbrush/map_core.hpp"

#include <array>
#include <string>
#include <vector>

namespace smartbrush {

/// Object planes in the order they are stacked for the neural generators.
inline const std::array<std::string, 4> kStandardObjects{"buildings", "roads", "trees", "water"};
/// 3 (AM) + 1 (height) + 4 (objects) + 8 (templates).
inline constexpr int kContextChannels = 3 + 1 + 4 + kTilesPerChunk;
inline constexpr int kSwatchSide = 32;

/// Normalized cross-correlation coefficient of `texture` against every valid
/// offset of `region`, joint over the RGB channels. Result is
/// (1, H - th + 1, W - tw + 1) in [-1, 1]; zero-variance windows score 0.
Tensor template_match(const Tensor& texture, const Tensor& region);

/// Mean of the largest ceil(n/10) values.
double top_decile_mean(const Tensor& scores);

struct RankedMaterial {
    std::string id;
    double score = 0;
};

struct MaterialRanking {
    /// Descending by score, ties by id.
    std::vector<RankedMaterial> order;
    /// Raw score plane per chunk tile index (tiles sharing a material share a plane).
    std::vector<Tensor> planes;
};

/// Ranks materials listed by `tile_materials` (tile order, may repeat) against
/// an AM region; textures are resampled to a 32x32 swatch (or the region size
/// if smaller) before matching.
MaterialRanking rank_materials(const std::vector<std::string>& tile_materials, const MaterialSet& materials,
                               const Tensor& am_region);
MaterialRanking rank_materials(const Chunk& chunk, const MaterialSet& materials, const Tensor& am_region);

struct ContextStack {
    Tensor global_am;  // (3, s, s)
    Tensor height;     // (1, s, s)
    std::map<std::string, Tensor> objects;
    std::vector<Tensor> templates;  // kTilesPerChunk planes (1, s, s), tile order

    int side() const { return global_am.empty() ? 0 : global_am.height(); }
    int plane_count() const;
    /// Checks that every plane is (·, s, s).
    void validate() const;
    /// (kContextChannels, s, s): AM, height, standard objects (absent ones are
    /// zero), templates.
    Tensor stacked() const;
    /// Tile index whose template has the highest top-decile mean (ties: lower index).
    int dominant_template() const;

    /// All-zero stack of the standard layout.
    static ContextStack zeros(int side);
};

/// Crops the global planes to a side x side pixel window and attaches the
/// template score planes of `ranking`, resized to the window.
ContextStack build_context_window(const GameMap& map, int y0, int x0, int side, const MaterialRanking& ranking);

ContextStack build_context(const GameMap& map, ChunkCoord coord, const MaterialRanking& ranking);
/// Ranks the chunk's materials against its AM crop, then builds the stack.
ContextStack build_context(const GameMap& map, ChunkCoord coord);

}  // namespace smartbrush
