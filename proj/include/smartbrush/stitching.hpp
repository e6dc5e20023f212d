#pragma once

#include "smartbrush/generator.hpp"
#include "smartbrush/map_core.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace smartbrush {

enum class Direction { Horizontal, Vertical };
std::string to_string(Direction d);

/// a < b lexicographically, so `a` is the left (Horizontal) or upper
/// (Vertical) chunk.
struct AdjacentPair {
    ChunkCoord a;
    ChunkCoord b;
    Direction direction = Direction::Horizontal;
    bool intersecting = false;

    bool operator==(const AdjacentPair&) const = default;
};

using BrushedChunks = std::map<ChunkCoord, BrushMask>;

inline constexpr int kIntersectionBand = 4;

/// True when the two brushes have set pixels within `band` of the shared edge
/// at a common position along it.
bool mask_intersection(const AdjacentPair& pair, const BrushMask& mask_a, const BrushMask& mask_b, int band = kIntersectionBand);

/// Every horizontally or vertically adjacent pair of brushed chunks, in
/// canonical order, with `intersecting` filled in.
std::vector<AdjacentPair> find_adjacent_pairs(const BrushedChunks& brushed, int band = kIntersectionBand);

/// Ellipse on the side x side composite made of the two border-adjacent
/// halves, centred on the border midpoint; rx runs along the border, ry
/// across it. Intersected with the brushes laid out the same way.
struct TransitionMask {
    Direction direction = Direction::Horizontal;
    double rx = 0;
    double ry = 0;
    BrushMask mask;  // (1, side, side) on the composite
};

TransitionMask make_transition_mask(Direction direction, int tile_side, double rx, double ry, const BrushMask& brush_a,
                                    const BrushMask& brush_b);

/// Composite (C, side, side) made of the border-adjacent halves of two planes.
Tensor composite_halves(Direction direction, const Tensor& a, const Tensor& b);

struct StitchConfig {
    double rx_fraction = 0.5;   // rx = fraction * tile side
    double ry_fraction = 0.25;  // ry = fraction * tile side
    int intersection_band = kIntersectionBand;
    double smoothing_band_fraction = 0.25;  // band = fraction * tile side
    double smoothing_sigma_fraction = 1.0 / 3.0;  // sigma = fraction * band
    bool stitch = true;  // step 5
    bool smooth = true;  // step 6
    /// Stitch brushed chunks against unbrushed neighbours, writing only to the brushed side.
    bool outer_neighbors = true;
    std::uint64_t seed = 1;
};

/// Re-inpaints the transition region of one pair for the materials both
/// chunks reference. Pixels outside the transition mask and tiles of
/// non-shared materials are left untouched.
///
/// Weight a half holds in materials its neighbour lacks is shown to the
/// generator as the neighbour's mean border mix of shared materials, and
/// subtracted again on write-back, so an exclusive material reads as "what the
/// other side continues with" rather than as empty space.
GameMap stitch_pair(const GameMap& map, const AdjacentPair& pair, const BrushMask& brush_a, const BrushMask& brush_b,
                    const Generator& generator, const StitchConfig& config = {});

/// Material ids referenced by both chunks.
std::vector<std::string> shared_materials(const Chunk& a, const Chunk& b);

enum class Border { Left, Right, Top, Bottom };

/// Multiplies the weights of the listed materials by 1 - exp(-d^2 / 2 sigma^2)
/// at depth d < band from `border`. With `restrict_to`, only pixels where the
/// brush is set change.
///
/// `fill` is an optional (8, side) distribution over tile channels per
/// position along the border. When given, the removed weight is added to those
/// channels, and positions whose column sums to 0 are left untouched.
Chunk gaussian_material_smoothing(const Chunk& chunk, const std::vector<std::string>& exclusive_ids, Border border,
                                  double sigma, int band, const BrushMask* restrict_to = nullptr,
                                  const Tensor* fill = nullptr);

/// For each position along `border` of `chunk`, the neighbour's weights (on
/// the neighbour's facing edge) of materials both chunks list, placed on
/// `chunk`'s tile channels and normalized. Positions with no shared weight
/// take the mean profile; all-zero when the neighbour has none anywhere.
Tensor border_fill_profile(const Chunk& chunk, const Chunk& neighbour, Border border);

/// Mean absolute RGB difference between the two pixel rows/columns that meet
/// at the pair's shared edge.
double seam_score(const GameMap& map, const AdjacentPair& pair);

struct PairReport {
    AdjacentPair pair;
    double seam_before = 0;  // after per-chunk generation
    double seam_after = 0;   // after the full pipeline
    bool stitched = false;
    std::vector<std::string> smoothed_a;
    std::vector<std::string> smoothed_b;
};

struct RegionResult {
    GameMap map;
    std::vector<PairReport> pairs;
    double generate_seconds = 0;
    double stitch_seconds = 0;
};

/// Per-chunk generation, adjacency, intersection check, stitching of
/// intersecting pairs, then smoothing of border materials one side lacks.
RegionResult generate_region(const GameMap& map, const BrushedChunks& brushed, const Generator& generator,
                             const StitchConfig& config = {});

}  // namespace smartbrush
