#pragma once

#include "smartbrush/losses.hpp"
#include "smartbrush/map_core.hpp"
#include "smartbrush/metrics.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace smartbrush {

/// |A ∩ B| / |A ∪ B| over the two maps' material id sets.
double material_intersection(const GameMap& a, const GameMap& b);

struct SplitScore {
    double fid_global_am = 0;
    double fid_tiles = 0;
    double p_material = 0;
    double s = 0;
};

SplitScore split_score(double fid_global_am, double fid_tiles, double p_material);

/// Per-chunk pooled features of one map: global AM crops and tile stacks.
struct MapFeatures {
    FeatureSet global_am;
    FeatureSet tiles;
};

struct SplitFeatureConfig {
    std::uint64_t seed = 17;
};

MapFeatures map_features(const GameMap& map, const SplitFeatureConfig& config = {});

/// Scores one map pair from precomputed features.
SplitScore pair_score(const GameMap& a, const MapFeatures& fa, const GameMap& b, const MapFeatures& fb);

struct SplitResult {
    std::vector<std::string> ids;  // index order of `scores`
    std::vector<std::string> categories;
    /// Symmetric; only same-category entries are filled (others zero).
    std::vector<std::vector<SplitScore>> scores;
    std::vector<std::pair<std::string, std::string>> pairs;  // (train member, test member)
    std::vector<std::string> train;
    std::vector<std::string> test;
};

/// Greedy selection on a score matrix: within each category, pairs are taken
/// in ascending S (ties by index) without reusing a map, `per_category` times.
/// The later map of each pair (by id order) goes to test.
SplitResult select_split(std::vector<std::string> ids, std::vector<std::string> categories,
                         std::vector<std::vector<SplitScore>> scores, int per_category);

SplitResult propose_split(const std::vector<GameMap>& maps, int per_category, const SplitFeatureConfig& config = {});

}  // namespace smartbrush
