#include "smartbrush/split.hpp"

#include "smartbrush/error.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <tuple>

namespace smartbrush {

double material_intersection(const GameMap& a, const GameMap& b) {
    const auto ia = a.materials.ids();
    const auto ib = b.materials.ids();
    if (ia.empty() && ib.empty()) fail(ErrorKind::InvalidArgument, "material_intersection: both material sets are empty");
    std::vector<std::string> inter, uni;
    std::set_intersection(ia.begin(), ia.end(), ib.begin(), ib.end(), std::back_inserter(inter));
    std::set_union(ia.begin(), ia.end(), ib.begin(), ib.end(), std::back_inserter(uni));
    return static_cast<double>(inter.size()) / static_cast<double>(uni.size());
}

SplitScore split_score(double fid_global_am, double fid_tiles, double p_material) {
    if (fid_global_am < 0 || fid_tiles < 0) fail(ErrorKind::InvalidArgument, "split_score: FID terms must be >= 0");
    return {fid_global_am, fid_tiles, p_material, (fid_global_am + fid_tiles + p_material) / 3.0};
}

MapFeatures map_features(const GameMap& map, const SplitFeatureConfig& config) {
    const auto am_fx = FeatureExtractor::random(3, config.seed);
    const auto tile_fx = FeatureExtractor::random(kTilesPerChunk, config.seed + 1);
    MapFeatures out;
    const int s = map.tile_size;
    for (const auto& [coord, chunk] : map.chunks) {
        out.global_am.push_back(am_fx.pooled(map.global_am.crop(coord.y * s, coord.x * s, s, s)));
        out.tiles.push_back(tile_fx.pooled(chunk.weights()));
    }
    return out;
}

SplitScore pair_score(const GameMap& a, const MapFeatures& fa, const GameMap& b, const MapFeatures& fb) {
    return split_score(frechet_distance(fa.global_am, fb.global_am), frechet_distance(fa.tiles, fb.tiles),
                       material_intersection(a, b));
}

SplitResult select_split(std::vector<std::string> ids, std::vector<std::string> categories,
                         std::vector<std::vector<SplitScore>> scores, int per_category) {
    const std::size_t n = ids.size();
    if (categories.size() != n || scores.size() != n) fail(ErrorKind::ShapeMismatch, "select_split: inconsistent input sizes");
    if (per_category < 1) fail(ErrorKind::InvalidArgument, "select_split: per_category must be >= 1");

    std::map<std::string, std::vector<std::size_t>> by_category;
    for (std::size_t i = 0; i < n; ++i) by_category[categories[i]].push_back(i);

    SplitResult out;
    std::vector<bool> in_test(n, false);
    for (const auto& [category, members] : by_category) {
        if (members.size() < 2) fail(ErrorKind::InvalidArgument, "category '" + category + "' has fewer than 2 maps");
        if (members.size() < 2 * static_cast<std::size_t>(per_category))
            fail(ErrorKind::InvalidArgument, "category '" + category + "' has " + std::to_string(members.size()) +
                                                 " maps, not enough for " + std::to_string(per_category) + " disjoint pairs");
        std::vector<std::tuple<double, std::size_t, std::size_t>> candidates;
        for (std::size_t p = 0; p < members.size(); ++p)
            for (std::size_t q = p + 1; q < members.size(); ++q) {
                std::size_t i = members[p], j = members[q];
                if (ids[j] < ids[i]) std::swap(i, j);
                candidates.emplace_back(scores[i][j].s, i, j);
            }
        std::sort(candidates.begin(), candidates.end());
        std::vector<bool> used(n, false);
        int taken = 0;
        for (const auto& [s, i, j] : candidates) {
            if (taken == per_category) break;
            if (used[i] || used[j]) continue;
            used[i] = used[j] = true;
            in_test[j] = true;
            out.pairs.emplace_back(ids[i], ids[j]);
            ++taken;
        }
    }
    for (std::size_t i = 0; i < n; ++i) (in_test[i] ? out.test : out.train).push_back(ids[i]);
    out.ids = std::move(ids);
    out.categories = std::move(categories);
    out.scores = std::move(scores);
    return out;
}

SplitResult propose_split(const std::vector<GameMap>& maps, int per_category, const SplitFeatureConfig& config) {
    std::vector<std::size_t> order(maps.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return maps[a].id < maps[b].id; });
    for (std::size_t k = 1; k < order.size(); ++k)
        if (maps[order[k]].id == maps[order[k - 1]].id) fail(ErrorKind::InvalidArgument, "duplicate map id " + maps[order[k]].id);

    std::vector<std::string> ids, categories;
    std::vector<MapFeatures> features;
    for (std::size_t k : order) {
        ids.push_back(maps[k].id);
        categories.push_back(maps[k].category);
        features.push_back(map_features(maps[k], config));
    }
    const std::size_t n = ids.size();
    std::vector<std::vector<SplitScore>> scores(n, std::vector<SplitScore>(n));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            if (categories[i] != categories[j]) continue;
            scores[i][j] = scores[j][i] = pair_score(maps[order[i]], features[i], maps[order[j]], features[j]);
        }
    return select_split(std::move(ids), std::move(categories), std::move(scores), per_category);
}

}  // namespace smartbrush
