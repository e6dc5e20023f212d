#include "smartbrush/coherence.hpp"
#include "smartbrush/error.hpp"
#include "smartbrush/synth.hpp"
#include "oracles.hpp"
#include "support.hpp"

#include <doctest.h>

using namespace smartbrush;
using namespace smartbrush::testing;

namespace {

Tensor tile_copies(const Tensor& t, int reps) {
    Tensor out = Tensor::image(t.channels(), t.height() * reps, t.width() * reps);
    for (int ry = 0; ry < reps; ++ry)
        for (int rx = 0; rx < reps; ++rx) out.paste(t, ry * t.height(), rx * t.width());
    return out;
}

Chunk single_material_chunk(int side, int active) {
    std::array<double, kTilesPerChunk> w{};
    w[static_cast<std::size_t>(active)] = 1.0;
    return constant_chunk(side, w);
}

}  // namespace

TEST_CASE("template_match examples") {
    std::mt19937_64 rng(1);
    const Tensor tex = random_tensor({3, 4, 4}, rng);
    SUBCASE("tiled copies score 1 at tiling offsets") {
        const Tensor scores = template_match(tex, tile_copies(tex, 3));
        CHECK(scores.height() == 9);
        for (int y = 0; y <= 8; y += 4)
            for (int x = 0; x <= 8; x += 4) CHECK(scores.at(0, y, x) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(scores.max() <= 1.0);
        CHECK(scores.min() >= -1.0);
    }
    SUBCASE("negated texture scores -1") {
        Tensor neg = tex;
        for (double& v : neg.data()) v = 1.0 - v;
        CHECK(template_match(tex, neg).at(0, 0, 0) == doctest::Approx(-1.0).epsilon(1e-12));
    }
    SUBCASE("3x3 over 5x5 matches the double-loop oracle") {
        const Tensor t = random_tensor({3, 3, 3}, rng), r = random_tensor({3, 5, 5}, rng);
        const Tensor s = template_match(t, r);
        for (int y = 0; y < 3; ++y)
            for (int x = 0; x < 3; ++x) CHECK(s.at(0, y, x) == doctest::Approx(oracle::ncc_at(t, r, y, x)).epsilon(1e-12));
    }
    SUBCASE("zero-variance window scores 0") {
        Tensor r = random_tensor({3, 6, 6}, rng);
        for (int c = 0; c < 3; ++c)
            for (int y = 0; y < 3; ++y)
                for (int x = 0; x < 3; ++x) r.at(c, y, x) = 0.4;
        CHECK(template_match(random_tensor({3, 3, 3}, rng), r).at(0, 0, 0) == 0.0);
    }
    SUBCASE("errors") {
        CHECK_THROWS_AS(template_match(Tensor::image(3, 6, 6), Tensor::image(3, 5, 5)), Error);
        CHECK_THROWS_AS(template_match(Tensor::image(1, 2, 2), Tensor::image(3, 5, 5)), Error);
    }
}

TEST_CASE("template_match is invariant to offsets and positive scaling") {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 20; ++trial) {
        const Tensor t = random_tensor({3, 4, 4}, rng), r = random_tensor({3, 9, 9}, rng);
        Tensor t2 = t, r2 = r;
        const double a = 0.1 + trial * 0.2, shift = trial * 0.05 - 0.5;
        for (double& v : t2.data()) v = v * a + shift;
        for (double& v : r2.data()) v = v * (2.0 / a) - shift;
        const Tensor s1 = template_match(t, r), s2 = template_match(t2, r2);
        CHECK(max_abs_diff(s1, s2) < 1e-10);
    }
}

TEST_CASE("rank_materials") {
    std::mt19937_64 rng(3);
    const int side = 32;
    SUBCASE("single-material renders rank that material first") {
        for (int trial = 0; trial < 20; ++trial) {
            const MaterialSet mats = random_materials(side, rng);
            const int active = trial % kTilesPerChunk;
            const Chunk chunk = single_material_chunk(side, active);
            const auto ranking = rank_materials(chunk, mats, blend_chunk(chunk, mats));
            CHECK(ranking.order.front().id == "m" + std::to_string(active));
            CHECK(ranking.order.size() == kTilesPerChunk);
            for (std::size_t i = 1; i < ranking.order.size(); ++i) CHECK(ranking.order[i - 1].score >= ranking.order[i].score);
        }
    }
    SUBCASE("identical textures tie by id") {
        MaterialSet mats;
        const Tensor shared = random_tensor({3, side, side}, rng);
        for (int k = 0; k < kTilesPerChunk; ++k) mats.add({"m" + std::to_string(k), k < 2 ? shared : random_tensor({3, side, side}, rng)});
        // Render material m1 so both m0 and m1 score 1.
        const Chunk chunk = single_material_chunk(side, 1);
        const auto ranking = rank_materials(chunk, mats, blend_chunk(chunk, mats));
        CHECK(ranking.order[0].id == "m0");
        CHECK(ranking.order[1].id == "m1");
        CHECK(ranking.order[0].score == ranking.order[1].score);
    }
    SUBCASE("70/30 blend ranks the majority material higher") {
        const int s = 64;
        const Tensor grass = synth::tileable_texture({0.25, 0.55, 0.2}, 11, s, 0.15);
        const Tensor stone = synth::tileable_texture({0.5, 0.5, 0.52}, 12, s, 0.15);
        MaterialSet mats;
        mats.add({"grass", grass});
        mats.add({"stone", stone});
        Tensor region = grass;
        for (std::size_t i = 0; i < region.size(); ++i) region[i] = 0.7 * grass[i] + 0.3 * stone[i];
        const auto ranking = rank_materials(std::vector<std::string>{"grass", "stone"}, mats, region);
        CHECK(ranking.order[0].id == "grass");
        CHECK(ranking.order[0].score > ranking.order[1].score);
    }
}

TEST_CASE("build_context") {
    synth::MapConfig cfg;
    cfg.tile_size = 16;
    cfg.grid_width = 3;
    cfg.grid_height = 2;
    const GameMap map = synth::make_map(cfg);
    const ContextStack a = build_context(map, {2, 1});
    const ContextStack b = build_context(map, {2, 1});
    CHECK(a.plane_count() == 3 + 1 + static_cast<int>(map.object_masks.size()) + 8);
    CHECK(a.side() == 16);
    CHECK(a.stacked() == b.stacked());
    CHECK(a.stacked().channels() == kContextChannels);
    a.validate();
    for (const auto& t : a.templates) {
        CHECK(t.min() >= -1.0);
        CHECK(t.max() <= 1.0);
    }
    CHECK(a.global_am == map.global_am.crop(16, 32, 16, 16));
    CHECK_THROWS_AS(build_context(map, {3, 0}), Error);
}
