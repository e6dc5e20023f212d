#include "smartbrush/error.hpp"
#include "smartbrush/masks.hpp"
#include "smartbrush/stitching.hpp"
#include "smartbrush/synth.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <set>

using namespace smartbrush;
using namespace smartbrush::testing;

namespace {

/// Map over the given chunks whose AM is their exact render.
GameMap grid_map(int gw, int gh, int side, std::map<ChunkCoord, Chunk> chunks, MaterialSet materials) {
    GameMap map;
    map.grid_width = gw;
    map.grid_height = gh;
    map.tile_size = side;
    map.materials = std::move(materials);
    map.global_am = Tensor::image(3, gh * side, gw * side);
    map.height_map = Tensor::image(1, gh * side, gw * side);
    for (auto& [c, chunk] : chunks) {
        chunk.coord = c;
        map.global_am.paste(blend_chunk(chunk, map.materials), c.y * side, c.x * side);
    }
    map.chunks = std::move(chunks);
    map.validate();
    return map;
}

BrushMask rect_mask(int side, int y0, int x0, int y1, int x1) {
    BrushMask m = BrushMask::zeros(side);
    for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x) m.pixels.at(0, y, x) = 1;
    return m;
}

}  // namespace

TEST_CASE("find_adjacent_pairs matches brute-force enumeration") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        BrushedChunks brushed;
        for (int y = 0; y < 4; ++y)
            for (int x = 0; x < 4; ++x)
                if (rng() % 2) brushed[{x, y}] = BrushMask::ones(8);
        std::set<std::pair<ChunkCoord, ChunkCoord>> expect;
        for (const auto& [a, ma] : brushed)
            for (const auto& [b, mb] : brushed)
                if (a < b && std::abs(a.x - b.x) + std::abs(a.y - b.y) == 1) expect.insert({a, b});
        const auto pairs = find_adjacent_pairs(brushed);
        std::set<std::pair<ChunkCoord, ChunkCoord>> got;
        for (const auto& p : pairs) {
            CHECK(p.a < p.b);
            CHECK(p.direction == (p.a.y == p.b.y ? Direction::Horizontal : Direction::Vertical));
            CHECK(p.intersecting);
            got.insert({p.a, p.b});
        }
        CHECK(got == expect);
        CHECK(got.size() == pairs.size());
        for (std::size_t i = 1; i < pairs.size(); ++i) CHECK(std::tie(pairs[i - 1].a, pairs[i - 1].b) < std::tie(pairs[i].a, pairs[i].b));
    }
    SUBCASE("diagonal neighbours are not adjacent") {
        BrushedChunks brushed{{{0, 0}, BrushMask::ones(8)}, {{1, 1}, BrushMask::ones(8)}};
        CHECK(find_adjacent_pairs(brushed).empty());
    }
}

TEST_CASE("mask_intersection") {
    const int s = 16;
    const AdjacentPair h{{0, 0}, {1, 0}, Direction::Horizontal};
    const AdjacentPair v{{0, 0}, {0, 1}, Direction::Vertical};
    CHECK(mask_intersection(h, rect_mask(s, 2, 12, 6, 16), rect_mask(s, 4, 0, 8, 4)));
    // Same rows but one side stays farther than the band from the edge.
    CHECK_FALSE(mask_intersection(h, rect_mask(s, 2, 8, 6, 11), rect_mask(s, 2, 0, 6, 4)));
    // Both touch the edge in disjoint rows.
    CHECK_FALSE(mask_intersection(h, rect_mask(s, 0, 12, 4, 16), rect_mask(s, 8, 0, 12, 4)));
    CHECK(mask_intersection(v, rect_mask(s, 15, 3, 16, 4), rect_mask(s, 0, 3, 1, 4)));
    CHECK_FALSE(mask_intersection(v, rect_mask(s, 15, 3, 16, 4), rect_mask(s, 0, 4, 1, 5)));
    CHECK(mask_intersection(h, rect_mask(s, 0, 10, 16, 11), rect_mask(s, 0, 0, 16, 1), 6));
    CHECK_FALSE(mask_intersection(h, rect_mask(s, 0, 10, 16, 11), rect_mask(s, 0, 0, 16, 1), 5));
    CHECK_THROWS_AS(mask_intersection(h, BrushMask::ones(s), BrushMask::ones(8)), Error);
}

TEST_CASE("make_transition_mask") {
    SUBCASE("area tracks pi rx ry") {
        for (int s : {64, 128})
            for (auto [fx, fy] : {std::pair{0.5, 0.25}, {0.4, 0.2}, {0.3, 0.3}}) {
                const double rx = fx * s, ry = fy * s;
                for (Direction d : {Direction::Horizontal, Direction::Vertical}) {
                    const auto tm = make_transition_mask(d, s, rx, ry, BrushMask::ones(s), BrushMask::ones(s));
                    const double area = tm.mask.coverage() * s * s;
                    CHECK(std::abs(area - std::numbers::pi * rx * ry) / (std::numbers::pi * rx * ry) < 0.05);
                }
            }
    }
    SUBCASE("rx == ry contains the inscribed circle") {
        const int s = 32;
        const double r = 10;
        const auto tm = make_transition_mask(Direction::Horizontal, s, r, r, BrushMask::ones(s), BrushMask::ones(s));
        for (int y = 0; y < s; ++y)
            for (int x = 0; x < s; ++x) {
                const double d = std::hypot(y + 0.5 - s / 2.0, x + 0.5 - s / 2.0);
                if (d <= r - 1e-9) CHECK(tm.mask.pixels.at(0, y, x) == 1);
                if (d > r + 1e-9) CHECK(tm.mask.pixels.at(0, y, x) == 0);
            }
    }
    SUBCASE("long axis runs along the border") {
        const int s = 32;
        const auto h = make_transition_mask(Direction::Horizontal, s, 16, 4, BrushMask::ones(s), BrushMask::ones(s));
        CHECK(h.mask.pixels.at(0, 1, 16) == 1);
        CHECK(h.mask.pixels.at(0, 16, 1) == 0);
        const auto v = make_transition_mask(Direction::Vertical, s, 16, 4, BrushMask::ones(s), BrushMask::ones(s));
        CHECK(v.mask.pixels.at(0, 16, 1) == 1);
        CHECK(v.mask.pixels.at(0, 1, 16) == 0);
    }
    SUBCASE("brush halves gate the ellipse") {
        const int s = 16;
        // Brush only a's right half; the composite's left half is a's right half.
        const auto tm = make_transition_mask(Direction::Horizontal, s, 8, 4, rect_mask(s, 0, 8, 16, 16), BrushMask::zeros(s));
        for (int y = 0; y < s; ++y)
            for (int x = 8; x < s; ++x) CHECK(tm.mask.pixels.at(0, y, x) == 0);
        CHECK(tm.mask.pixels.at(0, 8, 7) == 1);
    }
    CHECK_THROWS_AS(make_transition_mask(Direction::Horizontal, 15, 4, 4, BrushMask::ones(15), BrushMask::ones(15)), Error);
    CHECK_THROWS_AS(make_transition_mask(Direction::Horizontal, 16, 0, 4, BrushMask::ones(16), BrushMask::ones(16)), Error);
}

TEST_CASE("gaussian_material_smoothing profile") {
    const int s = 32, band = 8;
    const double sigma = band / 3.0;
    std::mt19937_64 rng(3);
    for (Border border : {Border::Left, Border::Right, Border::Top, Border::Bottom}) {
        const Chunk c = random_chunk(s, rng);
        const Chunk out = gaussian_material_smoothing(c, {"m2", "m5"}, border, sigma, band);
        for (int k = 0; k < kTilesPerChunk; ++k)
            for (int y = 0; y < s; ++y)
                for (int x = 0; x < s; ++x) {
                    const int d = border == Border::Left ? x : border == Border::Right ? s - 1 - x : border == Border::Top ? y : s - 1 - y;
                    const double in = c.tiles[k].pixels.at(0, y, x), got = out.tiles[k].pixels.at(0, y, x);
                    if ((k != 2 && k != 5) || d >= band) {
                        CHECK(got == in);
                    } else {
                        CHECK(got == doctest::Approx(in * (1 - std::exp(-d * d / (2 * sigma * sigma)))).epsilon(1e-12));
                        if (d == 0) CHECK(got == 0);
                    }
                }
    }
    SUBCASE("restricted to a brush") {
        const Chunk c = constant_chunk(s, {1, 1, 1, 1, 1, 1, 1, 1});
        const BrushMask m = rect_mask(s, 0, 0, 16, s);
        const Chunk out = gaussian_material_smoothing(c, {"m0"}, Border::Left, sigma, band, &m);
        CHECK(out.tiles[0].pixels.at(0, 3, 0) == 0);
        CHECK(out.tiles[0].pixels.at(0, 20, 0) == 1);
    }
    const Chunk c = constant_chunk(s, {1, 1, 1, 1, 1, 1, 1, 1});
    CHECK_THROWS_AS(gaussian_material_smoothing(c, {"nope"}, Border::Left, sigma, band), Error);
    CHECK_THROWS_AS(gaussian_material_smoothing(c, {"m0"}, Border::Left, 0, band), Error);
    CHECK_THROWS_AS(gaussian_material_smoothing(c, {"m0"}, Border::Left, sigma, 0), Error);
}

TEST_CASE("stitch_pair blends two constant shared tiles") {
    const int s = 32;
    std::mt19937_64 rng(9);
    MaterialSet mats;
    for (int k = 0; k < kTilesPerChunk; ++k) mats.add({"m" + std::to_string(k), uniform_color(s, 0.1 * k + 0.1, 0.5, 0.3)});
    const Chunk a = constant_chunk(s, {0.2, 0, 0, 0, 0, 0, 0, 0});
    const Chunk b = constant_chunk(s, {0.8, 0, 0, 0, 0, 0, 0, 0});
    const GameMap map = grid_map(2, 1, s, {{{0, 0}, a}, {{1, 0}, b}}, mats);
    const AdjacentPair pair{{0, 0}, {1, 0}, Direction::Horizontal, true};
    const BaselineGenerator gen;
    const GameMap out = stitch_pair(map, pair, BrushMask::ones(s), BrushMask::ones(s), gen);

    auto max_cross = [&](const GameMap& m) {
        double mx = 0;
        for (int y = 0; y < s; ++y)
            mx = std::max(mx, std::abs(m.chunk({0, 0}).tiles[0].pixels.at(0, y, s - 1) - m.chunk({1, 0}).tiles[0].pixels.at(0, y, 0)));
        return mx;
    };
    CHECK(max_cross(out) < max_cross(map));
    CHECK(seam_score(out, pair) < seam_score(map, pair));

    const auto tm = make_transition_mask(Direction::Horizontal, s, 0.5 * s, 0.25 * s, BrushMask::ones(s), BrushMask::ones(s));
    for (int y = 0; y < s; ++y)
        for (int x = 0; x < s; ++x) {
            // Composite column x < s/2 is a's column x + s/2.
            const bool in_a = x >= s / 2 && tm.mask.pixels.at(0, y, x - s / 2) == 1;
            const bool in_b = x < s / 2 && tm.mask.pixels.at(0, y, x + s / 2) == 1;
            if (!in_a) CHECK(out.chunk({0, 0}).tiles[0].pixels.at(0, y, x) == 0.2);
            if (!in_b) CHECK(out.chunk({1, 0}).tiles[0].pixels.at(0, y, x) == 0.8);
        }

    SUBCASE("only shared materials are written") {
        Chunk c = constant_chunk(s, {0.2, 0.5, 0, 0, 0, 0, 0, 0});
        c.tiles[1].material_id = "only_a";
        MaterialSet more = mats;
        more.add({"only_a", uniform_color(s, 1, 0, 0)});
        const GameMap m2 = grid_map(2, 1, s, {{{0, 0}, c}, {{1, 0}, b}}, more);
        const GameMap o2 = stitch_pair(m2, pair, BrushMask::ones(s), BrushMask::ones(s), gen);
        CHECK(o2.chunk({0, 0}).tiles[1].pixels.data() == m2.chunk({0, 0}).tiles[1].pixels.data());
    }
    SUBCASE("no shared materials is a no-op") {
        Chunk c = b;
        for (int k = 0; k < kTilesPerChunk; ++k) c.tiles[k].material_id = "x" + std::to_string(k);
        MaterialSet more = mats;
        for (int k = 0; k < kTilesPerChunk; ++k) more.add({"x" + std::to_string(k), uniform_color(s, 0, 0, 1)});
        const GameMap m3 = grid_map(2, 1, s, {{{0, 0}, a}, {{1, 0}, c}}, more);
        const GameMap o3 = stitch_pair(m3, pair, BrushMask::ones(s), BrushMask::ones(s), gen);
        CHECK(o3.chunk({0, 0}).weights().data() == m3.chunk({0, 0}).weights().data());
        CHECK(o3.chunk({1, 0}).weights().data() == m3.chunk({1, 0}).weights().data());
    }
    CHECK_THROWS_AS(stitch_pair(map, {{0, 0}, {1, 0}, Direction::Vertical}, BrushMask::ones(s), BrushMask::ones(s), gen), Error);
}

TEST_CASE("generate_region") {
    synth::MapConfig cfg;
    cfg.grid_width = 3;
    cfg.grid_height = 2;
    cfg.tile_size = 16;
    cfg.seed = 4;
    const GameMap map = synth::make_map(cfg);
    const BaselineGenerator gen;

    SUBCASE("non-adjacent chunks are generated independently") {
        BrushedChunks brushed{{{0, 0}, generate_random_mask(MaskMode::Medium, 1, 16)},
                              {{2, 1}, generate_random_mask(MaskMode::Hard, 2, 16)}};
        StitchConfig sc;
        sc.outer_neighbors = false;
        const RegionResult r = generate_region(map, brushed, gen, sc);
        CHECK(r.pairs.empty());
        for (const auto& [c, m] : brushed) {
            const Tensor expect = gen.generate(MaskedChunkInput::from_chunk(map.chunk(c), m, build_context(map, c)), 0);
            CHECK(r.map.chunk(c).weights().data() == expect.data());
        }
        CHECK(r.map.chunk({1, 0}).weights().data() == map.chunk({1, 0}).weights().data());
    }
    SUBCASE("adjacent complete chunks are stitched and reported") {
        BrushedChunks brushed{{{0, 0}, BrushMask::ones(16)}, {{1, 0}, BrushMask::ones(16)}};
        const RegionResult r = generate_region(map, brushed, gen);
        REQUIRE(r.pairs.size() == 1);
        CHECK(r.pairs[0].stitched);
        CHECK(r.pairs[0].pair.intersecting);
        CHECK(std::isfinite(r.pairs[0].seam_before));
        CHECK(std::isfinite(r.pairs[0].seam_after));
        const RegionResult again = generate_region(map, brushed, gen);
        for (const auto& [c, chunk] : r.map.chunks) CHECK(chunk.weights().data() == again.map.chunk(c).weights().data());
        // Unbrushed chunks never change.
        for (ChunkCoord c : {ChunkCoord{2, 0}, ChunkCoord{0, 1}, ChunkCoord{1, 1}, ChunkCoord{2, 1}})
            CHECK(r.map.chunk(c).weights().data() == map.chunk(c).weights().data());
    }
    SUBCASE("pixels outside the brush are untouched") {
        BrushedChunks brushed{{{0, 0}, rect_mask(16, 0, 4, 16, 16)}, {{1, 0}, rect_mask(16, 0, 0, 16, 12)}};
        const RegionResult r = generate_region(map, brushed, gen);
        for (const auto& [c, m] : brushed)
            for (int k = 0; k < kTilesPerChunk; ++k)
                for (int y = 0; y < 16; ++y)
                    for (int x = 0; x < 16; ++x)
                        if (m.pixels.at(0, y, x) == 0)
                            CHECK(r.map.chunk(c).tiles[k].pixels.at(0, y, x) == map.chunk(c).tiles[k].pixels.at(0, y, x));
    }
    CHECK_THROWS_AS(generate_region(map, {{{5, 5}, BrushMask::ones(16)}}, gen), Error);
    CHECK_THROWS_AS(generate_region(map, {{{0, 0}, BrushMask::ones(8)}}, gen), Error);
}

TEST_CASE("border_fill_profile and weight-preserving smoothing") {
    const int s = 8;
    // a: m0 exclusive everywhere; b lists m1 (ramp across rows) and m2, but not m0.
    Chunk a = constant_chunk(s, {1, 0, 0, 0, 0, 0, 0, 0});
    Chunk b = constant_chunk(s, {0, 0, 0, 0, 0, 0, 0, 0});
    b.tiles[0].material_id = "z";
    for (int y = 0; y < s; ++y)
        for (int x = 0; x < s; ++x) {
            b.tiles[1].pixels.at(0, y, x) = y < 4 ? 1.0 : 0.25;
            b.tiles[2].pixels.at(0, y, x) = y < 4 ? 0.0 : 0.75;
        }
    const Tensor fill = border_fill_profile(a, b, Border::Right);
    CHECK(fill.at(1, 0) == 1.0);
    CHECK(fill.at(2, 0) == 0.0);
    CHECK(fill.at(1, 6) == doctest::Approx(0.25));
    CHECK(fill.at(2, 6) == doctest::Approx(0.75));
    CHECK(fill.at(0, 3) == 0.0);

    const double sigma = 1.0;
    const Chunk out = gaussian_material_smoothing(a, {"m0"}, Border::Right, sigma, 3, nullptr, &fill);
    for (int y = 0; y < s; ++y)
        for (int x = 0; x < s; ++x) {
            double sum = 0;
            for (int k = 0; k < kTilesPerChunk; ++k) sum += out.tiles[k].pixels.at(0, y, x);
            CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
        }
    CHECK(out.tiles[0].pixels.at(0, 2, s - 1) == 0);
    CHECK(out.tiles[1].pixels.at(0, 2, s - 1) == 1);
    CHECK(out.tiles[2].pixels.at(0, 6, s - 1) == doctest::Approx(0.75));

    SUBCASE("nothing to borrow leaves the border alone") {
        Chunk c = b;
        for (auto& t : c.tiles) t.material_id = "q" + t.material_id;
        const Tensor none = border_fill_profile(a, c, Border::Right);
        for (double v : none.data()) CHECK(v == 0);
        const Chunk kept = gaussian_material_smoothing(a, {"m0"}, Border::Right, sigma, 3, nullptr, &none);
        CHECK(kept.weights().data() == a.weights().data());
    }
}

TEST_CASE("complete-mode stitching keeps weight coverage at the border") {
    for (std::uint64_t seed = 100; seed < 106; ++seed) {
        synth::MapConfig cfg;
        cfg.grid_width = 2;
        cfg.grid_height = 2;
        cfg.tile_size = 16;
        cfg.seed = seed;
        const GameMap map = synth::make_map(cfg);
        BrushedChunks brushed;
        for (const auto& [c, chunk] : map.chunks) brushed[c] = BrushMask::ones(16);
        const RegionResult r = generate_region(map, brushed, BaselineGenerator{});
        CHECK(r.pairs.size() == 4);
        for (const auto& [c, chunk] : r.map.chunks) {
            const WeightSumStats st = weight_sum_stats(chunk);
            CHECK(st.min > 0.5);
            CHECK(st.zero_pixels == 0);
        }
        for (const auto& p : r.pairs) CHECK(p.seam_after <= p.seam_before);
    }
}

TEST_CASE("stitching worked examples") {
    SUBCASE("adjacency") {
        const auto one = find_adjacent_pairs({{{3, 4}, BrushMask::ones(8)}, {{4, 4}, BrushMask::ones(8)}});
        REQUIRE(one.size() == 1);
        CHECK(one[0].direction == Direction::Horizontal);
        CHECK(one[0].a == ChunkCoord{3, 4});
        BrushedChunks block;
        for (int y = 0; y < 2; ++y)
            for (int x = 0; x < 2; ++x) block[{x, y}] = BrushMask::ones(8);
        const auto four = find_adjacent_pairs(block);
        CHECK(four.size() == 4);
        CHECK(std::count_if(four.begin(), four.end(), [](const AdjacentPair& p) { return p.direction == Direction::Horizontal; }) == 2);
    }
    SUBCASE("transition mask limits") {
        const int s = 32;
        CHECK(make_transition_mask(Direction::Vertical, s, 16, 8, BrushMask::zeros(s), BrushMask::zeros(s)).mask.coverage() == 0);
        const auto circle = make_transition_mask(Direction::Horizontal, s, s / 2.0, s / 2.0, BrushMask::ones(s), BrushMask::ones(s));
        for (int y = 0; y < s; ++y)
            for (int x = 0; x < s; ++x) {
                const double d = std::hypot(y + 0.5 - s / 2.0, x + 0.5 - s / 2.0);
                CHECK(circle.mask.pixels.at(0, y, x) == (d <= s / 2.0 ? 1.0 : 0.0));
            }
    }
    SUBCASE("monotone ramp on a constant tile") {
        const int s = 32;
        const Chunk c = constant_chunk(s, {0.7, 0.3, 0, 0, 0, 0, 0, 0});
        const Chunk out = gaussian_material_smoothing(c, {"m0"}, Border::Top, 8 / 3.0, 8);
        for (int y = 1; y < s; ++y) CHECK(out.tiles[0].pixels.at(0, y, 5) >= out.tiles[0].pixels.at(0, y - 1, 5));
        CHECK(out.tiles[0].pixels.at(0, 7, 5) > 0.96 * 0.7);
        CHECK(1 - std::exp(-8.0 * 8.0 / (2 * (8 / 3.0) * (8 / 3.0))) > 0.98);
    }
    SUBCASE("seam_score") {
        const int s = 8;
        MaterialSet mats;
        mats.add({"black", uniform_color(s, 0, 0, 0)});
        mats.add({"white", uniform_color(s, 1, 1, 1)});
        Chunk a = constant_chunk(s, {1, 0, 0, 0, 0, 0, 0, 0});
        Chunk b = a;
        for (int k = 0; k < kTilesPerChunk; ++k) {
            a.tiles[k].material_id = k == 0 ? "black" : "white";
            b.tiles[k].material_id = k == 0 ? "white" : "black";
        }
        const GameMap step = grid_map(2, 1, s, {{{0, 0}, a}, {{1, 0}, b}}, mats);
        CHECK(seam_score(step, {{0, 0}, {1, 0}, Direction::Horizontal}) == 1.0);
        // A horizontal ramp continuing across the border scores its own slope.
        MaterialSet ramp;
        Tensor tex = Tensor::image(3, s, s);
        for (int c = 0; c < 3; ++c)
            for (int y = 0; y < s; ++y)
                for (int x = 0; x < s; ++x) tex.at(c, y, x) = 0.05 * x;
        ramp.add({"r", tex});
        Tensor tex_b = tex;
        for (double& v : tex_b.data()) v += 0.05 * s;
        ramp.add({"rb", tex_b});
        Chunk ra = constant_chunk(s, {1, 0, 0, 0, 0, 0, 0, 0});
        Chunk rb = ra;
        for (int k = 0; k < kTilesPerChunk; ++k) {
            ra.tiles[k].material_id = "r";
            rb.tiles[k].material_id = "rb";
        }
        const GameMap cont = grid_map(2, 1, s, {{{0, 0}, ra}, {{1, 0}, rb}}, ramp);
        CHECK(seam_score(cont, {{0, 0}, {1, 0}, Direction::Horizontal}) == doctest::Approx(0.05));
    }
    SUBCASE("single chunk is one generator call") {
        synth::MapConfig cfg;
        cfg.tile_size = 16;
        const GameMap map = synth::make_map(cfg);
        const BrushMask m = generate_random_mask(MaskMode::Hard, 3, 16);
        StitchConfig sc;
        sc.outer_neighbors = false;
        const RegionResult r = generate_region(map, {{{1, 1}, m}}, BaselineGenerator{}, sc);
        CHECK(r.pairs.empty());
        const Tensor expect = baseline_inpaint(MaskedChunkInput::from_chunk(map.chunk({1, 1}), m, build_context(map, {1, 1})));
        CHECK(r.map.chunk({1, 1}).weights().data() == expect.data());
    }
}
