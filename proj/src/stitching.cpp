#include "smartbrush/stitching.hpp"

#include "smartbrush/error.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <future>
#include <set>

namespace smartbrush {

std::string to_string(Direction d) { return d == Direction::Horizontal ? "horizontal" : "vertical"; }

namespace {

std::uint64_t mix(std::uint64_t h, std::uint64_t v) {
    h ^= v + 0x9E3779B97F4A7C15ULL + (h << 6) + (h >> 2);
    h ^= h >> 31;
    h *= 0xBF58476D1CE4E5B9ULL;
    return h ^ (h >> 29);
}

std::uint64_t coord_seed(std::uint64_t seed, ChunkCoord c, std::uint64_t salt) {
    return mix(mix(mix(seed, salt), static_cast<std::uint32_t>(c.x)), static_cast<std::uint32_t>(c.y));
}

void check_mask(const BrushMask& m, int side, const char* what) {
    if (m.pixels.rank() != 3 || m.pixels.channels() != 1 || m.side() != side || m.pixels.width() != side)
        fail(ErrorKind::ShapeMismatch, std::string(what) + " must be (1, " + std::to_string(side) + ", " +
                                           std::to_string(side) + ")");
}

/// Depth of (y, x) from a border of a side x side plane.
int depth(Border border, int side, int y, int x) {
    switch (border) {
    case Border::Left: return x;
    case Border::Right: return side - 1 - x;
    case Border::Top: return y;
    case Border::Bottom: return side - 1 - y;
    }
    return 0;
}

/// Pixel at position `i` along `border`, on the edge itself.
std::pair<int, int> edge_pixel(Border border, int side, int i) {
    switch (border) {
    case Border::Left: return {i, 0};
    case Border::Right: return {i, side - 1};
    case Border::Top: return {0, i};
    case Border::Bottom: return {side - 1, i};
    }
    return {0, 0};
}

Border opposite(Border b) {
    switch (b) {
    case Border::Left: return Border::Right;
    case Border::Right: return Border::Left;
    case Border::Top: return Border::Bottom;
    case Border::Bottom: return Border::Top;
    }
    return b;
}

double exclusive_mass(const Chunk& chunk, const std::vector<std::string>& other_ids, int y, int x) {
    double e = 0;
    for (const auto& tile : chunk.tiles)
        if (std::find(other_ids.begin(), other_ids.end(), tile.material_id) == other_ids.end()) e += tile.pixels.at(0, y, x);
    return e;
}

/// Mean over the border of border_fill_profile.
std::vector<double> mean_fill(const Chunk& chunk, const Chunk& neighbour, Border border) {
    const Tensor profile = border_fill_profile(chunk, neighbour, border);
    std::vector<double> out(kTilesPerChunk, 0.0);
    for (int k = 0; k < kTilesPerChunk; ++k)
        for (int i = 0; i < profile.dim(1); ++i) out[k] += profile.at(k, i) / profile.dim(1);
    return out;
}

Border border_of_a(Direction d) { return d == Direction::Horizontal ? Border::Right : Border::Bottom; }
Border border_of_b(Direction d) { return d == Direction::Horizontal ? Border::Left : Border::Top; }

/// Maps a composite pixel back to (is_b, y, x) in the owning chunk.
struct Source {
    bool b;
    int y;
    int x;
};
Source source_of(Direction d, int side, int y, int x) {
    const int h = side / 2;
    if (d == Direction::Horizontal) return x < h ? Source{false, y, x + h} : Source{true, y, x - h};
    return y < h ? Source{false, y + h, x} : Source{true, y - h, x};
}

void check_pair(const GameMap& map, const AdjacentPair& pair) {
    if (!map.in_bounds(pair.a) || !map.in_bounds(pair.b)) fail(ErrorKind::InvalidArgument, "pair outside the map grid");
    const ChunkCoord expect = pair.direction == Direction::Horizontal ? ChunkCoord{pair.a.x + 1, pair.a.y}
                                                                      : ChunkCoord{pair.a.x, pair.a.y + 1};
    if (pair.b != expect) fail(ErrorKind::InvalidArgument, "chunks " + pair.a.str() + " and " + pair.b.str() + " are not adjacent as declared");
}

std::vector<std::string> exclusive_near_border(const Chunk& chunk, const Chunk& other, Border border, int band) {
    const auto other_ids = other.material_ids();
    std::vector<std::string> out;
    const int s = chunk.side();
    for (const auto& tile : chunk.tiles) {
        if (std::find(other_ids.begin(), other_ids.end(), tile.material_id) != other_ids.end()) continue;
        if (std::find(out.begin(), out.end(), tile.material_id) != out.end()) continue;
        bool present = false;
        for (int y = 0; y < s && !present; ++y)
            for (int x = 0; x < s && !present; ++x)
                present = depth(border, s, y, x) < band && tile.pixels.at(0, y, x) > 0;
        if (present) out.push_back(tile.material_id);
    }
    return out;
}

bool touches_border(const BrushMask& m, Border border, int band) {
    const int s = m.side();
    for (int y = 0; y < s; ++y)
        for (int x = 0; x < s; ++x)
            if (depth(border, s, y, x) < band && m.pixels.at(0, y, x) > 0) return true;
    return false;
}

}  // namespace

Tensor border_fill_profile(const Chunk& chunk, const Chunk& neighbour, Border border) {
    const int s = chunk.side();
    if (neighbour.side() != s) fail(ErrorKind::ShapeMismatch, "chunks differ in size");
    Tensor profile = Tensor::matrix(kTilesPerChunk, s);
    std::vector<double> mean(kTilesPerChunk, 0.0);
    for (int i = 0; i < s; ++i) {
        const auto [ny, nx] = edge_pixel(opposite(border), s, i);
        double sum = 0;
        for (int k = 0; k < kTilesPerChunk; ++k) {
            const std::string& id = chunk.tiles[k].material_id;
            const int j = neighbour.tile_index(id);
            if (j < 0 || chunk.tile_index(id) != k) continue;
            sum += profile.at(k, i) = neighbour.tiles[j].pixels.at(0, ny, nx);
        }
        for (int k = 0; k < kTilesPerChunk; ++k) {
            mean[k] += profile.at(k, i);
            if (sum > 0) profile.at(k, i) /= sum;
        }
    }
    double total = 0;
    for (double v : mean) total += v;
    for (int i = 0; i < s; ++i) {
        double sum = 0;
        for (int k = 0; k < kTilesPerChunk; ++k) sum += profile.at(k, i);
        if (sum > 0 || total == 0) continue;
        for (int k = 0; k < kTilesPerChunk; ++k) profile.at(k, i) = mean[k] / total;
    }
    return profile;
}

bool mask_intersection(const AdjacentPair& pair, const BrushMask& mask_a, const BrushMask& mask_b, int band) {
    const int s = mask_a.side();
    check_mask(mask_a, s, "brush a");
    check_mask(mask_b, s, "brush b");
    if (band < 1 || band > s) fail(ErrorKind::InvalidArgument, "intersection band must be in [1, side]");
    for (int along = 0; along < s; ++along) {
        bool in_a = false, in_b = false;
        for (int d = 0; d < band; ++d) {
            if (pair.direction == Direction::Horizontal) {
                in_a = in_a || mask_a.pixels.at(0, along, s - 1 - d) > 0;
                in_b = in_b || mask_b.pixels.at(0, along, d) > 0;
            } else {
                in_a = in_a || mask_a.pixels.at(0, s - 1 - d, along) > 0;
                in_b = in_b || mask_b.pixels.at(0, d, along) > 0;
            }
        }
        if (in_a && in_b) return true;
    }
    return false;
}

std::vector<AdjacentPair> find_adjacent_pairs(const BrushedChunks& brushed, int band) {
    std::vector<AdjacentPair> out;
    for (const auto& [c, mask] : brushed) {
        for (Direction d : {Direction::Horizontal, Direction::Vertical}) {
            const ChunkCoord n = d == Direction::Horizontal ? ChunkCoord{c.x + 1, c.y} : ChunkCoord{c.x, c.y + 1};
            const auto it = brushed.find(n);
            if (it == brushed.end()) continue;
            AdjacentPair p{c, n, d, false};
            p.intersecting = mask_intersection(p, mask, it->second, band);
            out.push_back(p);
        }
    }
    std::sort(out.begin(), out.end(), [](const AdjacentPair& l, const AdjacentPair& r) {
        return std::tie(l.a, l.b) < std::tie(r.a, r.b);
    });
    return out;
}

Tensor composite_halves(Direction direction, const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape() || a.rank() != 3 || a.height() != a.width())
        fail(ErrorKind::ShapeMismatch, "composite halves need two equal square (C, s, s) planes");
    const int s = a.height();
    if (s % 2 != 0) fail(ErrorKind::InvalidArgument, "composite needs an even side");
    Tensor out = Tensor::image(a.channels(), s, s);
    for (int c = 0; c < a.channels(); ++c)
        for (int y = 0; y < s; ++y)
            for (int x = 0; x < s; ++x) {
                const Source src = source_of(direction, s, y, x);
                out.at(c, y, x) = (src.b ? b : a).at(c, src.y, src.x);
            }
    return out;
}

TransitionMask make_transition_mask(Direction direction, int tile_side, double rx, double ry, const BrushMask& brush_a,
                                    const BrushMask& brush_b) {
    if (tile_side < 2 || tile_side % 2 != 0) fail(ErrorKind::InvalidArgument, "tile side must be even and >= 2");
    if (!(rx > 0) || !(ry > 0)) fail(ErrorKind::InvalidArgument, "ellipse radii must be positive");
    check_mask(brush_a, tile_side, "brush a");
    check_mask(brush_b, tile_side, "brush b");
    const Tensor brush = composite_halves(direction, brush_a.pixels, brush_b.pixels);
    TransitionMask out{direction, rx, ry, BrushMask::zeros(tile_side)};
    const double c = tile_side / 2.0;
    for (int y = 0; y < tile_side; ++y)
        for (int x = 0; x < tile_side; ++x) {
            const double dy = y + 0.5 - c, dx = x + 0.5 - c;
            const double along = direction == Direction::Horizontal ? dy : dx;
            const double across = direction == Direction::Horizontal ? dx : dy;
            const bool inside = (along / rx) * (along / rx) + (across / ry) * (across / ry) <= 1.0;
            out.mask.pixels.at(0, y, x) = inside && brush.at(0, y, x) > 0 ? 1.0 : 0.0;
        }
    return out;
}

std::vector<std::string> shared_materials(const Chunk& a, const Chunk& b) {
    const auto ib = b.material_ids();
    std::vector<std::string> out;
    for (const auto& id : a.material_ids())
        if (std::find(ib.begin(), ib.end(), id) != ib.end() && std::find(out.begin(), out.end(), id) == out.end())
            out.push_back(id);
    return out;
}

GameMap stitch_pair(const GameMap& map, const AdjacentPair& pair, const BrushMask& brush_a, const BrushMask& brush_b,
                    const Generator& generator, const StitchConfig& config) {
    check_pair(map, pair);
    const int s = map.tile_size;
    const TransitionMask tm = make_transition_mask(pair.direction, s, config.rx_fraction * s, config.ry_fraction * s,
                                                   brush_a, brush_b);
    const Chunk& ca = map.chunk(pair.a);
    const Chunk& cb = map.chunk(pair.b);
    const auto shared = shared_materials(ca, cb);
    GameMap out = map;
    if (shared.empty() || tm.mask.coverage() == 0) return out;

    // Channel k follows a's tile order; only the first tile of each shared
    // material is populated.
    std::vector<int> b_index(kTilesPerChunk, -1);
    std::vector<std::string> ids(kTilesPerChunk);
    for (int k = 0; k < kTilesPerChunk; ++k) {
        ids[k] = ca.tiles[k].material_id;
        if (std::find(shared.begin(), shared.end(), ids[k]) != shared.end() && ca.tile_index(ids[k]) == k)
            b_index[k] = cb.tile_index(ids[k]);
    }
    const auto ids_a = ca.material_ids(), ids_b = cb.material_ids();
    const std::vector<double> pi_a = mean_fill(ca, cb, border_of_a(pair.direction));
    const std::vector<double> pi_b_own = mean_fill(cb, ca, border_of_b(pair.direction));
    std::vector<double> pi_b(kTilesPerChunk, 0.0);
    for (int k = 0; k < kTilesPerChunk; ++k)
        if (b_index[k] >= 0) pi_b[k] = pi_b_own[b_index[k]];
    Tensor excl = Tensor::image(1, s, s);  // exclusive mass per composite pixel
    for (int y = 0; y < s; ++y)
        for (int x = 0; x < s; ++x) {
            const Source src = source_of(pair.direction, s, y, x);
            excl.at(0, y, x) = src.b ? exclusive_mass(cb, ids_a, src.y, src.x) : exclusive_mass(ca, ids_b, src.y, src.x);
        }
    auto projection = [&](int k, int y, int x) {
        const Source src = source_of(pair.direction, s, y, x);
        return excl.at(0, y, x) * (src.b ? pi_b[k] : pi_a[k]);
    };
    Tensor tiles = Tensor::image(kTilesPerChunk, s, s);
    for (int k = 0; k < kTilesPerChunk; ++k) {
        if (b_index[k] < 0) continue;
        const Tensor plane = composite_halves(pair.direction, ca.tiles[k].pixels, cb.tiles[b_index[k]].pixels);
        for (int y = 0; y < s; ++y)
            for (int x = 0; x < s; ++x) tiles.at(k, y, x) = std::min(1.0, plane.at(0, y, x) + projection(k, y, x));
    }

    const int h = s / 2;
    const int y0 = pair.a.y * s + (pair.direction == Direction::Vertical ? h : 0);
    const int x0 = pair.a.x * s + (pair.direction == Direction::Horizontal ? h : 0);
    Tensor am = Tensor::image(3, s, s);
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < s; ++y)
            for (int x = 0; x < s; ++x) am.at(c, y, x) = map.global_am.at(c, y0 + y, x0 + x);
    const MaterialRanking ranking = rank_materials(ids, map.materials, am);
    ContextStack context = build_context_window(map, y0, x0, s, ranking);
    // Channels that are not written back must never look like the best match.
    for (int k = 0; k < kTilesPerChunk; ++k)
        if (b_index[k] < 0) context.templates[k] = Tensor::image(1, s, s, -1.0);
    MaskedChunkInput input = MaskedChunkInput::from_tiles(tiles, tm.mask, std::move(context));
    const Tensor generated = generator.generate(input, mix(coord_seed(config.seed, pair.a, 0x57), static_cast<std::uint64_t>(pair.direction)));

    Chunk& oa = out.chunk(pair.a);
    Chunk& ob = out.chunk(pair.b);
    for (int k = 0; k < kTilesPerChunk; ++k) {
        if (b_index[k] < 0) continue;
        for (int y = 0; y < s; ++y)
            for (int x = 0; x < s; ++x) {
                if (tm.mask.pixels.at(0, y, x) == 0) continue;
                const Source src = source_of(pair.direction, s, y, x);
                Tensor& dst = src.b ? ob.tiles[b_index[k]].pixels : oa.tiles[k].pixels;
                dst.at(0, src.y, src.x) = std::clamp(generated.at(k, y, x) - projection(k, y, x), 0.0, 1.0);
            }
    }
    return out;
}

Chunk gaussian_material_smoothing(const Chunk& chunk, const std::vector<std::string>& exclusive_ids, Border border,
                                  double sigma, int band, const BrushMask* restrict_to, const Tensor* fill) {
    const int s = chunk.side();
    if (!(sigma > 0)) fail(ErrorKind::InvalidArgument, "smoothing sigma must be positive");
    if (band < 1 || band > s) fail(ErrorKind::InvalidArgument, "smoothing band must be in [1, side]");
    if (restrict_to) check_mask(*restrict_to, s, "smoothing mask");
    if (fill && (fill->rank() != 2 || fill->dim(0) != kTilesPerChunk || fill->dim(1) != s))
        fail(ErrorKind::ShapeMismatch, "smoothing fill profile must be (8, side)");
    for (const auto& id : exclusive_ids)
        if (chunk.tile_index(id) < 0) fail(ErrorKind::NotFound, "material '" + id + "' is not in chunk " + chunk.coord.str());
    const bool vertical_border = border == Border::Left || border == Border::Right;
    std::vector<double> fill_sum(static_cast<std::size_t>(s), 1.0);
    if (fill)
        for (int i = 0; i < s; ++i) {
            fill_sum[i] = 0;
            for (int k = 0; k < kTilesPerChunk; ++k) fill_sum[i] += fill->at(k, i);
        }
    Chunk out = chunk;
    for (int y = 0; y < s; ++y)
        for (int x = 0; x < s; ++x) {
            const int d = depth(border, s, y, x);
            const int along = vertical_border ? y : x;
            if (d >= band || (restrict_to && restrict_to->pixels.at(0, y, x) == 0) || fill_sum[along] == 0) continue;
            const double keep = 1.0 - std::exp(-static_cast<double>(d) * d / (2 * sigma * sigma));
            double removed = 0;
            for (auto& tile : out.tiles) {
                if (std::find(exclusive_ids.begin(), exclusive_ids.end(), tile.material_id) == exclusive_ids.end()) continue;
                double& w = tile.pixels.at(0, y, x);
                removed += w * (1 - keep);
                w *= keep;
            }
            if (!fill) continue;
            for (int k = 0; k < kTilesPerChunk; ++k) {
                double& w = out.tiles[k].pixels.at(0, y, x);
                w = std::min(1.0, w + removed * fill->at(k, along));
            }
        }
    return out;
}

double seam_score(const GameMap& map, const AdjacentPair& pair) {
    check_pair(map, pair);
    const Tensor a = blend_chunk(map.chunk(pair.a), map.materials);
    const Tensor b = blend_chunk(map.chunk(pair.b), map.materials);
    const int s = a.height();
    double total = 0;
    for (int c = 0; c < 3; ++c)
        for (int i = 0; i < s; ++i)
            total += pair.direction == Direction::Horizontal ? std::abs(a.at(c, i, s - 1) - b.at(c, i, 0))
                                                             : std::abs(a.at(c, s - 1, i) - b.at(c, 0, i));
    return total / (3.0 * s);
}

RegionResult generate_region(const GameMap& map, const BrushedChunks& brushed, const Generator& generator,
                             const StitchConfig& config) {
    const int s = map.tile_size;
    for (const auto& [c, m] : brushed) {
        if (!map.in_bounds(c) || !map.chunks.count(c)) fail(ErrorKind::NotFound, "chunk " + c.str() + " is not in the map");
        check_mask(m, s, ("brush for chunk " + c.str()).c_str());
    }
    using clock = std::chrono::steady_clock;
    RegionResult result{map, {}, 0, 0};
    GameMap& out = result.map;

    const auto t0 = clock::now();
    std::vector<std::pair<ChunkCoord, std::future<Tensor>>> jobs;
    for (const auto& [c, m] : brushed) {
        const ChunkCoord coord = c;
        const BrushMask* mask = &m;
        jobs.emplace_back(coord, std::async(brushed.size() > 1 ? std::launch::async : std::launch::deferred, [&, coord, mask] {
            MaskedChunkInput input = MaskedChunkInput::from_chunk(map.chunk(coord), *mask, build_context(map, coord));
            return generator.generate(input, coord_seed(config.seed, coord, 0x47));
        }));
    }
    for (auto& [c, job] : jobs) out.chunk(c).set_weights(job.get());
    const auto t1 = clock::now();
    result.generate_seconds = std::chrono::duration<double>(t1 - t0).count();

    const auto pairs = find_adjacent_pairs(brushed, config.intersection_band);
    for (const auto& p : pairs) result.pairs.push_back({p, seam_score(out, p), 0, false, {}, {}});

    if (config.stitch) {
        for (auto& report : result.pairs) {
            if (!report.pair.intersecting) continue;
            out = stitch_pair(out, report.pair, brushed.at(report.pair.a), brushed.at(report.pair.b), generator, config);
            report.stitched = true;
        }
        if (config.outer_neighbors) {
            // Brushed chunk against an untouched neighbour: the neighbour's
            // half carries a zero brush, so only the brushed side is written.
            for (const auto& [c, m] : brushed) {
                const std::array<std::pair<ChunkCoord, Direction>, 4> around{{{{c.x - 1, c.y}, Direction::Horizontal},
                                                                              {{c.x + 1, c.y}, Direction::Horizontal},
                                                                              {{c.x, c.y - 1}, Direction::Vertical},
                                                                              {{c.x, c.y + 1}, Direction::Vertical}}};
                for (const auto& [n, d] : around) {
                    if (!map.in_bounds(n) || !map.chunks.count(n) || brushed.count(n)) continue;
                    const bool c_first = n > c;
                    const AdjacentPair p{c_first ? c : n, c_first ? n : c, d, false};
                    const BrushMask none = BrushMask::zeros(s);
                    const BrushMask& ma = c_first ? m : none;
                    const BrushMask& mb = c_first ? none : m;
                    if (!touches_border(m, c_first ? border_of_a(d) : border_of_b(d), config.intersection_band)) continue;
                    out = stitch_pair(out, p, ma, mb, generator, config);
                }
            }
        }
    }

    if (config.smooth) {
        const int band = std::max(1, static_cast<int>(std::lround(config.smoothing_band_fraction * s)));
        const double sigma = config.smoothing_sigma_fraction * band;
        for (auto& report : result.pairs) {
            const auto& p = report.pair;
            Chunk& a = out.chunk(p.a);
            Chunk& b = out.chunk(p.b);
            report.smoothed_a = exclusive_near_border(a, b, border_of_a(p.direction), band);
            report.smoothed_b = exclusive_near_border(b, a, border_of_b(p.direction), band);
            const Tensor fill_a = border_fill_profile(a, b, border_of_a(p.direction));
            const Tensor fill_b = border_fill_profile(b, a, border_of_b(p.direction));
            const Chunk na = gaussian_material_smoothing(a, report.smoothed_a, border_of_a(p.direction), sigma, band, &brushed.at(p.a), &fill_a);
            const Chunk nb = gaussian_material_smoothing(b, report.smoothed_b, border_of_b(p.direction), sigma, band, &brushed.at(p.b), &fill_b);
            a = na;
            b = nb;
        }
    }
    for (auto& report : result.pairs) report.seam_after = seam_score(out, report.pair);
    result.stitch_seconds = std::chrono::duration<double>(clock::now() - t1).count();
    return result;
}

}  // namespace smartbrush
