#include "smartbrush/coherence.hpp"

#include "smartbrush/error.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace smartbrush {

namespace {

// Summed-area table with a zero first row/column.
std::vector<double> integral(const Tensor& img, bool squared) {
    const int h = img.height(), w = img.width();
    std::vector<double> s(static_cast<std::size_t>(h + 1) * (w + 1), 0.0);
    for (int c = 0; c < img.channels(); ++c)
        for (int y = 0; y < h; ++y) {
            double row = 0;
            for (int x = 0; x < w; ++x) {
                const double v = img.at(c, y, x);
                row += squared ? v * v : v;
                s[static_cast<std::size_t>(y + 1) * (w + 1) + x + 1] += row;
            }
        }
    for (int y = 1; y <= h; ++y)
        for (int x = 0; x <= w; ++x) s[static_cast<std::size_t>(y) * (w + 1) + x] += s[static_cast<std::size_t>(y - 1) * (w + 1) + x];
    return s;
}

double box(const std::vector<double>& s, int w, int y0, int x0, int bh, int bw) {
    const auto at = [&](int y, int x) { return s[static_cast<std::size_t>(y) * (w + 1) + x]; };
    return at(y0 + bh, x0 + bw) - at(y0, x0 + bw) - at(y0 + bh, x0) + at(y0, x0);
}

}  // namespace

Tensor template_match(const Tensor& texture, const Tensor& region) {
    if (texture.rank() != 3 || region.rank() != 3 || texture.channels() != region.channels())
        fail(ErrorKind::ShapeMismatch, "template_match: texture " + texture.shape_string() + " vs region " +
                                           region.shape_string());
    const int c = texture.channels(), th = texture.height(), tw = texture.width();
    const int h = region.height(), w = region.width();
    if (th > h || tw > w) fail(ErrorKind::InvalidArgument, "template_match: texture larger than region");

    const double n = static_cast<double>(c) * th * tw;
    Tensor t = texture;
    const double tmean = t.mean();
    double tnorm2 = 0;
    for (double& v : t.data()) {
        v -= tmean;
        tnorm2 += v * v;
    }
    const auto sum = integral(region, false);
    const auto sum2 = integral(region, true);

    const int oh = h - th + 1, ow = w - tw + 1;
    Tensor out = Tensor::image(1, oh, ow);
    // cross(oy, ox) = sum t'(c,y,x) * region(c, oy+y, ox+x); accumulated row by row.
    std::vector<double> cross(static_cast<std::size_t>(oh) * ow, 0.0);
    for (int ch = 0; ch < c; ++ch)
        for (int ty = 0; ty < th; ++ty)
            for (int tx = 0; tx < tw; ++tx) {
                const double tv = t.at(ch, ty, tx);
                if (tv == 0.0) continue;
                for (int oy = 0; oy < oh; ++oy) {
                    const double* row = region.ptr() + (static_cast<std::size_t>(ch) * h + oy + ty) * w + tx;
                    double* crow = cross.data() + static_cast<std::size_t>(oy) * ow;
                    for (int ox = 0; ox < ow; ++ox) crow[ox] += tv * row[ox];
                }
            }
    for (int oy = 0; oy < oh; ++oy)
        for (int ox = 0; ox < ow; ++ox) {
            const double s1 = box(sum, w, oy, ox, th, tw);
            const double s2 = box(sum2, w, oy, ox, th, tw);
            const double wvar = s2 - s1 * s1 / n;
            double score = 0;
            if (tnorm2 > 1e-12 * n && wvar > 1e-12 * std::max(1.0, s2)) {
                score = cross[static_cast<std::size_t>(oy) * ow + ox] / std::sqrt(tnorm2 * wvar);
                score = std::clamp(score, -1.0, 1.0);
            }
            out.at(0, oy, ox) = score;
        }
    return out;
}

double top_decile_mean(const Tensor& scores) {
    if (scores.empty()) fail(ErrorKind::InvalidArgument, "top_decile_mean: empty plane");
    std::vector<double> v = scores.data();
    const std::size_t k = (v.size() + 9) / 10;
    std::partial_sort(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k), v.end(), std::greater<>());
    double acc = 0;
    for (std::size_t i = 0; i < k; ++i) acc += v[i];
    return acc / static_cast<double>(k);
}

MaterialRanking rank_materials(const std::vector<std::string>& tile_materials, const MaterialSet& materials,
                               const Tensor& am_region) {
    const int sh = std::min(kSwatchSide, am_region.height());
    const int sw = std::min(kSwatchSide, am_region.width());
    std::map<std::string, std::size_t> seen;
    MaterialRanking out;
    out.planes.resize(tile_materials.size());
    for (std::size_t k = 0; k < tile_materials.size(); ++k) {
        const std::string& id = tile_materials[k];
        if (auto it = seen.find(id); it != seen.end()) {
            out.planes[k] = out.planes[it->second];
            continue;
        }
        const Tensor swatch = resize_bilinear(materials.get(id).texture, sh, sw);
        out.planes[k] = template_match(swatch, am_region);
        out.order.push_back({id, top_decile_mean(out.planes[k])});
        seen.emplace(id, k);
    }
    std::sort(out.order.begin(), out.order.end(), [](const RankedMaterial& a, const RankedMaterial& b) {
        return a.score != b.score ? a.score > b.score : a.id < b.id;
    });
    return out;
}

MaterialRanking rank_materials(const Chunk& chunk, const MaterialSet& materials, const Tensor& am_region) {
    return rank_materials(chunk.material_ids(), materials, am_region);
}

int ContextStack::plane_count() const {
    int n = global_am.empty() ? 0 : global_am.channels();
    n += height.empty() ? 0 : height.channels();
    for (const auto& [name, plane] : objects) n += plane.channels();
    for (const auto& plane : templates) n += plane.channels();
    return n;
}

void ContextStack::validate() const {
    const int s = side();
    const auto check = [s](const Tensor& t, const std::string& what) {
        if (t.rank() != 3 || t.height() != s || t.width() != s)
            fail(ErrorKind::ShapeMismatch, "context plane " + what + " is " + t.shape_string() + ", expected side " +
                                               std::to_string(s));
    };
    check(global_am, "global_am");
    check(height, "height");
    for (const auto& [name, plane] : objects) check(plane, name);
    if (templates.size() != static_cast<std::size_t>(kTilesPerChunk))
        fail(ErrorKind::ShapeMismatch, "context needs " + std::to_string(kTilesPerChunk) + " template planes");
    for (const auto& plane : templates) check(plane, "template");
}

Tensor ContextStack::stacked() const {
    validate();
    const int s = side();
    std::vector<Tensor> parts{global_am, height};
    for (const auto& name : kStandardObjects) {
        auto it = objects.find(name);
        parts.push_back(it != objects.end() ? it->second : Tensor::image(1, s, s));
    }
    for (const auto& plane : templates) parts.push_back(plane);
    return concat_channels(parts);
}

int ContextStack::dominant_template() const {
    int best = 0;
    double best_score = -2.0;
    for (std::size_t k = 0; k < templates.size(); ++k) {
        const double score = top_decile_mean(templates[k]);
        if (score > best_score) {
            best_score = score;
            best = static_cast<int>(k);
        }
    }
    return best;
}

ContextStack ContextStack::zeros(int side) {
    ContextStack c;
    c.global_am = Tensor::image(3, side, side);
    c.height = Tensor::image(1, side, side);
    for (const auto& name : kStandardObjects) c.objects[name] = Tensor::image(1, side, side);
    c.templates.assign(kTilesPerChunk, Tensor::image(1, side, side));
    return c;
}

ContextStack build_context_window(const GameMap& map, int y0, int x0, int side, const MaterialRanking& ranking) {
    if (ranking.planes.size() != static_cast<std::size_t>(kTilesPerChunk))
        fail(ErrorKind::ShapeMismatch, "build_context: ranking must carry one plane per tile");
    ContextStack c;
    c.global_am = map.global_am.crop(y0, x0, side, side);
    c.height = map.height_map.crop(y0, x0, side, side);
    for (const auto& [name, plane] : map.object_masks) c.objects[name] = plane.crop(y0, x0, side, side);
    for (const auto& plane : ranking.planes) {
        Tensor t = resize_bilinear(plane, side, side);
        t.clamp(-1.0, 1.0);
        c.templates.push_back(std::move(t));
    }
    return c;
}

ContextStack build_context(const GameMap& map, ChunkCoord coord, const MaterialRanking& ranking) {
    if (!map.in_bounds(coord)) fail(ErrorKind::InvalidArgument, "build_context: chunk " + coord.str() + " out of bounds");
    const int s = map.tile_size;
    return build_context_window(map, coord.y * s, coord.x * s, s, ranking);
}

ContextStack build_context(const GameMap& map, ChunkCoord coord) {
    if (!map.in_bounds(coord)) fail(ErrorKind::InvalidArgument, "build_context: chunk " + coord.str() + " out of bounds");
    const int s = map.tile_size;
    const Tensor region = map.global_am.crop(coord.y * s, coord.x * s, s, s);
    return build_context(map, coord, rank_materials(map.chunk(coord), map.materials, region));
}

}  // namespace smartbrush
