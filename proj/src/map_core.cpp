#include "smartbrush/map_core.hpp"

#include "smartbrush/error.hpp"

#include <algorithm>
#include <limits>
#include <set>

namespace smartbrush {

void MaterialSet::add(Material material) {
    if (material.texture.rank() != 3 || material.texture.channels() != 3) {
        fail(ErrorKind::InvalidArgument, "material " + material.id + ": texture must be RGB");
    }
    if (by_id_.count(material.id)) fail(ErrorKind::Format, "material id collision: " + material.id);
    std::string id = material.id;
    by_id_.emplace(std::move(id), std::move(material));
}

const Material& MaterialSet::get(const std::string& id) const {
    auto it = by_id_.find(id);
    if (it == by_id_.end()) fail(ErrorKind::NotFound, "unresolved material id: " + id);
    return it->second;
}

std::vector<std::string> MaterialSet::ids() const {
    std::vector<std::string> out;
    out.reserve(by_id_.size());
    for (const auto& [id, _] : by_id_) out.push_back(id);
    return out;
}

Tensor Chunk::weights() const {
    const int s = side();
    Tensor out = Tensor::image(kTilesPerChunk, s, s);
    for (int k = 0; k < kTilesPerChunk; ++k) {
        if (tiles[k].pixels.height() != s || tiles[k].pixels.width() != s) {
            fail(ErrorKind::ShapeMismatch, "chunk " + coord.str() + ": tiles differ in size");
        }
        out.set_channel(k, tiles[k].pixels);
    }
    return out;
}

void Chunk::set_weights(const Tensor& stack) {
    if (stack.rank() != 3 || stack.channels() != kTilesPerChunk) {
        fail(ErrorKind::ShapeMismatch, "set_weights: expected an 8-channel stack, got " + stack.shape_string());
    }
    for (int k = 0; k < kTilesPerChunk; ++k) tiles[k].pixels = stack.channel_image(k);
}

std::vector<std::string> Chunk::material_ids() const {
    std::vector<std::string> ids;
    for (const auto& t : tiles) ids.push_back(t.material_id);
    return ids;
}

int Chunk::tile_index(const std::string& material_id) const {
    for (int k = 0; k < kTilesPerChunk; ++k)
        if (tiles[k].material_id == material_id) return k;
    return -1;
}

const Chunk& GameMap::chunk(ChunkCoord c) const {
    auto it = chunks.find(c);
    if (it == chunks.end()) fail(ErrorKind::NotFound, "no chunk at " + c.str());
    return it->second;
}

Chunk& GameMap::chunk(ChunkCoord c) {
    auto it = chunks.find(c);
    if (it == chunks.end()) fail(ErrorKind::NotFound, "no chunk at " + c.str());
    return it->second;
}

void GameMap::validate() const {
    const int full_h = grid_height * tile_size;
    const int full_w = grid_width * tile_size;
    for (const auto& [coord, chunk] : chunks) {
        if (!in_bounds(coord)) fail(ErrorKind::Format, "chunk " + coord.str() + " outside grid");
        for (const auto& tile : chunk.tiles) {
            if (tile.pixels.rank() != 3 || tile.pixels.channels() != 1 || tile.side() != tile_size ||
                tile.pixels.width() != tile_size) {
                fail(ErrorKind::Format, "chunk " + coord.str() + ": tile size does not match map tile size");
            }
            if (tile.pixels.min() < 0.0 || tile.pixels.max() > 1.0) {
                fail(ErrorKind::Format, "chunk " + coord.str() + ": weights outside [0,1]");
            }
            if (!materials.contains(tile.material_id)) {
                fail(ErrorKind::NotFound, "unresolved material id: " + tile.material_id);
            }
        }
    }
    auto check_plane = [&](const Tensor& t, int channels, const std::string& name) {
        if (t.empty()) return;
        if (t.channels() != channels || t.height() != full_h || t.width() != full_w) {
            fail(ErrorKind::Format, name + " does not cover the grid extent");
        }
    };
    check_plane(global_am, 3, "global_am");
    check_plane(height_map, 1, "height map");
    for (const auto& [name, plane] : object_masks) check_plane(plane, 1, "object mask " + name);
}

Tensor blend_chunk(const Chunk& chunk, const MaterialSet& materials) {
    const int s = chunk.side();
    std::array<const Tensor*, kTilesPerChunk> textures{};
    for (int k = 0; k < kTilesPerChunk; ++k) {
        const auto& tile = chunk.tiles[k];
        if (tile.pixels.height() != s || tile.pixels.width() != s) {
            fail(ErrorKind::ShapeMismatch, "blend_chunk: tiles differ in size");
        }
        const Tensor& tex = materials.get(tile.material_id).texture;
        if (tex.height() != s || tex.width() != s) {
            fail(ErrorKind::ShapeMismatch, "blend_chunk: texture " + tile.material_id + " is " + tex.shape_string() +
                                               ", tile side is " + std::to_string(s));
        }
        textures[k] = &tex;
    }
    Tensor out = Tensor::image(3, s, s);
    for (int c = 0; c < 3; ++c) {
        for (int y = 0; y < s; ++y) {
            for (int x = 0; x < s; ++x) {
                double acc = 0.0;
                for (int k = 0; k < kTilesPerChunk; ++k) acc += chunk.tiles[k].pixels.at(0, y, x) * textures[k]->at(c, y, x);
                out.at(c, y, x) = std::clamp(acc, 0.0, 1.0);
            }
        }
    }
    return out;
}

int dominant_tile(const Chunk& chunk) {
    int best = 0;
    double best_sum = -1.0;
    for (int k = 0; k < kTilesPerChunk; ++k) {
        const double s = chunk.tiles[k].pixels.sum();
        if (s > best_sum) {
            best_sum = s;
            best = k;
        }
    }
    return best;
}

Chunk normalize_weights(const Chunk& chunk, std::optional<int> dominant) {
    const int fallback = dominant.value_or(dominant_tile(chunk));
    if (fallback < 0 || fallback >= kTilesPerChunk) fail(ErrorKind::InvalidArgument, "dominant index out of range");
    Chunk out = chunk;
    const int s = chunk.side();
    for (int y = 0; y < s; ++y) {
        for (int x = 0; x < s; ++x) {
            double sum = 0.0;
            for (const auto& t : chunk.tiles) sum += std::clamp(t.pixels.at(0, y, x), 0.0, 1.0);
            for (int k = 0; k < kTilesPerChunk; ++k) {
                const double w = std::clamp(chunk.tiles[k].pixels.at(0, y, x), 0.0, 1.0);
                out.tiles[k].pixels.at(0, y, x) = sum > 0 ? w / sum : (k == fallback ? 1.0 : 0.0);
            }
        }
    }
    return out;
}

WeightSumStats weight_sum_stats(const Chunk& chunk) {
    WeightSumStats stats{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(), 0, 0};
    const int s = chunk.side();
    for (int y = 0; y < s; ++y) {
        for (int x = 0; x < s; ++x) {
            double sum = 0.0;
            for (const auto& t : chunk.tiles) sum += t.pixels.at(0, y, x);
            stats.min = std::min(stats.min, sum);
            stats.max = std::max(stats.max, sum);
            stats.mean += sum;
            if (sum == 0.0) ++stats.zero_pixels;
        }
    }
    stats.mean /= static_cast<double>(s) * s;
    return stats;
}

Chunk apply_brush(const Chunk& chunk, const BrushMask& brush) {
    const int s = chunk.side();
    if (brush.pixels.height() != s || brush.pixels.width() != s) {
        fail(ErrorKind::ShapeMismatch, "apply_brush: brush is " + brush.pixels.shape_string() + ", tiles are " +
                                           std::to_string(s) + "x" + std::to_string(s));
    }
    Chunk out = chunk;
    for (auto& tile : out.tiles) {
        for (std::size_t i = 0; i < tile.pixels.size(); ++i)
            if (brush.pixels[i] != 0.0) tile.pixels[i] = 0.0;
    }
    return out;
}

Tensor render_region(const GameMap& map, ChunkCoord from, ChunkCoord to) {
    if (to.x < from.x || to.y < from.y) fail(ErrorKind::InvalidArgument, "render_region: empty region");
    const int s = map.tile_size;
    Tensor out = Tensor::image(3, (to.y - from.y + 1) * s, (to.x - from.x + 1) * s);
    for (int cy = from.y; cy <= to.y; ++cy) {
        for (int cx = from.x; cx <= to.x; ++cx) {
            auto it = map.chunks.find({cx, cy});
            if (it == map.chunks.end()) continue;  // missing chunks render black
            out.paste(blend_chunk(it->second, map.materials), (cy - from.y) * s, (cx - from.x) * s);
        }
    }
    return out;
}

}  // namespace smartbrush
