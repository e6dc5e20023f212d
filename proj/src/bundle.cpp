#include "smartbrush/bundle.hpp"

#include "smartbrush/error.hpp"
#include "smartbrush/png_io.hpp"

#include <json.hpp>

#include <fstream>
#include <set>

namespace smartbrush {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path chunk_dir(const fs::path& root, ChunkCoord c) { return root / "chunks" / c.str(); }

fs::path tile_path(const fs::path& root, ChunkCoord c, int k) {
    return chunk_dir(root, c) / ("tile_" + std::to_string(k) + ".png");
}

Tensor binarize(Tensor t) {
    for (double& v : t.data()) v = v >= 0.5 ? 1.0 : 0.0;
    return t;
}

}  // namespace

GameMap load_map_bundle(const fs::path& dir) {
    const fs::path manifest_path = dir / "manifest.json";
    if (!fs::exists(manifest_path)) fail(ErrorKind::Format, "missing manifest: " + manifest_path.string());

    json manifest;
    try {
        std::ifstream in(manifest_path);
        in >> manifest;
    } catch (const json::exception& e) {
        fail(ErrorKind::Format, "malformed manifest " + manifest_path.string() + ": " + e.what());
    }

    GameMap map;
    try {
        const int version = manifest.at("format_version").get<int>();
        if (version != kBundleFormatVersion) {
            fail(ErrorKind::Format, "unsupported bundle format_version " + std::to_string(version));
        }
        map.id = manifest.value("id", dir.filename().string());
        map.category = manifest.value("category", "");
        map.grid_width = manifest.at("grid").at("width").get<int>();
        map.grid_height = manifest.at("grid").at("height").get<int>();
        map.tile_size = manifest.at("tile_size").get<int>();
        if (map.tile_size < 1 || map.grid_width < 1 || map.grid_height < 1) {
            fail(ErrorKind::Format, "manifest: grid and tile size must be positive");
        }

        for (const auto& entry : manifest.at("materials")) {
            const std::string id = entry.at("id").get<std::string>();
            if (map.materials.contains(id)) fail(ErrorKind::Format, "material id collision: " + id);
            auto tex = png::read(dir / "materials" / (id + ".png")).pixels;
            if (tex.channels() != 3) fail(ErrorKind::Format, "material " + id + " is not RGB");
            map.materials.add({id, resize_bilinear(tex, map.tile_size, map.tile_size)});
        }

        for (const auto& entry : manifest.at("chunks")) {
            ChunkCoord coord{entry.at("x").get<int>(), entry.at("y").get<int>()};
            const auto ids = entry.at("materials").get<std::vector<std::string>>();
            std::size_t files = 0;
            if (fs::is_directory(chunk_dir(dir, coord))) {
                for (const auto& f : fs::directory_iterator(chunk_dir(dir, coord))) {
                    const auto name = f.path().filename().string();
                    if (name.rfind("tile_", 0) == 0 && f.path().extension() == ".png") ++files;
                }
            }
            if (ids.size() != kTilesPerChunk || files != kTilesPerChunk) {
                fail(ErrorKind::Format, "chunk tile count: chunk " + coord.str() + " has " + std::to_string(files) +
                                            " tile files and " + std::to_string(ids.size()) + " material ids, expected 8");
            }
            if (map.chunks.count(coord)) fail(ErrorKind::Format, "duplicate chunk " + coord.str());
            Chunk chunk;
            chunk.coord = coord;
            for (int k = 0; k < kTilesPerChunk; ++k) {
                auto tile = png::read(tile_path(dir, coord, k)).pixels;
                if (tile.channels() != 1) fail(ErrorKind::Format, "tile " + tile_path(dir, coord, k).string() + " is not grayscale");
                chunk.tiles[k] = {std::move(tile), ids[k]};
            }
            map.chunks.emplace(coord, std::move(chunk));
        }

        if (fs::exists(dir / "global_am.png")) map.global_am = png::read(dir / "global_am.png").pixels;
        if (fs::exists(dir / "height.png")) map.height_map = png::read(dir / "height.png").pixels;
        for (const auto& name : manifest.value("objects", std::vector<std::string>{})) {
            map.object_masks[name] = binarize(png::read(dir / "objects" / (name + ".png")).pixels);
        }
    } catch (const json::exception& e) {
        fail(ErrorKind::Format, "malformed manifest " + manifest_path.string() + ": " + e.what());
    }
    map.validate();
    return map;
}

void save_map_bundle(const GameMap& map, const fs::path& dir) {
    map.validate();
    fs::create_directories(dir);

    json manifest;
    manifest["format_version"] = kBundleFormatVersion;
    manifest["id"] = map.id;
    manifest["category"] = map.category;
    manifest["grid"] = {{"width", map.grid_width}, {"height", map.grid_height}};
    manifest["tile_size"] = map.tile_size;

    json materials = json::array();
    for (const auto& [id, material] : map.materials) {
        materials.push_back({{"id", id}});
        png::write(dir / "materials" / (id + ".png"), material.texture, png::Format::Rgb8);
    }
    manifest["materials"] = materials;

    json chunks = json::array();
    for (const auto& [coord, chunk] : map.chunks) {
        chunks.push_back({{"x", coord.x}, {"y", coord.y}, {"materials", chunk.material_ids()}});
        for (int k = 0; k < kTilesPerChunk; ++k) {
            png::write(tile_path(dir, coord, k), chunk.tiles[k].pixels, png::Format::Gray8);
        }
    }
    manifest["chunks"] = chunks;

    if (!map.global_am.empty()) png::write(dir / "global_am.png", map.global_am, png::Format::Rgb8);
    if (!map.height_map.empty()) png::write(dir / "height.png", map.height_map, png::Format::Gray16);
    json objects = json::array();
    for (const auto& [name, plane] : map.object_masks) {
        objects.push_back(name);
        png::write(dir / "objects" / (name + ".png"), plane, png::Format::Gray8);
    }
    manifest["objects"] = objects;

    std::ofstream out(dir / "manifest.json");
    if (!out) fail(ErrorKind::Io, "cannot write manifest in " + dir.string());
    out << manifest.dump(2) << '\n';
}

}  // namespace smartbrush
