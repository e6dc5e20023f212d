#pragma once

#include "smartbrush/map_core.hpp"

#include <filesystem>

namespace smartbrush {

inline constexpr int kBundleFormatVersion = 1;

/// Reads a map bundle directory:
///   manifest.json, chunks/<x>_<y>/tile_<k>.png, materials/<id>.png,
///   global_am.png, height.png (16-bit), objects/<name>.png
/// Material textures are resampled to the tile size on load.
GameMap load_map_bundle(const std::filesystem::path& dir);

void save_map_bundle(const GameMap& map, const std::filesystem::path& dir);

}  // namespace smartbrush
