#pragma once

#include "smartbrush/map_core.hpp"

#include <filesystem>
#include <random>
#include <string>

namespace smartbrush::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() / ("smartbrush_" + tag + "_" + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

inline Tensor random_tensor(std::vector<int> shape, std::mt19937_64& rng, double lo = 0.0, double hi = 1.0) {
    std::uniform_real_distribution<double> dist(lo, hi);
    Tensor t(std::move(shape));
    for (double& v : t.data()) v = dist(rng);
    return t;
}

inline Tensor uniform_color(int side, double r, double g, double b) {
    Tensor t = Tensor::image(3, side, side);
    for (int y = 0; y < side; ++y)
        for (int x = 0; x < side; ++x) {
            t.at(0, y, x) = r;
            t.at(1, y, x) = g;
            t.at(2, y, x) = b;
        }
    return t;
}

/// Chunk over materials "m0".."m7" with random weights.
inline Chunk random_chunk(int side, std::mt19937_64& rng) {
    Chunk c;
    for (int k = 0; k < kTilesPerChunk; ++k) c.tiles[k] = {random_tensor({1, side, side}, rng), "m" + std::to_string(k)};
    return c;
}

inline MaterialSet random_materials(int side, std::mt19937_64& rng) {
    MaterialSet set;
    for (int k = 0; k < kTilesPerChunk; ++k) set.add({"m" + std::to_string(k), random_tensor({3, side, side}, rng)});
    return set;
}

inline Chunk constant_chunk(int side, std::array<double, kTilesPerChunk> weights) {
    Chunk c;
    for (int k = 0; k < kTilesPerChunk; ++k) c.tiles[k] = {Tensor::image(1, side, side, weights[k]), "m" + std::to_string(k)};
    return c;
}

}  // namespace smartbrush::testing
