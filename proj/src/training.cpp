#include "smartbrush/training.hpp"

#include "smartbrush/coherence.hpp"
#include "smartbrush/error.hpp"
#include "smartbrush/synth.hpp"

#include <cmath>

namespace smartbrush {

MaskMode Curriculum::sample(double progress, std::mt19937_64& rng) const {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    if (progress < medium_until) return MaskMode::Medium;
    if (progress < hard_until) {
        return u(rng) * (medium_ratio + hard_ratio) < medium_ratio ? MaskMode::Medium : MaskMode::Hard;
    }
    const double v = u(rng) * (medium_ratio + hard_ratio + complete_ratio);
    if (v < medium_ratio) return MaskMode::Medium;
    if (v < medium_ratio + hard_ratio) return MaskMode::Hard;
    return MaskMode::Complete;
}

std::vector<TrainingSample> samples_from_map(const GameMap& map) {
    std::vector<TrainingSample> out;
    const int s = map.tile_size;
    for (const auto& [coord, chunk] : map.chunks) {
        const auto ranking = rank_materials(chunk, map.materials, map.global_am.crop(coord.y * s, coord.x * s, s, s));
        const ContextStack ctx = build_context(map, coord, ranking);
        out.push_back({normalize_weights(chunk, chunk.tile_index(ranking.order.front().id)).weights(), ctx.stacked()});
    }
    return out;
}

std::vector<TrainingSample> striped_dataset(int count, int side, std::uint64_t seed) {
    std::vector<TrainingSample> out;
    for (int i = 0; i < count; ++i)
        out.push_back({synth::striped_tiles(seed + static_cast<std::uint64_t>(i), side), ContextStack::zeros(side).stacked()});
    return out;
}

void check_finite(double value, const char* what, int step) {
    if (!std::isfinite(value))
        fail(ErrorKind::Numerical, std::string(what) + " became non-finite at step " + std::to_string(step) +
                                       "; lower the learning rate or check the inputs");
}

}  // namespace smartbrush
