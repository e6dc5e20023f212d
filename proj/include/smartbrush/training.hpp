#pragma once

#include "smartbrush/map_core.hpp"
#include "smartbrush/masks.hpp"

#include <cstdint>
#include <random>
#include <vector>

namespace smartbrush {

/// Ground-truth tile stack and its stacked context planes.
struct TrainingSample {
    Tensor tiles;    // (8, s, s)
    Tensor context;  // (kContextChannels, s, s)
};

/// Mask-mode curriculum over a training phase: Medium only until
/// `medium_until`, Medium/Hard until `hard_until`, then all three modes, with
/// relative frequencies 50/30/20.
struct Curriculum {
    double medium_until = 1.0 / 3.0;
    double hard_until = 2.0 / 3.0;
    double medium_ratio = 0.5;
    double hard_ratio = 0.3;
    double complete_ratio = 0.2;

    /// `progress` in [0, 1).
    MaskMode sample(double progress, std::mt19937_64& rng) const;
};

/// Samples from every chunk of a map: normalized weights plus context.
std::vector<TrainingSample> samples_from_map(const GameMap& map);

/// 10-style synthetic set of striped tile stacks with empty context.
std::vector<TrainingSample> striped_dataset(int count, int side, std::uint64_t seed);

/// Throws a Numerical error naming `what` when `value` is not finite.
void check_finite(double value, const char* what, int step);

}  // namespace smartbrush
