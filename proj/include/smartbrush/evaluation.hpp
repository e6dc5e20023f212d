#pragma once

#include "smartbrush/generator.hpp"
#include "smartbrush/losses.hpp"
#include "smartbrush/masks.hpp"
#include "smartbrush/metrics.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace smartbrush {

struct MetricSelection {
    bool fid = true;
    bool ssim = true;
};

/// "fid,ssim", "fid" or "ssim".
MetricSelection parse_metrics(const std::string& text);

inline constexpr std::uint64_t kEvalFeatureSeed = 29;

/// Default FID features: one vector per spatial location of the last layer
/// of a seed-pinned random 3-channel extractor, pooled over all images.
FeatureExtractor default_eval_extractor();
FeatureSet location_features(const std::vector<Tensor>& images, const FeatureExtractor& extractor);

struct ModeResult {
    MaskMode mode = MaskMode::Medium;
    std::size_t samples = 0;
    std::optional<double> fid;
    std::optional<double> ssim;  // mean over image pairs
};

/// Scores predicted renders against references (same order, same shapes).
ModeResult evaluate_renders(MaskMode mode, const std::vector<Tensor>& predictions, const std::vector<Tensor>& references,
                            const MetricSelection& metrics = {}, const FeatureExtractor& extractor = default_eval_extractor());

/// One method row of the mode x metric table.
struct EvalReport {
    std::string method;
    std::vector<ModeResult> modes;

    nlohmann::json to_json() const;
};

/// A rendered prediction for one chunk alongside the untouched reference.
struct RenderPair {
    std::string name;  // "<map id>_<x>_<y>"
    Tensor prediction;
    Tensor reference;
};

/// Brushes every chunk of every map with a random mask of `mode` (seeded per
/// map, chunk, and mode), runs the generator, and renders both versions.
std::vector<RenderPair> predict_corpus(const std::vector<GameMap>& maps, const Generator& generator, MaskMode mode,
                                       std::uint64_t seed);

EvalReport evaluate_generator(const std::vector<GameMap>& maps, const Generator& generator, const std::string& method,
                              const std::vector<MaskMode>& modes, std::uint64_t seed, const MetricSelection& metrics = {});

/// Writes <dir>/<name>.png for each pair's prediction (or reference).
void write_renders(const std::filesystem::path& pred_dir, const std::filesystem::path& gt_dir,
                   const std::vector<RenderPair>& pairs);

/// PNG renders in `dir`, sorted by file name, with their stems.
std::vector<std::pair<std::string, Tensor>> read_render_dir(const std::filesystem::path& dir);

/// Pairs predictions with references by file stem; every stem must exist in both.
ModeResult evaluate_dirs(MaskMode mode, const std::filesystem::path& pred_dir, const std::filesystem::path& gt_dir,
                         const MetricSelection& metrics = {});

}  // namespace smartbrush
