#include "smartbrush/evaluation.hpp"

#include "smartbrush/error.hpp"
#include "smartbrush/png_io.hpp"

#include <algorithm>
#include <sstream>

namespace smartbrush {

MetricSelection parse_metrics(const std::string& text) {
    MetricSelection out{false, false};
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item == "fid") out.fid = true;
        else if (item == "ssim") out.ssim = true;
        else fail(ErrorKind::InvalidArgument, "unknown metric '" + item + "' (expected fid, ssim)");
    }
    if (!out.fid && !out.ssim) fail(ErrorKind::InvalidArgument, "no metrics selected");
    return out;
}

FeatureExtractor default_eval_extractor() { return FeatureExtractor::random(3, kEvalFeatureSeed); }

FeatureSet location_features(const std::vector<Tensor>& images, const FeatureExtractor& extractor) {
    FeatureSet out;
    for (const Tensor& img : images) {
        const Tensor f = extractor.features(img).back();
        for (int y = 0; y < f.height(); ++y)
            for (int x = 0; x < f.width(); ++x) {
                std::vector<double> v(static_cast<std::size_t>(f.channels()));
                for (int c = 0; c < f.channels(); ++c) v[c] = f.at(c, y, x);
                out.push_back(std::move(v));
            }
    }
    return out;
}

ModeResult evaluate_renders(MaskMode mode, const std::vector<Tensor>& predictions, const std::vector<Tensor>& references,
                            const MetricSelection& metrics, const FeatureExtractor& extractor) {
    if (predictions.size() != references.size())
        fail(ErrorKind::InvalidArgument, "prediction and reference counts differ");
    if (predictions.empty()) fail(ErrorKind::InvalidArgument, "nothing to evaluate");
    for (std::size_t i = 0; i < predictions.size(); ++i)
        if (predictions[i].shape() != references[i].shape())
            fail(ErrorKind::ShapeMismatch, "prediction " + std::to_string(i) + " is " + predictions[i].shape_string() +
                                               ", reference is " + references[i].shape_string());
    ModeResult out;
    out.mode = mode;
    out.samples = predictions.size();
    if (metrics.ssim) {
        double total = 0;
        for (std::size_t i = 0; i < predictions.size(); ++i) total += ssim(predictions[i], references[i]);
        out.ssim = total / static_cast<double>(predictions.size());
    }
    if (metrics.fid) out.fid = frechet_distance(location_features(predictions, extractor), location_features(references, extractor));
    return out;
}

nlohmann::json EvalReport::to_json() const {
    nlohmann::json row = {{"method", method}};
    nlohmann::json columns = nlohmann::json::array();
    for (const ModeResult& m : modes) {
        const std::string key(to_string(m.mode));
        columns.push_back(key);
        nlohmann::json cell = {{"samples", m.samples}};
        cell["fid"] = m.fid ? nlohmann::json(*m.fid) : nlohmann::json(nullptr);
        cell["ssim"] = m.ssim ? nlohmann::json(*m.ssim) : nlohmann::json(nullptr);
        row[key] = cell;
    }
    return {{"columns", columns}, {"metrics", {"fid", "ssim"}}, {"rows", nlohmann::json::array({row})}};
}

namespace {

std::uint64_t mix(std::uint64_t h, std::uint64_t v) {
    h ^= v + 0x9E3779B97F4A7C15ULL + (h << 6) + (h >> 2);
    h ^= h >> 31;
    h *= 0xBF58476D1CE4E5B9ULL;
    return h ^ (h >> 29);
}

}  // namespace

std::vector<RenderPair> predict_corpus(const std::vector<GameMap>& maps, const Generator& generator, MaskMode mode,
                                       std::uint64_t seed) {
    std::vector<RenderPair> out;
    for (std::size_t m = 0; m < maps.size(); ++m) {
        const GameMap& map = maps[m];
        for (const auto& [coord, chunk] : map.chunks) {
            const std::uint64_t s = mix(mix(mix(mix(seed, m), static_cast<std::uint32_t>(coord.x)), static_cast<std::uint32_t>(coord.y)),
                                        static_cast<std::uint64_t>(mode));
            const BrushMask brush = generate_random_mask(mode, s, map.tile_size);
            Chunk generated = chunk;
            generated.set_weights(generator.generate(MaskedChunkInput::from_chunk(chunk, brush, build_context(map, coord)), s));
            out.push_back({map.id + "_" + coord.str(), blend_chunk(generated, map.materials), blend_chunk(chunk, map.materials)});
        }
    }
    return out;
}

EvalReport evaluate_generator(const std::vector<GameMap>& maps, const Generator& generator, const std::string& method,
                              const std::vector<MaskMode>& modes, std::uint64_t seed, const MetricSelection& metrics) {
    EvalReport report{method, {}};
    const FeatureExtractor fx = default_eval_extractor();
    for (MaskMode mode : modes) {
        const auto pairs = predict_corpus(maps, generator, mode, seed);
        std::vector<Tensor> pred, ref;
        for (const auto& p : pairs) {
            pred.push_back(p.prediction);
            ref.push_back(p.reference);
        }
        report.modes.push_back(evaluate_renders(mode, pred, ref, metrics, fx));
    }
    return report;
}

void write_renders(const std::filesystem::path& pred_dir, const std::filesystem::path& gt_dir,
                   const std::vector<RenderPair>& pairs) {
    std::filesystem::create_directories(pred_dir);
    std::filesystem::create_directories(gt_dir);
    for (const auto& p : pairs) {
        png::write(pred_dir / (p.name + ".png"), p.prediction, png::Format::Rgb8);
        png::write(gt_dir / (p.name + ".png"), p.reference, png::Format::Rgb8);
    }
}

std::vector<std::pair<std::string, Tensor>> read_render_dir(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) fail(ErrorKind::Io, "not a directory: " + dir.string());
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".png") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    std::vector<std::pair<std::string, Tensor>> out;
    for (const auto& f : files) {
        Tensor px = png::read(f).pixels;
        if (px.channels() != 3) fail(ErrorKind::Format, f.string() + ": expected an RGB render");
        out.emplace_back(f.stem().string(), std::move(px));
    }
    return out;
}

ModeResult evaluate_dirs(MaskMode mode, const std::filesystem::path& pred_dir, const std::filesystem::path& gt_dir,
                         const MetricSelection& metrics) {
    const auto pred = read_render_dir(pred_dir);
    const auto gt = read_render_dir(gt_dir);
    std::map<std::string, const Tensor*> by_name;
    for (const auto& [name, img] : gt) by_name[name] = &img;
    std::vector<Tensor> p, r;
    for (const auto& [name, img] : pred) {
        const auto it = by_name.find(name);
        if (it == by_name.end()) fail(ErrorKind::NotFound, "no reference render for " + name);
        p.push_back(img);
        r.push_back(*it->second);
    }
    if (p.size() != gt.size()) fail(ErrorKind::NotFound, "reference renders without predictions in " + gt_dir.string());
    return evaluate_renders(mode, p, r, metrics);
}

}  // namespace smartbrush
