#include "smartbrush/error.hpp"
#include "smartbrush/evaluation.hpp"
#include "smartbrush/png_io.hpp"
#include "smartbrush/synth.hpp"
#include "support.hpp"

#include <doctest.h>

using namespace smartbrush;
using namespace smartbrush::testing;

namespace {

std::vector<GameMap> corpus(int maps, int side) {
    std::vector<GameMap> out;
    for (int i = 0; i < maps; ++i) {
        synth::MapConfig c;
        c.id = "map" + std::to_string(i);
        c.tile_size = side;
        c.seed = 50 + static_cast<std::uint64_t>(i);
        out.push_back(synth::make_map(c));
    }
    return out;
}

/// Generator that ignores the input and writes a fixed value everywhere the brush is set.
class FlatGenerator final : public Generator {
public:
    GeneratorKind kind() const override { return GeneratorKind::Baseline; }
    Tensor generate(const MaskedChunkInput& input, std::uint64_t) const override {
        return composite(input, Tensor::image(kTilesPerChunk, input.side(), input.side(), 0.125));
    }
};

}  // namespace

TEST_CASE("parse_metrics") {
    CHECK(parse_metrics("fid,ssim").fid);
    CHECK(parse_metrics("fid,ssim").ssim);
    CHECK_FALSE(parse_metrics("ssim").fid);
    CHECK_FALSE(parse_metrics("fid").ssim);
    CHECK_THROWS_AS(parse_metrics("lpips"), Error);
    CHECK_THROWS_AS(parse_metrics(""), Error);
}

TEST_CASE("evaluate_renders") {
    std::mt19937_64 rng(2);
    std::vector<Tensor> imgs;
    for (int i = 0; i < 4; ++i) imgs.push_back(random_tensor({3, 16, 16}, rng));
    const ModeResult same = evaluate_renders(MaskMode::Hard, imgs, imgs);
    CHECK(same.samples == 4);
    CHECK(*same.ssim == 1.0);
    CHECK(std::abs(*same.fid) < 1e-6);

    std::vector<Tensor> shifted = imgs;
    for (auto& t : shifted)
        for (double& v : t.data()) v = std::min(1.0, v + 0.3);
    const ModeResult diff = evaluate_renders(MaskMode::Hard, shifted, imgs);
    CHECK(*diff.fid > 1e-3);
    CHECK(*diff.ssim < 1.0);

    const ModeResult only_ssim = evaluate_renders(MaskMode::Medium, imgs, imgs, parse_metrics("ssim"));
    CHECK_FALSE(only_ssim.fid.has_value());

    CHECK_THROWS_AS(evaluate_renders(MaskMode::Medium, imgs, {imgs[0]}), Error);
    CHECK_THROWS_AS(evaluate_renders(MaskMode::Medium, {}, {}), Error);
    CHECK_THROWS_AS(evaluate_renders(MaskMode::Medium, {imgs[0]}, {random_tensor({3, 12, 12}, rng)}), Error);
}

TEST_CASE("location_features") {
    std::mt19937_64 rng(4);
    const FeatureExtractor fx = default_eval_extractor();
    const FeatureSet f = location_features({random_tensor({3, 16, 16}, rng), random_tensor({3, 16, 16}, rng)}, fx);
    // Three stride-2 layers: 16 -> 2, so 4 locations per image, 32 channels each.
    CHECK(f.size() == 8);
    CHECK(f[0].size() == 32);
}

TEST_CASE("report json mirrors the mode x metric table") {
    const auto maps = corpus(2, 16);
    const EvalReport r = evaluate_generator(maps, BaselineGenerator{}, "baseline",
                                            {MaskMode::Medium, MaskMode::Hard, MaskMode::Complete}, 1);
    const auto j = r.to_json();
    CHECK(j["columns"] == nlohmann::json({"medium", "hard", "complete"}));
    REQUIRE(j["rows"].size() == 1);
    const auto& row = j["rows"][0];
    CHECK(row["method"] == "baseline");
    for (const char* m : {"medium", "hard", "complete"}) {
        CHECK(row[m]["samples"] == 8);
        CHECK(row[m]["fid"].is_number());
        CHECK(row[m]["ssim"].is_number());
    }
    SUBCASE("deterministic") {
        const EvalReport again = evaluate_generator(maps, BaselineGenerator{}, "baseline",
                                                    {MaskMode::Medium, MaskMode::Hard, MaskMode::Complete}, 1);
        CHECK(again.to_json() == j);
    }
}

TEST_CASE("predict_corpus renders only brushed changes") {
    const auto maps = corpus(1, 16);
    const auto pairs = predict_corpus(maps, FlatGenerator{}, MaskMode::Medium, 3);
    REQUIRE(pairs.size() == 4);
    for (const auto& p : pairs) {
        CHECK(p.name.rfind("map0_", 0) == 0);
        CHECK(p.prediction.shape() == p.reference.shape());
        CHECK(p.prediction.data() != p.reference.data());
    }
    const auto none = predict_corpus(maps, BaselineGenerator{}, MaskMode::Medium, 3);
    for (std::size_t i = 0; i < none.size(); ++i) CHECK(none[i].name == pairs[i].name);
}

TEST_CASE("directory evaluation matches in-memory evaluation up to 8-bit quantization") {
    const auto maps = corpus(2, 16);
    const auto pairs = predict_corpus(maps, BaselineGenerator{}, MaskMode::Hard, 5);
    TempDir tmp("eval");
    write_renders(tmp.path() / "pred", tmp.path() / "gt", pairs);
    const ModeResult from_disk = evaluate_dirs(MaskMode::Hard, tmp.path() / "pred", tmp.path() / "gt");
    std::vector<Tensor> p, r;
    for (const auto& pr : pairs) {
        p.push_back(png::decode(png::encode(pr.prediction, png::Format::Rgb8)).pixels);
        r.push_back(png::decode(png::encode(pr.reference, png::Format::Rgb8)).pixels);
    }
    const ModeResult direct = evaluate_renders(MaskMode::Hard, p, r);
    CHECK(*from_disk.fid == doctest::Approx(*direct.fid).epsilon(1e-12));
    CHECK(*from_disk.ssim == doctest::Approx(*direct.ssim).epsilon(1e-12));

    std::filesystem::remove(tmp.path() / "gt" / (pairs[0].name + ".png"));
    CHECK_THROWS_AS(evaluate_dirs(MaskMode::Hard, tmp.path() / "pred", tmp.path() / "gt"), Error);
    CHECK_THROWS_AS(evaluate_dirs(MaskMode::Hard, tmp.path() / "nope", tmp.path() / "gt"), Error);
}
