#include "smartbrush/brushcldm.hpp"
#include "smartbrush/brushgan.hpp"
#include "smartbrush/bundle.hpp"
#include "smartbrush/checkpoint.hpp"
#include "smartbrush/coherence.hpp"
#include "smartbrush/error.hpp"
#include "smartbrush/evaluation.hpp"
#include "smartbrush/http_server.hpp"
#include "smartbrush/png_io.hpp"
#include "smartbrush/service.hpp"
#include "smartbrush/split.hpp"
#include "smartbrush/stitching.hpp"
#include "smartbrush/synth.hpp"
#include "smartbrush/training.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <regex>

namespace fs = std::filesystem;
using namespace smartbrush;
using nlohmann::json;

namespace {

ChunkCoord parse_coord(const std::string& text) {
    static const std::regex re(R"(\s*(-?\d+)\s*,\s*(-?\d+)\s*)");
    std::smatch m;
    if (!std::regex_match(text, m, re)) fail(ErrorKind::InvalidArgument, "expected x,y but got '" + text + "'");
    return {std::stoi(m[1]), std::stoi(m[2])};
}

std::pair<ChunkCoord, ChunkCoord> parse_region(const std::string& text) {
    const auto colon = text.find(':');
    if (colon == std::string::npos) fail(ErrorKind::InvalidArgument, "expected x0,y0:x1,y1 but got '" + text + "'");
    return {parse_coord(text.substr(0, colon)), parse_coord(text.substr(colon + 1))};
}

/// A bundle directory, or a directory whose subdirectories are bundles.
std::vector<GameMap> load_bundles(const fs::path& dir) {
    if (fs::exists(dir / "manifest.json")) return {load_map_bundle(dir)};
    std::vector<fs::path> found;
    if (fs::is_directory(dir))
        for (const auto& e : fs::directory_iterator(dir))
            if (e.is_directory() && fs::exists(e.path() / "manifest.json")) found.push_back(e.path());
    if (found.empty()) fail(ErrorKind::NotFound, "no map bundles under " + dir.string());
    std::sort(found.begin(), found.end());
    std::vector<GameMap> out;
    for (const auto& p : found) out.push_back(load_map_bundle(p));
    return out;
}

void write_json(const fs::path& path, const json& j) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
    out << j.dump(2) << "\n";
}

BrushMask read_mask(const fs::path& path, int side) {
    const png::Decoded img = png::read(path);
    if (img.pixels.channels() != 1) fail(ErrorKind::Format, path.string() + ": mask must be grayscale");
    if (img.pixels.height() != side || img.pixels.width() != side)
        fail(ErrorKind::ShapeMismatch, path.string() + ": mask must be " + std::to_string(side) + "x" + std::to_string(side));
    BrushMask m = BrushMask::zeros(side);
    for (std::size_t i = 0; i < m.pixels.size(); ++i) m.pixels[i] = img.pixels[i] > 0.5 ? 1.0 : 0.0;
    return m;
}

std::vector<MaskMode> parse_modes(const std::string& text) {
    if (text == "all") return {MaskMode::Medium, MaskMode::Hard, MaskMode::Complete};
    const auto mode = parse_mask_mode(text);
    if (!mode) fail(ErrorKind::InvalidArgument, "unknown mask mode '" + text + "'");
    return {*mode};
}

json pair_json(const PairReport& p) {
    return {{"a", {p.pair.a.x, p.pair.a.y}},     {"b", {p.pair.b.x, p.pair.b.y}},
            {"direction", to_string(p.pair.direction)}, {"intersecting", p.pair.intersecting},
            {"stitched", p.stitched},             {"seam_before", p.seam_before},
            {"seam_after", p.seam_after},         {"smoothed_a", p.smoothed_a},
            {"smoothed_b", p.smoothed_b}};
}

int exit_code(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::InvalidArgument:
    case ErrorKind::ShapeMismatch: return 2;
    case ErrorKind::NotFound:
    case ErrorKind::Io: return 3;
    case ErrorKind::Format: return 4;
    case ErrorKind::Numerical: return 5;
    case ErrorKind::Conflict: return 6;
    }
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Smart brush map generation tools"};
    app.require_subcommand(1);

    // synth
    auto* synth_cmd = app.add_subcommand("synth", "Write synthetic map bundles");
    std::string synth_out;
    int synth_maps = 4, synth_w = 2, synth_h = 2, synth_tile = 32;
    std::uint64_t synth_seed = 1;
    std::vector<std::string> synth_categories{"natural"};
    synth_cmd->add_option("--out-dir", synth_out, "Directory receiving one bundle per map")->required();
    synth_cmd->add_option("--maps", synth_maps, "Maps per category");
    synth_cmd->add_option("--grid-width", synth_w);
    synth_cmd->add_option("--grid-height", synth_h);
    synth_cmd->add_option("--tile-size", synth_tile);
    synth_cmd->add_option("--seed", synth_seed);
    synth_cmd->add_option("--categories", synth_categories)->delimiter(',');

    // split-dataset
    auto* split_cmd = app.add_subcommand("split-dataset", "Propose a train/test split of map bundles");
    std::string split_dir, split_out;
    int per_category = 3;
    split_cmd->add_option("--bundle-dir", split_dir, "Directory of map bundles")->required();
    split_cmd->add_option("--per-category", per_category);
    split_cmd->add_option("--out", split_out)->required();

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "Score predicted renders per mask mode");
    std::string pred_dir, gt_dir, metrics_text = "fid,ssim", mode_text = "all", eval_out, eval_bundles, eval_generator = "baseline",
                                  method;
    std::uint64_t eval_seed = 1;
    eval_cmd->add_option("--pred-dir", pred_dir)->required();
    eval_cmd->add_option("--gt-dir", gt_dir)->required();
    eval_cmd->add_option("--metrics", metrics_text);
    eval_cmd->add_option("--mask-mode", mode_text, "medium, hard, complete or all");
    eval_cmd->add_option("--out", eval_out)->required();
    eval_cmd->add_option("--bundle-dir", eval_bundles, "Produce the renders first from these bundles");
    eval_cmd->add_option("--generator", eval_generator, "baseline or a checkpoint path (with --bundle-dir)");
    eval_cmd->add_option("--seed", eval_seed);
    eval_cmd->add_option("--method", method, "Row label in the report");

    // train
    auto* train_cmd = app.add_subcommand("train", "Train a toy generator");
    std::string arch, train_dir, train_out, train_split;
    int epochs = 10, width = 16;
    std::uint64_t train_seed = 1;
    train_cmd->add_option("--arch", arch)->required()->check(CLI::IsMember({"brushgan", "brushcldm"}));
    train_cmd->add_option("--bundle-dir", train_dir)->required();
    train_cmd->add_option("--epochs", epochs, "Passes over the chunk samples");
    train_cmd->add_option("--seed", train_seed);
    train_cmd->add_option("--width", width, "Channel width");
    train_cmd->add_option("--split", train_split, "split.json; train only on its train maps");
    train_cmd->add_option("--out", train_out)->required();

    // generate
    auto* gen_cmd = app.add_subcommand("generate", "Inpaint one chunk");
    std::string gen_model = "baseline", gen_dir, gen_chunk, gen_mask, gen_out;
    std::uint64_t gen_seed = 1;
    gen_cmd->add_option("--model", gen_model, "Checkpoint path or 'baseline'");
    gen_cmd->add_option("--bundle-dir", gen_dir)->required();
    gen_cmd->add_option("--chunk", gen_chunk)->required();
    gen_cmd->add_option("--mask", gen_mask)->required();
    gen_cmd->add_option("--out-dir", gen_out)->required();
    gen_cmd->add_option("--seed", gen_seed);

    // rank-materials
    auto* rank_cmd = app.add_subcommand("rank-materials", "Rank a chunk's materials against the global AM");
    std::string rank_dir, rank_chunk, rank_out;
    rank_cmd->add_option("--bundle-dir", rank_dir)->required();
    rank_cmd->add_option("--chunk", rank_chunk)->required();
    rank_cmd->add_option("--out", rank_out)->required();

    // stitch
    auto* stitch_cmd = app.add_subcommand("stitch", "Generate a brushed region with stitching");
    std::string st_dir, st_region, st_masks, st_model = "baseline", st_report, st_out_bundle;
    std::uint64_t st_seed = 1;
    bool no_stitch = false, no_smooth = false;
    stitch_cmd->add_option("--bundle-dir", st_dir)->required();
    stitch_cmd->add_option("--region", st_region, "x0,y0:x1,y1")->required();
    stitch_cmd->add_option("--mask-dir", st_masks, "Holds <x>_<y>.png per brushed chunk")->required();
    stitch_cmd->add_option("--model", st_model);
    stitch_cmd->add_option("--report", st_report)->required();
    stitch_cmd->add_option("--out-bundle", st_out_bundle, "Write the edited map here");
    stitch_cmd->add_option("--seed", st_seed);
    stitch_cmd->add_flag("--no-stitch", no_stitch, "Skip transition stitching");
    stitch_cmd->add_flag("--no-smooth", no_smooth, "Skip border material smoothing");

    // serve
    auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP service");
    int port = 8080;
    std::string host = "127.0.0.1", bundle_root = ".";
    std::vector<std::string> models;
    std::size_t undo_depth = 10;
    serve_cmd->add_option("--port", port);
    serve_cmd->add_option("--host", host);
    serve_cmd->add_option("--bundle-root", bundle_root);
    serve_cmd->add_option("--model", models, "NAME=PATH, repeatable");
    serve_cmd->add_option("--undo-depth", undo_depth);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*synth_cmd) {
            int index = 0;
            for (const auto& category : synth_categories)
                for (int i = 0; i < synth_maps; ++i, ++index) {
                    synth::MapConfig cfg;
                    cfg.id = category + "_" + std::to_string(i);
                    cfg.category = category;
                    cfg.grid_width = synth_w;
                    cfg.grid_height = synth_h;
                    cfg.tile_size = synth_tile;
                    cfg.seed = synth_seed * 1000 + static_cast<std::uint64_t>(index);
                    save_map_bundle(synth::make_map(cfg), fs::path(synth_out) / cfg.id);
                    std::cout << (fs::path(synth_out) / cfg.id).string() << "\n";
                }
        } else if (*split_cmd) {
            const auto maps = load_bundles(split_dir);
            const SplitResult r = propose_split(maps, per_category);
            json scores = json::array();
            for (const auto& row : r.scores) {
                json jr = json::array();
                for (const auto& s : row)
                    jr.push_back({{"fid_global_am", s.fid_global_am}, {"fid_tiles", s.fid_tiles}, {"p_material", s.p_material}, {"s", s.s}});
                scores.push_back(jr);
            }
            json pairs = json::array();
            for (const auto& [a, b] : r.pairs) pairs.push_back({{"train", a}, {"test", b}});
            write_json(split_out, {{"per_category", per_category}, {"ids", r.ids}, {"categories", r.categories},
                                   {"train", r.train}, {"test", r.test}, {"pairs", pairs}, {"scores", scores}});
            std::cout << "train " << r.train.size() << ", test " << r.test.size() << "\n";
        } else if (*eval_cmd) {
            const MetricSelection metrics = parse_metrics(metrics_text);
            const auto modes = parse_modes(mode_text);
            if (!eval_bundles.empty()) {
                const auto maps = load_bundles(eval_bundles);
                const auto gen = load_generator(eval_generator);
                for (MaskMode mode : modes) {
                    const std::string sub(to_string(mode));
                    write_renders(fs::path(pred_dir) / sub, fs::path(gt_dir) / sub, predict_corpus(maps, *gen, mode, eval_seed));
                }
                if (method.empty()) method = eval_generator == "baseline" ? "baseline" : fs::path(eval_generator).stem().string();
            }
            EvalReport report{method.empty() ? "predictions" : method, {}};
            for (MaskMode mode : modes) {
                const std::string sub(to_string(mode));
                fs::path p = fs::path(pred_dir) / sub, g = fs::path(gt_dir) / sub;
                if (!fs::is_directory(p)) {
                    if (modes.size() > 1) fail(ErrorKind::NotFound, "missing " + p.string());
                    p = pred_dir;
                    g = gt_dir;
                }
                report.modes.push_back(evaluate_dirs(mode, p, g, metrics));
            }
            write_json(eval_out, report.to_json());
            std::printf("%-12s %-10s %12s %10s\n", "method", "mode", "fid", "ssim");
            for (const auto& m : report.modes)
                std::printf("%-12s %-10s %12.6f %10.4f\n", report.method.c_str(), std::string(to_string(m.mode)).c_str(),
                            m.fid.value_or(NAN), m.ssim.value_or(NAN));
        } else if (*train_cmd) {
            auto maps = load_bundles(train_dir);
            if (!train_split.empty()) {
                std::ifstream in(train_split);
                if (!in) fail(ErrorKind::Io, "cannot read " + train_split);
                const auto keep = json::parse(in).at("train").get<std::vector<std::string>>();
                std::erase_if(maps, [&](const GameMap& m) { return std::find(keep.begin(), keep.end(), m.id) == keep.end(); });
            }
            std::vector<TrainingSample> data;
            for (const auto& m : maps) {
                if (m.tile_size != maps.front().tile_size) fail(ErrorKind::InvalidArgument, "bundles differ in tile size");
                auto s = samples_from_map(m);
                data.insert(data.end(), s.begin(), s.end());
            }
            if (data.empty()) fail(ErrorKind::InvalidArgument, "no training samples");
            if (epochs < 1) fail(ErrorKind::InvalidArgument, "--epochs must be positive");
            const int total = epochs * static_cast<int>(data.size());
            Checkpoint ckpt;
            if (arch == "brushgan") {
                GanConfig cfg;
                cfg.tile_size = maps.front().tile_size;
                cfg.width = width;
                BrushGan model(cfg, train_seed);
                GanSchedule sched;
                sched.coarse_steps = std::max(1, total / 2);
                sched.fine_steps = std::max(1, total - total / 2);
                sched.seed = train_seed;
                const GanHistory h = train_brushgan(model, data, sched);
                std::cout << "coarse mse " << h.coarse_loss.front() << " -> " << h.coarse_loss.back() << ", fine loss "
                          << h.fine_loss.front() << " -> " << h.fine_loss.back() << "\n";
                ckpt = make_checkpoint(model);
            } else {
                CldmConfig cfg;
                cfg.tile_size = maps.front().tile_size;
                cfg.width = width;
                BrushCldm model(cfg, train_seed);
                CldmSchedule sched;
                sched.autoencoder_steps = std::max(1, total * 5 / 16);
                sched.denoiser_steps = std::max(1, total * 10 / 16);
                sched.finetune_steps = std::max(1, total - sched.autoencoder_steps - sched.denoiser_steps);
                sched.seed = train_seed;
                const CldmHistory h = train_brushcldm(model, data, sched);
                std::cout << "autoencoder " << h.autoencoder_loss.front() << " -> " << h.autoencoder_loss.back() << ", denoiser "
                          << h.denoiser_loss.front() << " -> " << h.denoiser_loss.back() << "\n";
                ckpt = make_checkpoint(model);
            }
            save_checkpoint(train_out, ckpt);
            std::cout << "wrote " << train_out << "\n";
        } else if (*gen_cmd) {
            const GameMap map = load_map_bundle(gen_dir);
            const ChunkCoord coord = parse_coord(gen_chunk);
            if (!map.in_bounds(coord) || !map.chunks.count(coord)) fail(ErrorKind::InvalidArgument, "chunk " + coord.str() + " not in map");
            const BrushMask mask = read_mask(gen_mask, map.tile_size);
            const auto gen = load_generator(gen_model);
            const Chunk& before = map.chunk(coord);
            Chunk after = before;
            after.set_weights(gen->generate(MaskedChunkInput::from_chunk(before, mask, build_context(map, coord)), gen_seed));
            const fs::path out(gen_out);
            fs::create_directories(out);
            for (int k = 0; k < kTilesPerChunk; ++k)
                png::write(out / ("tile_" + std::to_string(k) + ".png"), after.tiles[k].pixels, png::Format::Gray8);
            png::write(out / "before.png", blend_chunk(before, map.materials), png::Format::Rgb8);
            png::write(out / "after.png", blend_chunk(after, map.materials), png::Format::Rgb8);
            write_json(out / "summary.json", {{"chunk", {coord.x, coord.y}},
                                              {"generator", to_string(gen->kind())},
                                              {"coverage", mask.coverage()},
                                              {"mask_mode", std::string(to_string(classify_mask_mode(mask)))},
                                              {"materials", after.material_ids()}});
            std::cout << "wrote " << out.string() << "\n";
        } else if (*rank_cmd) {
            const GameMap map = load_map_bundle(rank_dir);
            const ChunkCoord c = parse_coord(rank_chunk);
            if (!map.in_bounds(c) || !map.chunks.count(c)) fail(ErrorKind::InvalidArgument, "chunk " + c.str() + " not in map");
            const int s = map.tile_size;
            const MaterialRanking r = rank_materials(map.chunk(c), map.materials, map.global_am.crop(c.y * s, c.x * s, s, s));
            json order = json::array();
            for (const auto& m : r.order) order.push_back({{"id", m.id}, {"score", m.score}});
            write_json(rank_out, {{"chunk", {c.x, c.y}}, {"ranking", order}});
            for (const auto& m : r.order) std::printf("%-16s %.4f\n", m.id.c_str(), m.score);
        } else if (*stitch_cmd) {
            const GameMap map = load_map_bundle(st_dir);
            const auto [from, to] = parse_region(st_region);
            BrushedChunks brushed;
            for (int y = from.y; y <= to.y; ++y)
                for (int x = from.x; x <= to.x; ++x) {
                    const fs::path p = fs::path(st_masks) / (ChunkCoord{x, y}.str() + ".png");
                    if (fs::exists(p)) brushed[{x, y}] = read_mask(p, map.tile_size);
                }
            if (brushed.empty()) fail(ErrorKind::NotFound, "no masks for the region in " + st_masks);
            const auto gen = load_generator(st_model);
            StitchConfig cfg;
            cfg.seed = st_seed;
            cfg.stitch = !no_stitch;
            cfg.smooth = !no_smooth;
            const RegionResult r = generate_region(map, brushed, *gen, cfg);
            json pairs = json::array();
            for (const auto& p : r.pairs) pairs.push_back(pair_json(p));
            write_json(st_report, {{"pairs", pairs}, {"generate_seconds", r.generate_seconds}, {"stitch_seconds", r.stitch_seconds}});
            if (!st_out_bundle.empty()) save_map_bundle(r.map, st_out_bundle);
            for (const auto& p : r.pairs)
                std::printf("%s-%s %s seam %.4f -> %.4f\n", p.pair.a.str().c_str(), p.pair.b.str().c_str(),
                            to_string(p.pair.direction).c_str(), p.seam_before, p.seam_after);
        } else if (*serve_cmd) {
            ServiceConfig cfg;
            cfg.bundle_root = bundle_root;
            cfg.undo_depth = undo_depth;
            for (const auto& m : models) {
                const auto eq = m.find('=');
                if (eq == std::string::npos || eq == 0) fail(ErrorKind::InvalidArgument, "--model expects NAME=PATH");
                cfg.models[m.substr(0, eq)] = m.substr(eq + 1);
            }
            BrushService service(cfg);
            HttpServer server(service);
            const int bound = server.bind(host, port);
            std::cout << "listening on http://" << host << ":" << bound << "/v1" << std::endl;
            server.serve();
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
