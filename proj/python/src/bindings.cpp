#include "smartbrush/bundle.hpp"
#include "smartbrush/checkpoint.hpp"
#include "smartbrush/coherence.hpp"
#include "smartbrush/error.hpp"
#include "smartbrush/evaluation.hpp"
#include "smartbrush/generator.hpp"
#include "smartbrush/masks.hpp"
#include "smartbrush/metrics.hpp"
#include "smartbrush/split.hpp"
#include "smartbrush/stitching.hpp"
#include "smartbrush/synth.hpp"

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using namespace smartbrush;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Array to_numpy(const Tensor& t) {
    std::vector<py::ssize_t> shape(t.shape().begin(), t.shape().end());
    Array out(shape);
    std::copy(t.data().begin(), t.data().end(), out.mutable_data());
    return out;
}

Tensor from_numpy(const Array& a) {
    std::vector<int> shape;
    for (py::ssize_t i = 0; i < a.ndim(); ++i) shape.push_back(static_cast<int>(a.shape(i)));
    if (shape.size() == 2) shape.insert(shape.begin(), 1);
    return Tensor(shape, std::vector<double>(a.data(), a.data() + a.size()));
}

BrushMask mask_from_numpy(const Array& a) {
    BrushMask m{from_numpy(a)};
    if (m.pixels.rank() != 3 || m.pixels.channels() != 1 || m.pixels.height() != m.pixels.width())
        fail(ErrorKind::ShapeMismatch, "brush must be a square (side, side) array");
    for (double& v : m.pixels.data()) v = v > 0.5 ? 1.0 : 0.0;
    return m;
}

ChunkCoord coord(std::pair<int, int> xy) { return {xy.first, xy.second}; }

std::shared_ptr<Generator> make_generator(const std::string& spec) { return std::shared_ptr<Generator>(load_generator(spec)); }

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Map inpainting core: bundles, masks, metrics, generators and stitching";

    static py::exception<Error> error_type(m, "SmartBrushError", PyExc_RuntimeError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            switch (e.kind()) {
            case ErrorKind::NotFound: PyErr_SetString(PyExc_KeyError, e.what()); return;
            case ErrorKind::InvalidArgument:
            case ErrorKind::ShapeMismatch: PyErr_SetString(PyExc_ValueError, e.what()); return;
            default: py::set_error(error_type, e.what());
            }
        }
    });

    m.attr("TILES_PER_CHUNK") = kTilesPerChunk;

    py::enum_<MaskMode>(m, "MaskMode")
        .value("MEDIUM", MaskMode::Medium)
        .value("HARD", MaskMode::Hard)
        .value("COMPLETE", MaskMode::Complete);

    py::class_<GameMap, std::shared_ptr<GameMap>>(m, "GameMap")
        .def_readonly("id", &GameMap::id)
        .def_readonly("category", &GameMap::category)
        .def_readonly("grid_width", &GameMap::grid_width)
        .def_readonly("grid_height", &GameMap::grid_height)
        .def_readonly("tile_size", &GameMap::tile_size)
        .def_property_readonly("material_ids", [](const GameMap& g) { return g.materials.ids(); })
        .def_property_readonly("global_am", [](const GameMap& g) { return to_numpy(g.global_am); })
        .def("chunk_materials", [](const GameMap& g, std::pair<int, int> c) { return g.chunk(coord(c)).material_ids(); })
        .def("chunk_weights", [](const GameMap& g, std::pair<int, int> c) { return to_numpy(g.chunk(coord(c)).weights()); })
        .def("set_chunk_weights",
             [](GameMap& g, std::pair<int, int> c, const Array& w) { g.chunk(coord(c)).set_weights(from_numpy(w)); })
        .def("render_chunk", [](const GameMap& g, std::pair<int, int> c) { return to_numpy(blend_chunk(g.chunk(coord(c)), g.materials)); })
        .def("render_region", [](const GameMap& g, std::pair<int, int> from, std::pair<int, int> to) {
            return to_numpy(render_region(g, coord(from), coord(to)));
        })
        .def("validate", &GameMap::validate);

    m.def("load_bundle", [](const std::filesystem::path& p) { return std::make_shared<GameMap>(load_map_bundle(p)); }, py::arg("path"));
    m.def("save_bundle", [](const GameMap& g, const std::filesystem::path& p) { save_map_bundle(g, p); }, py::arg("map"), py::arg("path"));
    m.def(
        "synth_map",
        [](const std::string& id, const std::string& category, int grid_width, int grid_height, int tile_size, std::uint64_t seed) {
            synth::MapConfig cfg;
            cfg.id = id;
            cfg.category = category;
            cfg.grid_width = grid_width;
            cfg.grid_height = grid_height;
            cfg.tile_size = tile_size;
            cfg.seed = seed;
            return std::make_shared<GameMap>(synth::make_map(cfg));
        },
        py::arg("id") = "synthetic", py::arg("category") = "natural", py::arg("grid_width") = 2, py::arg("grid_height") = 2,
        py::arg("tile_size") = 32, py::arg("seed") = 1);

    m.def("random_mask", [](MaskMode mode, std::uint64_t seed, int side) { return to_numpy(generate_random_mask(mode, seed, side).pixels); },
          py::arg("mode"), py::arg("seed"), py::arg("side"));
    m.def("classify_mask", [](const Array& a) { return classify_mask_mode(mask_from_numpy(a)); }, py::arg("mask"));

    m.def("ssim", [](const Array& a, const Array& b) { return ssim(from_numpy(a), from_numpy(b)); }, py::arg("a"), py::arg("b"));
    m.def("frechet_distance", &frechet_distance, py::arg("a"), py::arg("b"));

    m.def(
        "rank_materials",
        [](const GameMap& g, std::pair<int, int> c) {
            const int s = g.tile_size;
            const MaterialRanking r = rank_materials(g.chunk(coord(c)), g.materials, g.global_am.crop(c.second * s, c.first * s, s, s));
            std::vector<std::pair<std::string, double>> out;
            for (const auto& e : r.order) out.emplace_back(e.id, e.score);
            return out;
        },
        py::arg("map"), py::arg("chunk"));

    py::class_<Generator, std::shared_ptr<Generator>>(m, "Generator")
        .def_property_readonly("kind", [](const Generator& g) { return std::string(to_string(g.kind())); })
        .def(
            "inpaint",
            [](const Generator& gen, const GameMap& g, std::pair<int, int> c, const Array& mask, std::uint64_t seed) {
                const ChunkCoord cc = coord(c);
                const MaskedChunkInput input = MaskedChunkInput::from_chunk(g.chunk(cc), mask_from_numpy(mask), build_context(g, cc));
                Tensor out;
                {
                    py::gil_scoped_release release;
                    out = gen.generate(input, seed);
                }
                return to_numpy(out);
            },
            py::arg("map"), py::arg("chunk"), py::arg("mask"), py::arg("seed") = 1);
    m.def("load_generator", &make_generator, py::arg("spec") = "baseline",
          "'baseline' or the path of a trained checkpoint.");

    py::class_<PairReport>(m, "PairReport")
        .def_property_readonly("a", [](const PairReport& p) { return std::pair{p.pair.a.x, p.pair.a.y}; })
        .def_property_readonly("b", [](const PairReport& p) { return std::pair{p.pair.b.x, p.pair.b.y}; })
        .def_property_readonly("direction", [](const PairReport& p) { return to_string(p.pair.direction); })
        .def_property_readonly("intersecting", [](const PairReport& p) { return p.pair.intersecting; })
        .def_readonly("stitched", &PairReport::stitched)
        .def_readonly("seam_before", &PairReport::seam_before)
        .def_readonly("seam_after", &PairReport::seam_after);

    m.def(
        "generate_region",
        [](const GameMap& g, const std::map<std::pair<int, int>, Array>& masks, const Generator& gen, std::uint64_t seed, bool stitch,
           bool smooth) {
            BrushedChunks brushed;
            for (const auto& [c, a] : masks) brushed[coord(c)] = mask_from_numpy(a);
            StitchConfig cfg;
            cfg.seed = seed;
            cfg.stitch = stitch;
            cfg.smooth = smooth;
            RegionResult r;
            {
                py::gil_scoped_release release;
                r = generate_region(g, brushed, gen, cfg);
            }
            return std::pair{std::make_shared<GameMap>(std::move(r.map)), r.pairs};
        },
        py::arg("map"), py::arg("masks"), py::arg("generator"), py::arg("seed") = 1, py::arg("stitch") = true, py::arg("smooth") = true);

    m.def(
        "evaluate",
        [](const std::vector<std::shared_ptr<GameMap>>& maps, const Generator& gen, const std::string& method, std::uint64_t seed) {
            std::vector<GameMap> copies;
            for (const auto& p : maps) copies.push_back(*p);
            EvalReport report;
            {
                py::gil_scoped_release release;
                report = evaluate_generator(copies, gen, method, {MaskMode::Medium, MaskMode::Hard, MaskMode::Complete}, seed);
            }
            return report.to_json().dump();
        },
        py::arg("maps"), py::arg("generator"), py::arg("method") = "baseline", py::arg("seed") = 1,
        "Report as a JSON string.");

    m.def(
        "propose_split",
        [](const std::vector<std::shared_ptr<GameMap>>& maps, int per_category) {
            std::vector<GameMap> copies;
            for (const auto& p : maps) copies.push_back(*p);
            const SplitResult r = propose_split(copies, per_category);
            return py::dict(py::arg("train") = r.train, py::arg("test") = r.test, py::arg("pairs") = r.pairs);
        },
        py::arg("maps"), py::arg("per_category"));
}
