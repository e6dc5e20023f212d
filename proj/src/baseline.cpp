#include "smartbrush/error.hpp"
#include "smartbrush/generator.hpp"
#include "smartbrush/masks.hpp"

#include <algorithm>
#include <limits>

namespace smartbrush {

void MaskedChunkInput::validate() const {
    if (tiles.rank() != 3 || tiles.channels() != kTilesPerChunk || tiles.height() != tiles.width())
        fail(ErrorKind::ShapeMismatch, "generator input tiles must be (8, s, s), got " + tiles.shape_string());
    const int s = side();
    if (brush.pixels.shape() != std::vector<int>{1, s, s})
        fail(ErrorKind::ShapeMismatch, "brush " + brush.pixels.shape_string() + " does not match tiles " + tiles.shape_string());
    if (context.side() != s) fail(ErrorKind::ShapeMismatch, "context side does not match tiles");
    context.validate();
    for (int c = 0; c < kTilesPerChunk; ++c)
        for (int i = 0; i < s * s; ++i)
            if (brush.pixels[static_cast<std::size_t>(i)] != 0.0 && tiles.channel(c)[static_cast<std::size_t>(i)] != 0.0)
                fail(ErrorKind::InvalidArgument, "generator input has non-zero weights under the brush");
}

MaskedChunkInput MaskedChunkInput::from_chunk(const Chunk& chunk, const BrushMask& brush, ContextStack context) {
    return {apply_brush(chunk, brush).weights(), brush, std::move(context)};
}

MaskedChunkInput MaskedChunkInput::from_tiles(const Tensor& tiles, const BrushMask& brush, ContextStack context) {
    MaskedChunkInput in{tiles, brush, std::move(context)};
    for (int c = 0; c < tiles.channels(); ++c) {
        auto ch = in.tiles.channel(c);
        for (std::size_t i = 0; i < ch.size(); ++i)
            if (brush.pixels[i] != 0.0) ch[i] = 0.0;
    }
    return in;
}

Tensor composite(const MaskedChunkInput& input, const Tensor& generated) {
    if (!generated.same_shape(input.tiles))
        fail(ErrorKind::ShapeMismatch, "generated " + generated.shape_string() + " vs input " + input.tiles.shape_string());
    Tensor out = input.tiles;
    for (int c = 0; c < out.channels(); ++c) {
        auto dst = out.channel(c);
        const auto src = generated.channel(c);
        for (std::size_t i = 0; i < dst.size(); ++i)
            if (input.brush.pixels[i] != 0.0) dst[i] = src[i];
    }
    return out;
}

std::string to_string(GeneratorKind kind) {
    switch (kind) {
        case GeneratorKind::Baseline: return "baseline";
        case GeneratorKind::ToyBrushGAN: return "brushgan";
        case GeneratorKind::ToyBrushCLDM: return "brushcldm";
    }
    return "unknown";
}

namespace {

Tensor dominant_fill(const MaskedChunkInput& input) {
    const int dom = input.context.dominant_template();
    Tensor generated = Tensor::image(kTilesPerChunk, input.side(), input.side());
    std::fill(generated.channel(dom).begin(), generated.channel(dom).end(), 1.0);
    return composite(input, generated);
}

}  // namespace

Tensor baseline_inpaint(const MaskedChunkInput& input, const BaselineConfig& config) {
    input.validate();
    if (config.patch < 1 || config.patch % 2 == 0) fail(ErrorKind::InvalidArgument, "baseline patch size must be odd");
    const int s = input.side();
    const int r = config.patch / 2;
    const std::size_t npx = static_cast<std::size_t>(s) * s;
    const double* brush = input.brush.pixels.ptr();

    std::vector<char> known(npx);
    std::size_t masked = 0;
    for (std::size_t i = 0; i < npx; ++i) {
        known[i] = brush[i] == 0.0;
        masked += !known[i];
    }
    if (masked == 0) return input.tiles;
    if (masked == npx) return dominant_fill(input);

    // Pixel-major copy so the 8 channels of one pixel are contiguous.
    constexpr int C = kTilesPerChunk;
    std::vector<double> px(npx * C);
    for (int c = 0; c < C; ++c)
        for (std::size_t i = 0; i < npx; ++i) px[i * C + static_cast<std::size_t>(c)] = input.tiles.channel(c)[i];

    std::vector<int> candidates;  // flat centre index
    for (int y = r; y < s - r; ++y)
        for (int x = r; x < s - r; ++x) {
            bool ok = true;
            for (int dy = -r; dy <= r && ok; ++dy)
                for (int dx = -r; dx <= r && ok; ++dx) ok = known[static_cast<std::size_t>((y + dy) * s + x + dx)];
            if (ok) candidates.push_back(y * s + x);
        }
    if (candidates.empty()) return dominant_fill(input);
    if (config.max_candidates > 0 && candidates.size() > static_cast<std::size_t>(config.max_candidates)) {
        std::vector<int> picked;
        const std::size_t n = candidates.size(), m = static_cast<std::size_t>(config.max_candidates);
        for (std::size_t i = 0; i < m; ++i) picked.push_back(candidates[i * n / m]);
        candidates = std::move(picked);
    }

    std::vector<int> offsets;  // flat offsets of the known pixels in the target patch
    for (int y = 0; y < s; ++y)
        for (int x = 0; x < s; ++x) {
            const std::size_t idx = static_cast<std::size_t>(y) * s + x;
            if (known[idx]) continue;
            offsets.clear();
            for (int dy = -r; dy <= r; ++dy) {
                const int yy = y + dy;
                if (yy < 0 || yy >= s) continue;
                for (int dx = -r; dx <= r; ++dx) {
                    const int xx = x + dx;
                    if (xx < 0 || xx >= s || !known[static_cast<std::size_t>(yy) * s + xx]) continue;
                    offsets.push_back(dy * s + dx);
                }
            }
            double best = std::numeric_limits<double>::infinity();
            int best_centre = candidates.front();
            for (int centre : candidates) {
                double ssd = 0;
                for (int off : offsets) {
                    const double* a = &px[static_cast<std::size_t>(static_cast<std::ptrdiff_t>(idx) + off) * C];
                    const double* b = &px[static_cast<std::size_t>(centre + off) * C];
                    for (int c = 0; c < C; ++c) {
                        const double d = a[c] - b[c];
                        ssd += d * d;
                    }
                    if (ssd >= best) break;
                }
                if (ssd < best) {
                    best = ssd;
                    best_centre = centre;
                }
            }
            std::copy_n(&px[static_cast<std::size_t>(best_centre) * C], C, &px[idx * C]);
            known[idx] = 1;
        }

    Tensor generated = Tensor::image(C, s, s);
    for (int c = 0; c < C; ++c)
        for (std::size_t i = 0; i < npx; ++i) generated.channel(c)[i] = px[i * C + static_cast<std::size_t>(c)];
    return composite(input, generated);
}

}  // namespace smartbrush
