#pragma once

#include "smartbrush/coherence.hpp"
#include "smartbrush/map_core.hpp"

#include <cstdint>
#include <memory>
#include <string>

namespace smartbrush {

/// Generator input: the brushed tile stack (masked pixels zeroed), the brush,
/// and aligned conditioning planes.
struct MaskedChunkInput {
    Tensor tiles;  // (8, s, s)
    BrushMask brush;
    ContextStack context;

    int side() const { return tiles.height(); }
    void validate() const;

    /// Applies the brush to the chunk's weights.
    static MaskedChunkInput from_chunk(const Chunk& chunk, const BrushMask& brush, ContextStack context);
    static MaskedChunkInput from_tiles(const Tensor& tiles, const BrushMask& brush, ContextStack context);
};

/// brush ? generated : input, selected per pixel so unmasked values are
/// copied bit-exactly.
Tensor composite(const MaskedChunkInput& input, const Tensor& generated);

enum class GeneratorKind { Baseline, ToyBrushGAN, ToyBrushCLDM };
std::string to_string(GeneratorKind kind);

class Generator {
public:
    virtual ~Generator() = default;
    virtual GeneratorKind kind() const = 0;
    /// Returns (8, s, s) weights equal to the input wherever the brush is 0.
    virtual Tensor generate(const MaskedChunkInput& input, std::uint64_t seed) const = 0;
};

struct BaselineConfig {
    int patch = 7;
    /// Source patches considered per fill; larger sets are subsampled evenly.
    int max_candidates = 128;
};

/// Raster-scan exemplar fill: each masked pixel copies the centre of the
/// fully-known source patch with the lowest SSD over the currently known
/// pixels of its own patch (all 8 channels jointly). Complete masks, or masks
/// that leave no fully-known source patch, fill with the dominant material
/// of the context templates.
Tensor baseline_inpaint(const MaskedChunkInput& input, const BaselineConfig& config = {});

class BaselineGenerator final : public Generator {
public:
    explicit BaselineGenerator(BaselineConfig config = {}) : config_(config) {}
    GeneratorKind kind() const override { return GeneratorKind::Baseline; }
    Tensor generate(const MaskedChunkInput& input, std::uint64_t) const override { return baseline_inpaint(input, config_); }

private:
    BaselineConfig config_;
};

/// "baseline" or a checkpoint path.
std::unique_ptr<Generator> load_generator(const std::string& spec);

}  // namespace smartbrush
