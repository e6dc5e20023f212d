#pragma once

#include "smartbrush/brushcldm.hpp"
#include "smartbrush/brushgan.hpp"
#include "smartbrush/params.hpp"

#include <filesystem>
#include <json.hpp>
#include <string>

namespace smartbrush {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// File layout (little-endian): magic "SBCKPT\0\0", u32 version, u32 header
/// length, JSON header {"arch", "config", "seed"}, u32 slice count, then per
/// slice: u32 name length, name, u32 rank, i32 dims[rank], f64 values.
struct Checkpoint {
    std::string arch;  // "brushgan" | "brushcldm"
    nlohmann::json config;
    ParameterStore params;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

Checkpoint make_checkpoint(const BrushGan& model);
Checkpoint make_checkpoint(const BrushCldm& model);

}  // namespace smartbrush
