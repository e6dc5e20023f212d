#include "smartbrush/checkpoint.hpp"

#include "smartbrush/error.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace smartbrush {

namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

constexpr char kMagic[8] = {'S', 'B', 'C', 'K', 'P', 'T', '\0', '\0'};

template <typename T>
void put(std::ostream& out, T value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in, const std::filesystem::path& path) {
    T value{};
    if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) fail(ErrorKind::Format, "truncated checkpoint " + path.string());
    return value;
}

std::string get_string(std::istream& in, std::uint32_t n, const std::filesystem::path& path) {
    std::string s(n, '\0');
    if (n && !in.read(s.data(), n)) fail(ErrorKind::Format, "truncated checkpoint " + path.string());
    return s;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::Io, "cannot write checkpoint " + path.string());
    out.write(kMagic, sizeof kMagic);
    put<std::uint32_t>(out, kCheckpointVersion);
    const std::string header = nlohmann::json{{"arch", checkpoint.arch}, {"config", checkpoint.config}}.dump();
    put<std::uint32_t>(out, static_cast<std::uint32_t>(header.size()));
    out.write(header.data(), static_cast<std::streamsize>(header.size()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(checkpoint.params.slices().size()));
    for (const auto& s : checkpoint.params.slices()) {
        put<std::uint32_t>(out, static_cast<std::uint32_t>(s.name.size()));
        out.write(s.name.data(), static_cast<std::streamsize>(s.name.size()));
        put<std::uint32_t>(out, static_cast<std::uint32_t>(s.shape.size()));
        for (int d : s.shape) put<std::int32_t>(out, d);
        out.write(reinterpret_cast<const char*>(checkpoint.params.flat().data() + s.offset),
                  static_cast<std::streamsize>(s.size * sizeof(double)));
    }
    if (!out) fail(ErrorKind::Io, "failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::Io, "cannot open checkpoint " + path.string());
    char magic[8];
    if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0)
        fail(ErrorKind::Format, path.string() + " is not a smartbrush checkpoint");
    const auto version = get<std::uint32_t>(in, path);
    if (version != kCheckpointVersion)
        fail(ErrorKind::Format, "unsupported checkpoint version " + std::to_string(version) + " in " + path.string());
    const auto header_len = get<std::uint32_t>(in, path);
    Checkpoint ck;
    try {
        const auto header = nlohmann::json::parse(get_string(in, header_len, path));
        ck.arch = header.at("arch").get<std::string>();
        ck.config = header.at("config");
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::Format, "bad checkpoint header in " + path.string() + ": " + e.what());
    }
    const auto count = get<std::uint32_t>(in, path);
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::string name = get_string(in, get<std::uint32_t>(in, path), path);
        const auto rank = get<std::uint32_t>(in, path);
        if (rank > 8) fail(ErrorKind::Format, "implausible rank for slice " + name);
        std::vector<int> shape;
        for (std::uint32_t r = 0; r < rank; ++r) shape.push_back(get<std::int32_t>(in, path));
        Tensor t(shape);
        if (!in.read(reinterpret_cast<char*>(t.ptr()), static_cast<std::streamsize>(t.size() * sizeof(double))))
            fail(ErrorKind::Format, "truncated checkpoint " + path.string());
        ck.params.add(name, t);
    }
    return ck;
}

Checkpoint make_checkpoint(const BrushGan& model) { return {"brushgan", model.config().to_json(), model.params()}; }
Checkpoint make_checkpoint(const BrushCldm& model) { return {"brushcldm", model.config().to_json(), model.params()}; }

std::unique_ptr<Generator> load_generator(const std::string& spec) {
    if (spec == "baseline") return std::make_unique<BaselineGenerator>();
    Checkpoint ck = load_checkpoint(spec);
    try {
        if (ck.arch == "brushgan") return std::make_unique<BrushGan>(GanConfig::from_json(ck.config), std::move(ck.params));
        if (ck.arch == "brushcldm") return std::make_unique<BrushCldm>(CldmConfig::from_json(ck.config), std::move(ck.params));
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::Format, "bad model config in " + spec + ": " + e.what());
    }
    fail(ErrorKind::Format, "unknown model architecture '" + ck.arch + "' in " + spec);
}

}  // namespace smartbrush
