#include "smartbrush/service.hpp"

#include "smartbrush/bundle.hpp"
#include "smartbrush/error.hpp"

#include <openssl/evp.h>
#include <openssl/rand.h>

#include <algorithm>
#include <set>

namespace smartbrush {

std::string to_string(JobStatus s) {
    switch (s) {
    case JobStatus::Queued: return "queued";
    case JobStatus::Running: return "running";
    case JobStatus::Done: return "done";
    case JobStatus::Failed: return "failed";
    }
    return "unknown";
}

nlohmann::json JobInfo::to_json() const {
    nlohmann::json coords = nlohmann::json::array();
    for (const auto& c : chunks) coords.push_back({c.x, c.y});
    nlohmann::json j = {{"id", id},           {"session_id", session_id}, {"generator", generator},
                        {"seed", seed},       {"status", to_string(status)}, {"chunks", coords}};
    if (!error.empty()) j["error"] = error;
    if (status == JobStatus::Done) j["summary"] = summary;
    return j;
}

std::string random_token() {
    unsigned char bytes[16];
    if (RAND_bytes(bytes, sizeof bytes) != 1) fail(ErrorKind::Io, "random source unavailable");
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned char b : bytes) {
        out.push_back(hex[b >> 4]);
        out.push_back(hex[b & 15]);
    }
    return out;
}

std::string base64_encode(const std::vector<std::uint8_t>& bytes) {
    std::string out(4 * ((bytes.size() + 2) / 3), '\0');
    const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(), static_cast<int>(bytes.size()));
    out.resize(static_cast<std::size_t>(n));
    return out;
}

std::vector<std::uint8_t> base64_decode(const std::string& text) {
    std::string clean;
    for (char c : text)
        if (!std::isspace(static_cast<unsigned char>(c))) clean.push_back(c);
    if (clean.size() % 4 != 0) fail(ErrorKind::Format, "base64 length is not a multiple of 4");
    std::vector<std::uint8_t> out(clean.size() / 4 * 3);
    const int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(clean.data()), static_cast<int>(clean.size()));
    if (n < 0) fail(ErrorKind::Format, "invalid base64");
    std::size_t len = static_cast<std::size_t>(n);
    // EVP_DecodeBlock keeps the bytes produced by '=' padding.
    if (!clean.empty() && clean.back() == '=') --len;
    if (clean.size() > 1 && clean[clean.size() - 2] == '=') --len;
    out.resize(len);
    return out;
}

BrushService::BrushService(ServiceConfig config) : config_(std::move(config)) {
    if (config_.undo_depth == 0) fail(ErrorKind::InvalidArgument, "undo depth must be positive");
    config_.bundle_root = std::filesystem::weakly_canonical(std::filesystem::absolute(config_.bundle_root));
}

BrushService::~BrushService() {
    std::lock_guard lock(workers_mutex_);
    for (auto& t : workers_)
        if (t.joinable()) t.join();
}

std::filesystem::path BrushService::resolve(const std::string& relative) const {
    const std::filesystem::path rel(relative);
    if (relative.empty() || rel.is_absolute()) fail(ErrorKind::InvalidArgument, "path must be relative to the bundle root");
    for (const auto& part : rel)
        if (part == "..") fail(ErrorKind::InvalidArgument, "path may not leave the bundle root");
    return config_.bundle_root / rel;
}

std::shared_ptr<BrushService::Session> BrushService::find_session(const std::string& id) const {
    std::shared_lock lock(sessions_mutex_);
    const auto it = sessions_.find(id);
    if (it == sessions_.end()) fail(ErrorKind::NotFound, "unknown session");
    return it->second;
}

std::string BrushService::open_session(const std::string& bundle) {
    auto session = std::make_shared<Session>();
    session->bundle = resolve(bundle);
    if (!std::filesystem::is_directory(session->bundle)) fail(ErrorKind::NotFound, "no bundle at " + bundle);
    session->map = std::make_shared<const GameMap>(load_map_bundle(session->bundle));
    session->id = random_token();
    std::unique_lock lock(sessions_mutex_);
    sessions_[session->id] = session;
    return session->id;
}

nlohmann::json BrushService::session_info(const std::string& id) const {
    const auto session = find_session(id);
    std::lock_guard lock(session->mutex);
    const GameMap& map = *session->map;
    nlohmann::json pending = nlohmann::json::array();
    for (const auto& [c, m] : session->pending) pending.push_back({c.x, c.y});
    return {{"session_id", id},
            {"map_id", map.id},
            {"grid_width", map.grid_width},
            {"grid_height", map.grid_height},
            {"tile_size", map.tile_size},
            {"pending_masks", pending},
            {"undo_depth", session->undo.size()},
            {"active_job", session->active_job ? nlohmann::json(*session->active_job) : nlohmann::json(nullptr)}};
}

std::shared_ptr<const GameMap> BrushService::snapshot(const std::string& id) const {
    const auto session = find_session(id);
    std::lock_guard lock(session->mutex);
    return session->map;
}

Tensor BrushService::render(const std::string& id, ChunkCoord from, ChunkCoord to, int zoom) const {
    const auto map = snapshot(id);
    if (!map->in_bounds(from) || !map->in_bounds(to) || to.x < from.x || to.y < from.y)
        fail(ErrorKind::InvalidArgument, "render region must lie inside the grid with x0<=x1, y0<=y1");
    if (zoom < 1 || map->tile_size % zoom != 0)
        fail(ErrorKind::InvalidArgument, "zoom must be a positive divisor of the tile size");
    const Tensor full = render_region(*map, from, to);
    if (zoom == 1) return full;
    Tensor out = Tensor::image(3, full.height() / zoom, full.width() / zoom);
    const double area = static_cast<double>(zoom) * zoom;
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < out.height(); ++y)
            for (int x = 0; x < out.width(); ++x) {
                double acc = 0;
                for (int dy = 0; dy < zoom; ++dy)
                    for (int dx = 0; dx < zoom; ++dx) acc += full.at(c, y * zoom + dy, x * zoom + dx);
                out.at(c, y, x) = acc / area;
            }
    return out;
}

void BrushService::submit_masks(const std::string& id, const std::map<ChunkCoord, BrushMask>& masks) {
    const auto session = find_session(id);
    std::lock_guard lock(session->mutex);
    const GameMap& map = *session->map;
    std::map<ChunkCoord, BrushMask> clean;
    for (const auto& [c, m] : masks) {
        if (!map.in_bounds(c) || !map.chunks.count(c)) fail(ErrorKind::InvalidArgument, "mask for chunk " + c.str() + " outside the map");
        if (m.pixels.rank() != 3 || m.pixels.channels() != 1 || m.side() != map.tile_size || m.pixels.width() != map.tile_size)
            fail(ErrorKind::ShapeMismatch, "mask for chunk " + c.str() + " must be " + std::to_string(map.tile_size) + "x" +
                                               std::to_string(map.tile_size));
        BrushMask b = BrushMask::zeros(map.tile_size);
        for (std::size_t i = 0; i < b.pixels.size(); ++i) b.pixels[i] = m.pixels[i] > 0.5 ? 1.0 : 0.0;
        clean[c] = std::move(b);
    }
    session->pending = std::move(clean);
    ++session->pending_version;
}

std::vector<std::string> BrushService::generator_names() const {
    std::set<std::string> names{"baseline"};
    for (const auto& [name, path] : config_.models) names.insert(name);
    {
        std::lock_guard lock(generators_mutex_);
        for (const auto& [name, g] : generators_) names.insert(name);
    }
    return {names.begin(), names.end()};
}

void BrushService::register_generator(const std::string& name, std::unique_ptr<Generator> generator) {
    if (name.empty() || !generator) fail(ErrorKind::InvalidArgument, "generator needs a name and an instance");
    std::lock_guard lock(generators_mutex_);
    generators_[name] = std::move(generator);
}

const Generator& BrushService::generator(const std::string& name) {
    std::lock_guard lock(generators_mutex_);
    auto it = generators_.find(name);
    if (it != generators_.end()) return *it->second;
    std::unique_ptr<Generator> g;
    if (name == "baseline") {
        g = std::make_unique<BaselineGenerator>();
    } else {
        const auto m = config_.models.find(name);
        if (m == config_.models.end()) fail(ErrorKind::InvalidArgument, "unknown generator '" + name + "'");
        g = load_generator(m->second.string());
    }
    return *generators_.emplace(name, std::move(g)).first->second;
}

std::string BrushService::start_generation(const std::string& id, const std::string& generator_name, std::uint64_t seed) {
    const auto session = find_session(id);
    generator(generator_name);  // validate before queueing
    std::map<ChunkCoord, BrushMask> masks;
    std::uint64_t version = 0;
    JobInfo info;
    {
        std::lock_guard lock(session->mutex);
        if (session->active_job) fail(ErrorKind::Conflict, "session already has a generation job in progress");
        if (session->pending.empty()) fail(ErrorKind::InvalidArgument, "no brush masks submitted");
        masks = session->pending;
        version = session->pending_version;
        info.id = random_token();
        info.session_id = id;
        info.generator = generator_name;
        info.seed = seed;
        for (const auto& [c, m] : masks) info.chunks.push_back(c);
        session->active_job = info.id;
    }
    {
        std::lock_guard lock(jobs_mutex_);
        jobs_[info.id] = info;
    }
    std::lock_guard lock(workers_mutex_);
    workers_.emplace_back(&BrushService::run_job, this, session, info.id, std::move(masks), version);
    return info.id;
}

void BrushService::update_job(const std::string& id, const std::function<void(JobInfo&)>& fn) {
    {
        std::lock_guard lock(jobs_mutex_);
        fn(jobs_.at(id));
    }
    jobs_cv_.notify_all();
}

void BrushService::run_job(std::shared_ptr<Session> session, std::string job_id, std::map<ChunkCoord, BrushMask> masks,
                           std::uint64_t masks_version) {
    std::string generator_name;
    std::uint64_t seed = 0;
    update_job(job_id, [&](JobInfo& j) {
        j.status = JobStatus::Running;
        generator_name = j.generator;
        seed = j.seed;
    });
    try {
        std::shared_ptr<const GameMap> base;
        {
            std::lock_guard lock(session->mutex);
            base = session->map;
        }
        StitchConfig cfg = config_.stitch;
        cfg.seed = seed;
        RegionResult result = generate_region(*base, masks, generator(generator_name), cfg);
        result.map.validate();

        // Everything the pipeline may have written: brushed chunks and their neighbours.
        Snapshot snap;
        for (const auto& [coord, chunk] : base->chunks)
            if (result.map.chunk(coord).weights().data() != chunk.weights().data()) {
                snap.chunks.push_back(chunk);
                snap.chunks.back().coord = coord;
            }

        nlohmann::json pairs = nlohmann::json::array();
        for (const auto& p : result.pairs)
            pairs.push_back({{"a", {p.pair.a.x, p.pair.a.y}},
                             {"b", {p.pair.b.x, p.pair.b.y}},
                             {"direction", to_string(p.pair.direction)},
                             {"intersecting", p.pair.intersecting},
                             {"stitched", p.stitched},
                             {"seam_before", p.seam_before},
                             {"seam_after", p.seam_after}});
        nlohmann::json changed = nlohmann::json::array();
        for (const auto& c : snap.chunks) changed.push_back({c.coord.x, c.coord.y});
        const nlohmann::json summary = {{"pairs", pairs},
                                        {"changed_chunks", changed},
                                        {"generate_seconds", result.generate_seconds},
                                        {"stitch_seconds", result.stitch_seconds}};
        {
            std::lock_guard lock(session->mutex);
            session->map = std::make_shared<const GameMap>(std::move(result.map));
            session->undo.push_back(std::move(snap));
            if (session->undo.size() > config_.undo_depth) session->undo.erase(session->undo.begin());
            if (session->pending_version == masks_version) session->pending.clear();
            session->active_job.reset();
        }
        update_job(job_id, [&](JobInfo& j) {
            j.summary = summary;
            j.status = JobStatus::Done;
        });
    } catch (const std::exception& e) {
        {
            std::lock_guard lock(session->mutex);
            session->active_job.reset();
        }
        update_job(job_id, [&](JobInfo& j) {
            j.error = e.what();
            j.status = JobStatus::Failed;
        });
    }
}

JobInfo BrushService::job(const std::string& id) const {
    std::lock_guard lock(jobs_mutex_);
    const auto it = jobs_.find(id);
    if (it == jobs_.end()) fail(ErrorKind::NotFound, "unknown job");
    return it->second;
}

JobInfo BrushService::wait(const std::string& id) const {
    std::unique_lock lock(jobs_mutex_);
    if (!jobs_.count(id)) fail(ErrorKind::NotFound, "unknown job");
    jobs_cv_.wait(lock, [&] { return jobs_.at(id).terminal(); });
    return jobs_.at(id);
}

std::vector<ChunkCoord> BrushService::undo(const std::string& id) {
    const auto session = find_session(id);
    std::lock_guard lock(session->mutex);
    if (session->active_job) fail(ErrorKind::Conflict, "cannot undo while a generation job is in progress");
    if (session->undo.empty()) fail(ErrorKind::Conflict, "nothing to undo");
    Snapshot snap = std::move(session->undo.back());
    session->undo.pop_back();
    GameMap map = *session->map;
    std::vector<ChunkCoord> restored;
    for (auto& chunk : snap.chunks) {
        restored.push_back(chunk.coord);
        map.chunk(chunk.coord) = std::move(chunk);
    }
    session->map = std::make_shared<const GameMap>(std::move(map));
    return restored;
}

std::size_t BrushService::undo_depth(const std::string& id) const {
    const auto session = find_session(id);
    std::lock_guard lock(session->mutex);
    return session->undo.size();
}

std::filesystem::path BrushService::export_session(const std::string& id, const std::string& relative_path) {
    const auto map = snapshot(id);
    const std::filesystem::path out = resolve(relative_path.empty() ? "exports/" + id : relative_path);
    save_map_bundle(*map, out);
    return out;
}

}  // namespace smartbrush
