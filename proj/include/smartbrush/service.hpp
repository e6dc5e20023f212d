#pragma once

#include "smartbrush/stitching.hpp"

#include <json.hpp>

#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <thread>
#include <vector>

namespace smartbrush {

struct ServiceConfig {
    /// Bundles are opened and exported relative to this directory.
    std::filesystem::path bundle_root = ".";
    std::size_t undo_depth = 10;
    /// Generator names usable in addition to "baseline", mapped to checkpoint paths.
    std::map<std::string, std::filesystem::path> models;
    StitchConfig stitch;
};

enum class JobStatus { Queued, Running, Done, Failed };
std::string to_string(JobStatus s);

struct JobInfo {
    std::string id;
    std::string session_id;
    std::string generator;
    std::uint64_t seed = 0;
    JobStatus status = JobStatus::Queued;
    std::vector<ChunkCoord> chunks;
    std::string error;
    nlohmann::json summary;  // pairs with seam scores, timings; set when Done

    bool terminal() const { return status == JobStatus::Done || status == JobStatus::Failed; }
    nlohmann::json to_json() const;
};

/// 128 bits from the OS CSPRNG, hex encoded.
std::string random_token();

std::string base64_encode(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> base64_decode(const std::string& text);

/// Sessions over map bundles plus asynchronous generation jobs. Thread safe.
class BrushService {
public:
    explicit BrushService(ServiceConfig config);
    ~BrushService();
    BrushService(const BrushService&) = delete;
    BrushService& operator=(const BrushService&) = delete;

    /// `bundle` is resolved under the bundle root and may not escape it.
    std::string open_session(const std::string& bundle);
    nlohmann::json session_info(const std::string& session) const;

    /// Blended RGB of chunks [from..to] (inclusive) from the last committed
    /// state, box-downsampled by the integer factor `zoom`.
    Tensor render(const std::string& session, ChunkCoord from, ChunkCoord to, int zoom = 1) const;

    /// Replaces the pending brush masks. Values > 0.5 count as brushed.
    void submit_masks(const std::string& session, const std::map<ChunkCoord, BrushMask>& masks);

    /// Queues generate_region over the pending masks. Throws Conflict while
    /// another job of the same session is unfinished.
    std::string start_generation(const std::string& session, const std::string& generator, std::uint64_t seed);

    JobInfo job(const std::string& job_id) const;
    /// Blocks until the job is terminal.
    JobInfo wait(const std::string& job_id) const;

    /// Restores the chunks touched by the most recent job.
    std::vector<ChunkCoord> undo(const std::string& session);
    std::size_t undo_depth(const std::string& session) const;

    /// Writes the committed state as a bundle under the bundle root (default
    /// "exports/<session>"); returns the absolute path.
    std::filesystem::path export_session(const std::string& session, const std::string& relative_path = "");

    /// The committed map of a session (a snapshot).
    std::shared_ptr<const GameMap> snapshot(const std::string& session) const;

    std::vector<std::string> generator_names() const;
    /// Makes an in-memory generator available under `name`.
    void register_generator(const std::string& name, std::unique_ptr<Generator> generator);

private:
    struct Snapshot {
        std::vector<Chunk> chunks;
    };
    struct Session {
        std::string id;
        std::filesystem::path bundle;
        mutable std::mutex mutex;
        std::shared_ptr<const GameMap> map;
        std::map<ChunkCoord, BrushMask> pending;
        std::uint64_t pending_version = 0;  // bumped by every submit
        std::vector<Snapshot> undo;
        std::optional<std::string> active_job;
    };

    std::shared_ptr<Session> find_session(const std::string& id) const;
    std::filesystem::path resolve(const std::string& relative) const;
    const Generator& generator(const std::string& name);
    void run_job(std::shared_ptr<Session> session, std::string job_id, std::map<ChunkCoord, BrushMask> masks,
                 std::uint64_t masks_version);
    void update_job(const std::string& id, const std::function<void(JobInfo&)>& fn);

    ServiceConfig config_;
    mutable std::shared_mutex sessions_mutex_;
    std::map<std::string, std::shared_ptr<Session>> sessions_;

    mutable std::mutex jobs_mutex_;
    mutable std::condition_variable jobs_cv_;
    std::map<std::string, JobInfo> jobs_;

    mutable std::mutex generators_mutex_;
    std::map<std::string, std::unique_ptr<Generator>> generators_;

    std::mutex workers_mutex_;
    std::vector<std::thread> workers_;
};

}  // namespace smartbrush
