#include "smartbrush/http_server.hpp"

#include "smartbrush/error.hpp"
#include "smartbrush/png_io.hpp"

#include <httplib.h>

namespace smartbrush {

namespace {

int status_for(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::NotFound: return 404;
    case ErrorKind::Conflict: return 409;
    case ErrorKind::InvalidArgument:
    case ErrorKind::ShapeMismatch:
    case ErrorKind::Format: return 400;
    default: return 500;
    }
}

void send_json(httplib::Response& res, int status, const nlohmann::json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

nlohmann::json parse_body(const httplib::Request& req) {
    if (req.body.empty()) return nlohmann::json::object();
    try {
        return nlohmann::json::parse(req.body);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::Format, std::string("request body is not JSON: ") + e.what());
    }
}

int int_param(const httplib::Request& req, const std::string& name, std::optional<int> fallback = std::nullopt) {
    if (!req.has_param(name)) {
        if (fallback) return *fallback;
        fail(ErrorKind::InvalidArgument, "missing query parameter '" + name + "'");
    }
    const std::string v = req.get_param_value(name);
    try {
        std::size_t used = 0;
        const int out = std::stoi(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return out;
    } catch (const std::exception&) {
        fail(ErrorKind::InvalidArgument, "query parameter '" + name + "' is not an integer");
    }
}

/// Wraps a handler so library errors become JSON error responses.
template <typename F>
httplib::Server::Handler guarded(F f) {
    return [f](const httplib::Request& req, httplib::Response& res) {
        try {
            f(req, res);
        } catch (const Error& e) {
            send_json(res, status_for(e.kind()), {{"error", e.what()}});
        } catch (const nlohmann::json::exception& e) {
            send_json(res, 400, {{"error", e.what()}});
        } catch (const std::exception& e) {
            send_json(res, 500, {{"error", e.what()}});
        }
    };
}

}  // namespace

struct HttpServer::Impl {
    BrushService& service;
    httplib::Server server;

    explicit Impl(BrushService& s) : service(s) { routes(); }

    void routes() {
        server.Post("/v1/sessions", guarded([this](const httplib::Request& req, httplib::Response& res) {
            const auto body = parse_body(req);
            if (!body.contains("bundle") || !body["bundle"].is_string())
                fail(ErrorKind::InvalidArgument, "body needs a string field 'bundle'");
            const std::string id = service.open_session(body["bundle"].get<std::string>());
            send_json(res, 201, service.session_info(id));
        }));
        server.Get(R"(/v1/sessions/([0-9a-f]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
            send_json(res, 200, service.session_info(req.matches[1]));
        }));
        server.Get(R"(/v1/sessions/([0-9a-f]+)/render)", guarded([this](const httplib::Request& req, httplib::Response& res) {
            const ChunkCoord from{int_param(req, "x0"), int_param(req, "y0")};
            const ChunkCoord to{int_param(req, "x1"), int_param(req, "y1")};
            const Tensor img = service.render(req.matches[1], from, to, int_param(req, "zoom", 1));
            const auto bytes = png::encode(img, png::Format::Rgb8);
            res.status = 200;
            res.set_content(std::string(bytes.begin(), bytes.end()), "image/png");
        }));
        server.Put(R"(/v1/sessions/([0-9a-f]+)/masks)", guarded([this](const httplib::Request& req, httplib::Response& res) {
            const auto body = parse_body(req);
            if (!body.contains("masks") || !body["masks"].is_array())
                fail(ErrorKind::InvalidArgument, "body needs an array field 'masks'");
            std::map<ChunkCoord, BrushMask> masks;
            for (const auto& m : body["masks"]) {
                const ChunkCoord c{m.at("x").get<int>(), m.at("y").get<int>()};
                const png::Decoded img = png::decode(base64_decode(m.at("png").get<std::string>()));
                if (img.pixels.channels() != 1) fail(ErrorKind::Format, "mask for chunk " + c.str() + " must be grayscale");
                masks[c] = BrushMask{img.pixels};
            }
            service.submit_masks(req.matches[1], masks);
            send_json(res, 200, {{"accepted", masks.size()}});
        }));
        server.Post(R"(/v1/sessions/([0-9a-f]+)/generate)", guarded([this](const httplib::Request& req, httplib::Response& res) {
            const auto body = parse_body(req);
            const std::string gen = body.value("generator", std::string("baseline"));
            const std::uint64_t seed = body.value("seed", std::uint64_t{1});
            const std::string job = service.start_generation(req.matches[1], gen, seed);
            send_json(res, 202, {{"job_id", job}, {"status", "queued"}});
        }));
        server.Get(R"(/v1/jobs/([0-9a-f]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
            send_json(res, 200, service.job(req.matches[1]).to_json());
        }));
        server.Post(R"(/v1/sessions/([0-9a-f]+)/undo)", guarded([this](const httplib::Request& req, httplib::Response& res) {
            nlohmann::json restored = nlohmann::json::array();
            for (const auto& c : service.undo(req.matches[1])) restored.push_back({c.x, c.y});
            send_json(res, 200, {{"restored", restored}});
        }));
        server.Post(R"(/v1/sessions/([0-9a-f]+)/export)", guarded([this](const httplib::Request& req, httplib::Response& res) {
            const auto body = parse_body(req);
            const auto path = service.export_session(req.matches[1], body.value("path", std::string()));
            send_json(res, 200, {{"path", path.string()}});
        }));
        server.Get("/v1/generators", guarded([this](const httplib::Request&, httplib::Response& res) {
            send_json(res, 200, {{"generators", service.generator_names()}});
        }));
    }
};

HttpServer::HttpServer(BrushService& service) : impl_(std::make_unique<Impl>(service)) {}
HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
    if (port == 0) {
        const int bound = impl_->server.bind_to_any_port(host);
        if (bound < 0) fail(ErrorKind::Io, "could not bind " + host);
        return bound;
    }
    if (!impl_->server.bind_to_port(host, port)) fail(ErrorKind::Io, "could not bind " + host + ":" + std::to_string(port));
    return port;
}

void HttpServer::serve() {
    if (!impl_->server.listen_after_bind()) fail(ErrorKind::Io, "server stopped unexpectedly");
}

void HttpServer::stop() {
    if (impl_) impl_->server.stop();
}

}  // namespace smartbrush
