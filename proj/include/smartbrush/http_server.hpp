#pragma once

#include "smartbrush/service.hpp"

#include <memory>
#include <string>

namespace smartbrush {

/// JSON-over-HTTP front end for BrushService, all routes under /v1.
class HttpServer {
public:
    explicit HttpServer(BrushService& service);
    ~HttpServer();

    /// Binds to `host:port`; port 0 picks a free port. Returns the bound port.
    int bind(const std::string& host, int port);
    /// Serves until stop(); call after bind().
    void serve();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace smartbrush
