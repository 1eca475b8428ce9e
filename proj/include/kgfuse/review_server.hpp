#pragma once

#include <memory>
#include <optional>
#include <string>
#include <thread>

#include "kgfuse/review.hpp"

namespace httplib {
class Server;
}

namespace kgfuse::review {

struct ServerOptions {
    std::string host = "127.0.0.1";
    int port = 8080;  // 0 picks a free port
    std::optional<std::string> static_dir;  // mounted at /
};

// HTTP+JSON front end over a ReviewSession:
//   GET  /api/candidates?status=&relation=&min_p=&page=&page_size=
//   POST /api/candidates/{id}/verdict  {"verdict","reviewer","version"}
//   POST /api/step
//   GET  /api/stats
//   GET  /api/graph/nodes/{id}
// Every JSON response carries "version". Errors are {"error","message",
// "version"} with 400 (bad request), 404 (unknown id) or 409 (version
// conflict or terminal candidate).
class ReviewServer {
public:
    ReviewServer(ReviewSession& session, ServerOptions opts);
    ~ReviewServer();
    ReviewServer(const ReviewServer&) = delete;
    ReviewServer& operator=(const ReviewServer&) = delete;

    // Binds and serves on a background thread; returns the bound port.
    int start();
    // Binds and serves on the calling thread until stop().
    void run();
    void stop();

private:
    void install_routes();

    ReviewSession& session_;
    ServerOptions opts_;
    std::unique_ptr<httplib::Server> server_;
    std::thread thread_;
};

}  // namespace kgfuse::review
