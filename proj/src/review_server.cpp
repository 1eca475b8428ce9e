#include "kgfuse/review_server.hpp"

#include <httplib.h>

#include "kgfuse/errors.hpp"

namespace kgfuse::review {

namespace {

void send_json(httplib::Response& res, int status, const nlohmann::json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& code, const std::string& message,
                std::uint64_t version) {
    send_json(res, status, {{"error", code}, {"message", message}, {"version", version}});
}

// Maps library errors onto HTTP statuses.
template <typename F>
void guarded(ReviewSession& s, httplib::Response& res, F&& f) {
    try {
        f();
    } catch (const VersionConflictError& e) {
        send_error(res, 409, "version_conflict", e.what(), e.current());
    } catch (const StateError& e) {
        send_error(res, 409, "terminal_status", e.what(), s.version());
    } catch (const LookupError& e) {
        send_error(res, 404, "not_found", e.what(), s.version());
    } catch (const InvalidRequestError& e) {
        send_error(res, 400, "bad_request", e.what(), s.version());
    } catch (const std::exception& e) {
        send_error(res, 500, "internal", e.what(), s.version());
    }
}

}  // namespace

ReviewServer::ReviewServer(ReviewSession& session, ServerOptions opts)
    : session_(session), opts_(std::move(opts)), server_(std::make_unique<httplib::Server>()) {
    install_routes();
}

ReviewServer::~ReviewServer() { stop(); }

void ReviewServer::install_routes() {
    auto& s = session_;
    server_->Get("/api/candidates", [&s](const httplib::Request& req, httplib::Response& res) {
        guarded(s, res, [&] {
            std::map<std::string, std::string> params;
            for (const auto& [k, v] : req.params) params[k] = v;
            send_json(res, 200, page_to_json(s.list_candidates(CandidateQuery::parse(params))));
        });
    });

    server_->Post(R"(/api/candidates/([^/]+)/verdict)", [&s](const httplib::Request& req, httplib::Response& res) {
        guarded(s, res, [&] {
            expand::CandidateId id = 0;
            const std::string raw = req.matches[1];
            try {
                std::size_t used = 0;
                id = std::stoull(raw, &used);
                if (used != raw.size()) throw std::invalid_argument(raw);
            } catch (const std::exception&) {
                throw InvalidRequestError("candidate id must be an integer");
            }
            nlohmann::json body;
            try {
                body = nlohmann::json::parse(req.body);
            } catch (const nlohmann::json::parse_error&) {
                throw InvalidRequestError("body must be JSON");
            }
            if (!body.is_object() || !body.contains("verdict") || !body["verdict"].is_string())
                throw InvalidRequestError("verdict must be \"accept\" or \"reject\"");
            if (!body.contains("version") || !body["version"].is_number_unsigned())
                throw InvalidRequestError("version must be the session version the candidate was read at");
            expand::Verdict v;
            try {
                v = expand::parse_verdict(body["verdict"].get<std::string>());
            } catch (const ParseError&) {
                throw InvalidRequestError("verdict must be \"accept\" or \"reject\"");
            }
            const std::string reviewer = body.value("reviewer", std::string{});
            auto r = s.submit_verdict(id, v, reviewer, body["version"].get<std::uint64_t>());
            auto cj = expand::candidate_to_json(r.candidate);
            cj.erase("kind");
            send_json(res, 200, {{"candidate", cj}, {"version", r.version}});
        });
    });

    server_->Post("/api/step", [&s](const httplib::Request&, httplib::Response& res) {
        guarded(s, res, [&] {
            s.step();
            send_json(res, 200, stats_to_json(s.get_stats()));
        });
    });

    server_->Get("/api/stats", [&s](const httplib::Request&, httplib::Response& res) {
        guarded(s, res, [&] { send_json(res, 200, stats_to_json(s.get_stats())); });
    });

    server_->Get(R"(/api/graph/nodes/(.+))", [&s](const httplib::Request& req, httplib::Response& res) {
        guarded(s, res, [&] {
            auto ctx = node_context_to_json(s.node_context(httplib::detail::decode_url(req.matches[1], false)));
            ctx["version"] = s.version();
            send_json(res, 200, ctx);
        });
    });

    if (opts_.static_dir && !server_->set_mount_point("/", *opts_.static_dir))
        throw ConfigError("static directory not found: " + *opts_.static_dir);
}

int ReviewServer::start() {
    int port = opts_.port;
    if (port == 0) {
        port = server_->bind_to_any_port(opts_.host);
    } else if (!server_->bind_to_port(opts_.host, port)) {
        port = -1;
    }
    if (port < 0) throw NetworkError("cannot bind " + opts_.host + ":" + std::to_string(opts_.port));
    thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
    return port;
}

void ReviewServer::run() {
    if (!server_->listen(opts_.host, opts_.port))
        throw NetworkError("cannot listen on " + opts_.host + ":" + std::to_string(opts_.port));
}

void ReviewServer::stop() {
    if (server_) server_->stop();
    if (thread_.joinable()) thread_.join();
}

}  // namespace kgfuse::review
