#include "kgfuse/remote_embed.hpp"

#include <future>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "kgfuse/errors.hpp"

namespace kgfuse::embed {
namespace {

void split_url(const std::string& url, std::string& origin, std::string& path) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw ConfigError("endpoint '" + url + "' has no scheme");
    const auto scheme = url.substr(0, scheme_end);
    if (scheme != "http") throw ConfigError("endpoint scheme '" + scheme + "' is not supported (http only)");
    const auto path_start = url.find('/', scheme_end + 3);
    origin = url.substr(0, path_start);
    path = path_start == std::string::npos ? "/" : url.substr(path_start);
    if (origin.size() <= scheme_end + 3) throw ConfigError("endpoint '" + url + "' has no host");
}

}  // namespace

RemoteEmbeddingClient::RemoteEmbeddingClient(RemoteConfig cfg) : cfg_(std::move(cfg)) {
    if (cfg_.batch_size == 0 || cfg_.batch_size > 64) throw ConfigError("remote batch size must be in 1..64");
    if (cfg_.max_attempts == 0) throw ConfigError("remote max_attempts must be positive");
    if (cfg_.max_in_flight == 0) throw ConfigError("remote max_in_flight must be positive");
    split_url(cfg_.endpoint, origin_, path_);
}

std::vector<EmbeddingVector> RemoteEmbeddingClient::post_batch(const std::vector<std::string>& batch) const {
    httplib::Client cli(origin_);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(cfg_.timeout).count();
    cli.set_connection_timeout(secs, 0);
    cli.set_read_timeout(secs, 0);
    httplib::Headers headers;
    if (!cfg_.auth_header_name.empty()) headers.emplace(cfg_.auth_header_name, cfg_.auth_header_value);

    const std::string body = nlohmann::json{{"texts", batch}}.dump();
    auto backoff = cfg_.initial_backoff;
    for (std::size_t attempt = 1;; ++attempt) {
        auto res = cli.Post(path_, headers, body, "application/json");
        if (!res) {
            throw NetworkError("embedding request to " + cfg_.endpoint + " failed: " + httplib::to_string(res.error()));
        }
        if (res->status >= 500 && attempt < cfg_.max_attempts) {
            std::this_thread::sleep_for(backoff);
            backoff *= 2;
            continue;
        }
        if (res->status != 200) {
            throw ProtocolError("embedding endpoint answered HTTP " + std::to_string(res->status) + " after " +
                                std::to_string(attempt) + " attempt(s)");
        }
        std::vector<std::vector<double>> raw;
        try {
            raw = nlohmann::json::parse(res->body).at("vectors").get<std::vector<std::vector<double>>>();
        } catch (const nlohmann::json::exception& e) {
            throw ProtocolError(std::string("malformed embedding response: ") + e.what());
        }
        if (raw.size() != batch.size()) {
            throw ProtocolError("embedding response has " + std::to_string(raw.size()) + " vectors for " +
                                std::to_string(batch.size()) + " texts");
        }
        std::vector<EmbeddingVector> out;
        out.reserve(raw.size());
        for (auto& v : raw) {
            if (!out.empty() && v.size() != out.front().dim()) {
                throw DimensionError("embedding response mixes dimensions " + std::to_string(out.front().dim()) +
                                     " and " + std::to_string(v.size()));
            }
            try {
                out.emplace_back(std::move(v));
            } catch (const DimensionError&) {
                throw;
            } catch (const Error& e) {
                throw ProtocolError(std::string("bad vector in embedding response: ") + e.what());
            }
        }
        return out;
    }
}

std::vector<EmbeddingVector> RemoteEmbeddingClient::embed(const std::vector<std::string>& texts) const {
    std::vector<std::vector<std::string>> batches;
    for (std::size_t i = 0; i < texts.size(); i += cfg_.batch_size) {
        const auto end = std::min(texts.size(), i + cfg_.batch_size);
        batches.emplace_back(texts.begin() + static_cast<std::ptrdiff_t>(i),
                             texts.begin() + static_cast<std::ptrdiff_t>(end));
    }

    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (std::size_t wave = 0; wave < batches.size(); wave += cfg_.max_in_flight) {
        const auto wave_end = std::min(batches.size(), wave + cfg_.max_in_flight);
        std::vector<std::future<std::vector<EmbeddingVector>>> inflight;
        for (std::size_t b = wave; b < wave_end; ++b) {
            inflight.push_back(std::async(std::launch::async, [this, &batches, b] { return post_batch(batches[b]); }));
        }
        for (auto& f : inflight) {
            for (auto& v : f.get()) {
                if (!out.empty() && v.dim() != out.front().dim()) {
                    throw DimensionError("embedding batches disagree on dimension");
                }
                out.push_back(std::move(v));
            }
        }
    }
    return out;
}

EmbeddingVector RemoteProvider::embed(std::string_view text) const {
    auto v = client_.embed({std::string(text)});
    if (v.front().dim() != dim_) {
        throw DimensionError("remote provider returned dim " + std::to_string(v.front().dim()) + ", expected " +
                             std::to_string(dim_));
    }
    return std::move(v.front());
}

std::vector<EmbeddingVector> RemoteProvider::embed_batch(std::span<const std::string> texts) const {
    auto out = client_.embed(std::vector<std::string>(texts.begin(), texts.end()));
    for (const auto& v : out) {
        if (v.dim() != dim_) throw DimensionError("remote provider returned an unexpected dimension");
    }
    return out;
}

}  // namespace kgfuse::embed
