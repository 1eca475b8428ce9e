#pragma once

#include <chrono>
#include <cstddef>
#include <string>
#include <vector>

#include "kgfuse/embed.hpp"

namespace kgfuse::embed {

struct RemoteConfig {
    std::string endpoint;  // http://host[:port]/path
    std::string auth_header_name;
    std::string auth_header_value;
    std::size_t batch_size = 64;
    std::size_t max_attempts = 3;
    std::size_t max_in_flight = 4;
    std::chrono::milliseconds timeout{30000};
    std::chrono::milliseconds initial_backoff{100};
};

// JSON-over-HTTP embedding client. Each batch is POSTed as {"texts":[...]}
// and must come back as {"vectors":[[...],...]} in the same order. 5xx
// answers are retried with doubling backoff.
class RemoteEmbeddingClient {
public:
    explicit RemoteEmbeddingClient(RemoteConfig cfg);

    // Empty input sends no request. Throws NetworkError, ProtocolError or
    // DimensionError.
    std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) const;

    const RemoteConfig& config() const noexcept { return cfg_; }

private:
    std::vector<EmbeddingVector> post_batch(const std::vector<std::string>& batch) const;

    RemoteConfig cfg_;
    std::string origin_;  // scheme://host:port
    std::string path_;
};

inline std::vector<EmbeddingVector> remote_embed(const RemoteConfig& cfg, const std::vector<std::string>& texts) {
    return RemoteEmbeddingClient(cfg).embed(texts);
}

// EmbeddingProvider over a remote endpoint with a declared dimension.
class RemoteProvider final : public EmbeddingProvider {
public:
    RemoteProvider(RemoteConfig cfg, std::size_t dim) : client_(std::move(cfg)), dim_(dim) {}

    std::size_t dim() const override { return dim_; }
    EmbeddingVector embed(std::string_view text) const override;
    std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts) const override;

private:
    RemoteEmbeddingClient client_;
    std::size_t dim_;
};

}  // namespace kgfuse::embed
