#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "kgfuse/embed.hpp"
#include "kgfuse/expand.hpp"
#include "kgfuse/ingest.hpp"
#include "kgfuse/linkpred.hpp"

namespace kgfuse {

struct ProviderConfig {
    enum class Kind { deterministic, remote };
    Kind kind = Kind::deterministic;
    std::size_t dim = embed::DeterministicProvider::kDefaultDim;
    std::map<std::string, std::string> aliases;  // inline alias -> canonical
    std::optional<std::string> alias_file;      // TSV: alias, canonical
    std::string endpoint;                        // remote only
    std::string auth_header_name;
    std::string auth_header_env;  // env var holding the header value; never stored in the file

    friend bool operator==(const ProviderConfig&, const ProviderConfig&) = default;
};

struct TrainSection {
    std::string model = "TransE";
    std::size_t dim = 64;
    std::size_t epochs = 500;
    std::size_t batch_size = 128;
    double learning_rate = 0.05;
    double margin = 1.0;
    std::size_t negatives = 4;
    int norm = 2;
    std::string optimizer = "adagrad";
    std::size_t threads = 1;

    friend bool operator==(const TrainSection&, const TrainSection&) = default;
};

// Everything a run depends on. Paths are stored as written; relative paths
// resolve against the config file's directory when loaded from disk.
struct PipelineConfig {
    std::vector<ingest::SourceSpec> sources;
    double tau = 0.90;
    double tau_rel = 0.70;
    std::optional<double> noise_threshold;  // unset: no within-source collapsing
    double sigma = 1.0;
    bool inverted_gaussian = false;
    double delta_p = 0.1;
    double tau_accept = 0.5;
    std::size_t max_iterations = 10;
    std::string mode = "review";  // review | auto_accept
    std::size_t pair_cap = 10000;
    ProviderConfig provider;
    std::uint64_t seed = 0;
    bool drop_unresolved = false;
    std::optional<std::string> type_mappings;   // TSV: source, native, canonical
    std::optional<std::string> relation_table;  // TSV: source_label, unified_label
    std::optional<std::string> constraints;     // TSV: relation, head types, tail types
    std::optional<std::string> gold_alignments;
    std::optional<std::string> gold_edges;
    bool instrument = false;
    TrainSection train;

    // Throws ConfigError on out-of-range values.
    void validate() const;

    friend bool operator==(const PipelineConfig&, const PipelineConfig&) = default;
};

nlohmann::json config_to_json(const PipelineConfig& c);
// Unknown keys are rejected so typos do not silently fall back to defaults.
PipelineConfig config_from_json(const nlohmann::json& j);

// Reads a JSON config; relative paths are rebased onto the file's directory.
PipelineConfig load_config(const std::string& path);
void save_config(const PipelineConfig& c, const std::string& path);

// Explicit path, else $KGFUSE_CONFIG, else nullopt.
std::optional<std::string> resolve_config_path(const std::optional<std::string>& explicit_path);

// 16 hex digits of FNV-1a over the canonical JSON form.
std::string config_hash(const PipelineConfig& c);

std::unique_ptr<embed::EmbeddingProvider> make_provider(const PipelineConfig& c);
expand::ExpansionConfig expansion_config(const PipelineConfig& c);
linkpred::TrainConfig train_config(const PipelineConfig& c);

}  // namespace kgfuse
