#pragma once

#include <iosfwd>
#include <optional>
#include <string>

#include <json.hpp>

#include "kgfuse/graph.hpp"

namespace kgfuse {

nlohmann::json node_to_json(const Node& n);
nlohmann::json triple_to_json(const Triple& t);
nlohmann::json stats_to_json(const GraphStats& s);
Node node_from_json(const nlohmann::json& j);
Triple triple_from_json(const nlohmann::json& j);

// JSON Lines: an optional {"kind":"meta"} record, then every node, then every
// triple. Output order is deterministic (sorted ids / triple keys).
void write_graph_jsonl(const KnowledgeGraph& g, std::ostream& out,
                       const std::optional<std::string>& config_hash = std::nullopt);

// Accepts records in any order; triples are attached after all nodes are
// known, and a dangling triple raises IntegrityError.
KnowledgeGraph read_graph_jsonl(std::istream& in);

KnowledgeGraph load_graph_file(const std::string& path);
void save_graph_file(const KnowledgeGraph& g, const std::string& path,
                     const std::optional<std::string>& config_hash = std::nullopt);

// Seven-column edge TSV, same layout ingest::parse_edge_tsv reads.
void write_edge_tsv(const KnowledgeGraph& g, std::ostream& out,
                    const std::optional<std::string>& config_hash = std::nullopt);

}  // namespace kgfuse
