#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "kgfuse/align.hpp"
#include "kgfuse/config.hpp"
#include "kgfuse/evaluate.hpp"
#include "kgfuse/expand.hpp"
#include "kgfuse/ingest.hpp"

namespace kgfuse {

inline constexpr const char* kVersion = "0.1.0";

// Built-in type mappings for the OBO namespaces of GO and DO plus the
// canonical types; used when the config names no mapping file.
align::TaxonomyMap default_type_mappings();
// Built-in relation synonyms; used when the config names no table.
align::RelationTable default_relation_table();

align::TaxonomyMap load_type_mappings(const PipelineConfig& c);
align::RelationTable load_relation_table(const PipelineConfig& c);
evaluate::ConstraintTable load_constraints(const PipelineConfig& c);

struct IngestedSource {
    align::SourceGraph graph;
    std::vector<ingest::RemovalEntry> removals;
};

// Throws ConfigError naming the first unreadable source and
// MissingInputError for a configured but absent gold file.
void check_inputs(const PipelineConfig& c);

std::vector<IngestedSource> ingest_sources(const PipelineConfig& c, const embed::EmbeddingProvider& provider);

struct MergeOutput {
    align::MergeResult merged;
    std::vector<align::SourceGraph> sources;
};

MergeOutput align_and_merge(const PipelineConfig& c, std::vector<align::SourceGraph> sources,
                            const embed::EmbeddingProvider& provider);

expand::ExpansionState run_expand(const PipelineConfig& c, const KnowledgeGraph& merged,
                                  const embed::EmbeddingProvider& provider);

evaluate::MetricReport run_evaluate(const PipelineConfig& c, const KnowledgeGraph& graph,
                                    std::span<const align::SourceGraph> sources, const align::Lineage& lineage,
                                    const expand::ExpansionState* expansion, evaluate::ConsistencyReport* consistency,
                                    const evaluate::RunManifest& manifest);

struct PipelineResult {
    std::vector<IngestedSource> sources;
    align::MergeResult merged;
    expand::ExpansionState expansion;
    KnowledgeGraph final_graph;
    evaluate::ConsistencyReport consistency;
    evaluate::MetricReport metrics;
    evaluate::RunManifest manifest;
    std::string config_hash;
};

// ingest -> align/merge -> expand -> evaluate. Every input is checked before
// any work starts and files are written only after all stages succeed.
PipelineResult run_pipeline(const PipelineConfig& c);

// Files written by write_outputs, relative to the output directory.
std::vector<std::string> output_files();
void write_outputs(const PipelineResult& r, const PipelineConfig& c, const std::string& out_dir);

nlohmann::json run_manifest_json(const evaluate::RunManifest& m, const std::string& config_hash, std::uint64_t seed);

}  // namespace kgfuse
