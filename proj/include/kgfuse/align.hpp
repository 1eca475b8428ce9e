#pragma once

#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "kgfuse/embed.hpp"
#include "kgfuse/graph.hpp"

namespace kgfuse::align {

struct SourceGraph {
    std::string name;
    KnowledgeGraph graph;
};

struct NodeRef {
    std::string source;
    std::string id;

    friend auto operator<=>(const NodeRef&, const NodeRef&) = default;
    friend bool operator==(const NodeRef&, const NodeRef&) = default;
};

struct AlignmentDecision {
    NodeRef left;
    NodeRef right;
    double score = 0.0;
    std::string merged_into;

    friend bool operator==(const AlignmentDecision&, const AlignmentDecision&) = default;
};

// Per-source mapping of native node types onto the five canonical types.
// Canonical labels map to themselves; source "*" acts as a fallback table.
class TaxonomyMap {
public:
    void set(const std::string& source, const std::string& native, NodeType canonical);

    // Throws ConfigError for an unmapped, non-canonical type.
    NodeType map(const std::string& source, const NodeType& native) const;

    const std::map<std::string, std::map<std::string, NodeType>>& tables() const noexcept { return tables_; }

    // TSV rows: source, native_type, canonical_type.
    static TaxonomyMap load_tsv(std::istream& in);

private:
    std::map<std::string, std::map<std::string, NodeType>> tables_;
};

// Cross-source, same-(mapped)-type node pairs whose best label/alias cosine
// similarity is >= tau. Decisions are grouped into connected components whose
// canonical id is the smallest member id. A tau above 1 admits nothing.
std::vector<AlignmentDecision> align_nodes(std::span<const SourceGraph> graphs,
                                           const embed::EmbeddingProvider& provider, double tau,
                                           const TaxonomyMap& taxonomy);

enum class MappingOrigin { static_table, predictor };

struct RelationMapping {
    std::string source_label;
    RelationType unified_label;
    double score = 0.0;
    MappingOrigin origin = MappingOrigin::static_table;

    friend bool operator==(const RelationMapping&, const RelationMapping&) = default;
};

// Scores a free-form relation label against each canonical relation.
class RelationLabelScorer {
public:
    virtual ~RelationLabelScorer() = default;
    virtual std::vector<double> score(std::string_view label, std::span<const RelationType> canonical) const = 0;
};

// Cosine similarity between the label and the humanised canonical name.
class EmbeddingLabelScorer final : public RelationLabelScorer {
public:
    explicit EmbeddingLabelScorer(const embed::EmbeddingProvider& provider) : provider_(provider) {}
    std::vector<double> score(std::string_view label, std::span<const RelationType> canonical) const override;

private:
    const embed::EmbeddingProvider& provider_;
};

using RelationTable = std::map<std::string, RelationType>;  // normalised source label -> canonical

// Two-column TSV (source_label, unified_label); an optional header and '#'
// comments are skipped. Throws ConfigError for a non-canonical target.
RelationTable load_relation_table(std::istream& in);

// Static table first, then identity for canonical labels, then the scorer's
// argmax if it reaches tau_rel, else AssociatedWith.
std::vector<RelationMapping> unify_relations(const std::set<std::string>& labels, const RelationLabelScorer& scorer,
                                             const RelationTable& static_table, double tau_rel);

struct SourceTripleRef {
    std::string source;
    TripleKey key;

    friend auto operator<=>(const SourceTripleRef&, const SourceTripleRef&) = default;
    friend bool operator==(const SourceTripleRef&, const SourceTripleRef&) = default;
};

// Which source elements each merged element came from.
struct Lineage {
    std::map<std::string, std::vector<NodeRef>> nodes;
    std::map<TripleKey, std::vector<SourceTripleRef>> triples;
};

struct MergeReport {
    std::vector<AlignmentDecision> decisions;
    std::vector<RelationMapping> mappings;
    std::vector<Triple> delta_edges;
    double tau = 0.0;
    Lineage lineage;
};

struct MergeResult {
    KnowledgeGraph graph;
    MergeReport report;
};

// Union of the sources with aligned components collapsed to their canonical
// ids, node types mapped through `taxonomy` and relations through
// `mappings`. delta_edges holds merged triples whose (head, tail) pair is
// adjacent in no single source after id rewriting. The result does not
// depend on the order of `graphs`.
MergeResult merge_graphs(std::span<const SourceGraph> graphs, const std::vector<AlignmentDecision>& decisions,
                         const std::vector<RelationMapping>& mappings, const TaxonomyMap& taxonomy, double tau);

// Records integrated predicted edges in the report's delta.
void append_predicted_edges(MergeReport& report, const std::vector<Triple>& predicted);

nlohmann::json decision_to_json(const AlignmentDecision& d);
nlohmann::json mapping_to_json(const RelationMapping& m);
std::string to_string(MappingOrigin o);

void write_merge_report_jsonl(const MergeReport& report, std::ostream& out,
                              const std::optional<std::string>& config_hash = std::nullopt);
MergeReport read_merge_report_jsonl(std::istream& in);

}  // namespace kgfuse::align
