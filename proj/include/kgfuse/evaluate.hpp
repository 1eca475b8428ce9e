#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "kgfuse/align.hpp"
#include "kgfuse/graph.hpp"

namespace kgfuse::evaluate {

struct ConfusionCounts {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;

    friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

struct PrecisionRecall {
    ConfusionCounts counts;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    bool zero_denominator = false;  // some ratio was 0/0 and reported as 0
};

PrecisionRecall precision_recall_f1(const ConfusionCounts& c);

template <typename T, typename Cmp>
PrecisionRecall precision_recall_f1(const std::set<T, Cmp>& predicted, const std::set<T, Cmp>& gold) {
    ConfusionCounts c;
    for (const auto& x : predicted) (gold.count(x) ? c.tp : c.fp)++;
    for (const auto& x : gold)
        if (!predicted.count(x)) ++c.fn;
    return precision_recall_f1(c);
}

// An alignment is an unordered pair of source-qualified node refs, stored
// with the smaller ref first.
using AlignmentPair = std::pair<align::NodeRef, align::NodeRef>;
AlignmentPair make_alignment_pair(align::NodeRef a, align::NodeRef b);

// Every cross-source pair of refs that landed in the same merged node.
std::set<AlignmentPair> predicted_alignments(const align::Lineage& lineage);

// Columns: left_source, left_id, right_source, right_id.
std::set<AlignmentPair> load_gold_alignments(std::istream& in);
// Columns: head, relation, tail. Relations are canonicalised when possible.
std::set<TripleKey> load_gold_edges(std::istream& in);

std::set<TripleKey> triple_keys(const KnowledgeGraph& g);

// (merged nodes + merged edges tracing to a source element) divided by the
// summed node and edge counts of the sources. Duplicates across sources
// count once in the numerator and every time in the denominator.
double coverage(const KnowledgeGraph& merged, std::span<const align::SourceGraph> sources,
                const align::Lineage& lineage);

// Same numerator over the number of distinct source node ids and triple keys.
// Not the published formula; reported alongside it.
double coverage_union(const KnowledgeGraph& merged, std::span<const align::SourceGraph> sources,
                      const align::Lineage& lineage);

// Predicted triples over all triples; 0 for an edgeless graph.
double novelty_score(const KnowledgeGraph& merged);

struct RelationConstraint {
    std::set<NodeType> heads;  // empty means any
    std::set<NodeType> tails;
};
using ConstraintTable = std::map<RelationType, RelationConstraint>;

// Domain/range defaults for the seven canonical relations.
ConstraintTable default_constraints();
// Columns: relation, head types, tail types. Type lists are comma separated;
// "*" allows any type.
ConstraintTable load_constraints_tsv(std::istream& in);

enum class Check { referential, relation_taxonomy, domain_range };
std::string to_string(Check c);

struct Violation {
    Triple triple;
    Check check = Check::referential;
    std::string detail;
};

struct ConsistencyReport {
    double score = 1.0;
    std::size_t checks = 0;
    std::vector<Violation> violations;
};

// Three checks per triple: endpoints resolve, relation is canonical, and the
// endpoint types satisfy the relation's constraint. Relations missing from
// the table pass the domain/range check.
ConsistencyReport consistency_check(const KnowledgeGraph& g, const ConstraintTable& constraints);
void write_violations_tsv(const ConsistencyReport& r, std::ostream& out);

// Wall-clock stage timings collected by the pipeline when instrumentation is
// on. Off by default so repeated runs write identical reports.
struct RunManifest {
    bool instrumented = false;
    std::vector<std::pair<std::string, double>> stages;  // name, seconds
    std::optional<std::uint64_t> peak_memory_bytes;
};

class StageTimer {
public:
    StageTimer(RunManifest& m, std::string stage);
    ~StageTimer();
    StageTimer(const StageTimer&) = delete;
    StageTimer& operator=(const StageTimer&) = delete;

private:
    RunManifest& m_;
    std::string stage_;
    std::int64_t start_ns_;
};

// Peak resident set size of this process, or nullopt where unavailable.
std::optional<std::uint64_t> peak_rss_bytes();

struct EfficiencyReport {
    bool measured = false;
    std::vector<std::pair<std::string, double>> timings;
    std::optional<std::uint64_t> peak_memory_bytes;
};
EfficiencyReport efficiency_report(const RunManifest& m);

struct MetricReport {
    std::optional<PrecisionRecall> alignment;
    std::optional<PrecisionRecall> edges;
    double coverage = 0.0;
    double coverage_union = 0.0;
    double novelty = 0.0;
    double consistency = 0.0;
    std::optional<double> expert_validation;  // accepted / reviewed
    EfficiencyReport efficiency;
};

// Rows keyed by the published metric names, values as percentages.
nlohmann::json metric_report_to_json(const MetricReport& r, const std::optional<std::string>& config_hash = std::nullopt);

}  // namespace kgfuse::evaluate
