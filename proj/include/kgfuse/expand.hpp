#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string_view>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "kgfuse/embed.hpp"
#include "kgfuse/graph.hpp"

namespace kgfuse::expand {

struct RelationScore {
    RelationType relation;
    double probability = 0.0;
};

// Proposes relations for a (head, tail) pair. Probabilities lie in [0, 1];
// output must be deterministic for a fixed configuration.
class RelationPredictor {
public:
    virtual ~RelationPredictor() = default;
    virtual std::vector<RelationScore> predict(const Node& head, const Node& tail,
                                               const KnowledgeGraph& context) const = 0;
};

// 1 - exp(-|v_h - v_t|^2 / (2 sigma^2)). Grows with embedding distance.
// Throws DimensionError on mismatched dims and ConfigError for sigma <= 0.
double gaussian_relation_prob(const embed::EmbeddingVector& head, const embed::EmbeddingVector& tail, double sigma);

// exp(-|v_h - v_t|^2 / (2 sigma^2)); the decreasing-with-distance variant.
double gaussian_affinity(const embed::EmbeddingVector& head, const embed::EmbeddingVector& tail, double sigma);

// Picks the relation label for a Gaussian candidate from the node-type pair.
class RelationAssigner {
public:
    RelationAssigner() = default;
    explicit RelationAssigner(RelationType fallback) : fallback_(std::move(fallback)) {}

    void set(const NodeType& head, const NodeType& tail, RelationType r) { table_[{head, tail}] = std::move(r); }
    const RelationType& assign(const NodeType& head, const NodeType& tail) const;

    // Type-pair defaults for the five canonical node types.
    static RelationAssigner canonical_defaults();

private:
    std::map<std::pair<NodeType, NodeType>, RelationType> table_;
    RelationType fallback_{"AssociatedWith"};
};

struct GaussianPredictorConfig {
    double sigma = 1.0;
    bool inverted = false;  // use gaussian_affinity instead
    RelationAssigner assigner = RelationAssigner::canonical_defaults();
};

class GaussianPredictor final : public RelationPredictor {
public:
    GaussianPredictor(const embed::EmbeddingProvider& provider, GaussianPredictorConfig cfg);

    std::vector<RelationScore> predict(const Node& head, const Node& tail,
                                       const KnowledgeGraph& context) const override;

private:
    const embed::EmbeddingProvider& provider_;
    GaussianPredictorConfig cfg_;
};

enum class CandidateStatus { pending, accepted, rejected, removed };
enum class Verdict { accept, reject };

std::string to_string(CandidateStatus s);
std::string to_string(Verdict v);
CandidateStatus parse_status(std::string_view s);
Verdict parse_verdict(std::string_view s);

struct FeedbackEntry {
    Verdict verdict = Verdict::reject;
    double delta_applied = 0.0;
    std::int64_t timestamp_ms = 0;

    friend bool operator==(const FeedbackEntry&, const FeedbackEntry&) = default;
};

using CandidateId = std::uint64_t;

struct CandidateEdge {
    CandidateId id = 0;
    Triple triple;
    double probability = 0.0;
    CandidateStatus status = CandidateStatus::pending;
    std::vector<FeedbackEntry> feedback;
    std::size_t iteration_born = 0;
    bool integrated = false;  // triple currently present in the snapshot

    friend bool operator==(const CandidateEdge&, const CandidateEdge&) = default;
};

enum class IntegrationMode { auto_accept, review };

struct ExpansionConfig {
    double tau_accept = 0.5;
    double delta_p = 0.1;
    std::size_t max_iterations = 10;
    IntegrationMode mode = IntegrationMode::review;
};

struct IterationRecord {
    std::size_t iteration = 0;
    std::size_t proposed = 0;
    std::size_t added = 0;
    std::size_t removed = 0;

    friend bool operator==(const IterationRecord&, const IterationRecord&) = default;
};

// G^(t) plus the candidate pool. Values are copied on update; the graph is
// an immutable shared snapshot replaced whenever its triples change.
struct ExpansionState {
    std::shared_ptr<const KnowledgeGraph> graph = std::make_shared<KnowledgeGraph>();
    std::size_t iteration = 0;
    std::vector<CandidateEdge> candidates;
    ExpansionConfig config;
    CandidateId next_id = 1;
    std::vector<IterationRecord> history;
    std::size_t proposed_since_step = 0;
    std::size_t removed_since_step = 0;

    static ExpansionState start(KnowledgeGraph g, ExpansionConfig cfg);

    const CandidateEdge& candidate(CandidateId id) const;
    std::map<CandidateStatus, std::size_t> status_counts() const;
};

// Enumerates ordered (head, tail) pairs to score in one iteration.
class PairSource {
public:
    virtual ~PairSource() = default;
    virtual std::vector<std::pair<std::string, std::string>> pairs(const KnowledgeGraph& g,
                                                                   std::size_t iteration) const = 0;
};

// Every ordered pair of distinct nodes. Quadratic; meant for small graphs.
class AllPairs final : public PairSource {
public:
    explicit AllPairs(bool cross_type_only = false) : cross_type_only_(cross_type_only) {}
    std::vector<std::pair<std::string, std::string>> pairs(const KnowledgeGraph& g, std::size_t) const override;

private:
    bool cross_type_only_;
};

// Cross-type pairs within two undirected hops, shuffled with a seed that
// varies per iteration, then truncated to `cap`.
class TwoHopPairs final : public PairSource {
public:
    explicit TwoHopPairs(std::size_t cap = 10000, std::uint64_t seed = 0) : cap_(cap), seed_(seed) {}
    std::vector<std::pair<std::string, std::string>> pairs(const KnowledgeGraph& g,
                                                           std::size_t iteration) const override;

private:
    std::size_t cap_;
    std::uint64_t seed_;
};

// Scores the enumerated pairs and returns candidates with probability >=
// tau_accept whose triple is neither in the graph nor already in the pool.
// Ids are left at 0; admit_candidates assigns them.
std::vector<CandidateEdge> propose_candidates(const ExpansionState& state, const RelationPredictor& predictor,
                                              const PairSource& pairs);

ExpansionState admit_candidates(ExpansionState state, std::vector<CandidateEdge> fresh);

// G^(t+1) = G^(t) + dG^(t). Review mode integrates accepted candidates only;
// auto-accept mode also integrates every pending candidate at or above
// tau_accept. Throws StateError once max_iterations is reached.
ExpansionState expand_step(ExpansionState state);

// Reject lowers the probability by delta_p (clamped at 0); falling below
// tau_accept marks the candidate removed and drops its triple from the
// returned snapshot. Accept pins the probability. Accepted and removed are
// terminal.
ExpansionState apply_feedback(ExpansionState state, CandidateId id, Verdict verdict, double delta_p,
                              std::int64_t timestamp_ms);
ExpansionState apply_feedback(ExpansionState state, CandidateId id, Verdict verdict, double delta_p);

// Propose, admit and step until an iteration adds nothing and proposes
// nothing, or the budget runs out.
ExpansionState run_expansion(ExpansionState state, const RelationPredictor& predictor, const PairSource& pairs);

// Predicted triples currently present in the snapshot.
std::vector<Triple> integrated_triples(const ExpansionState& state);

std::int64_t now_ms();

nlohmann::json candidate_to_json(const CandidateEdge& c);
CandidateEdge candidate_from_json(const nlohmann::json& j);
void write_candidate_log_jsonl(const ExpansionState& state, std::ostream& out,
                               const std::optional<std::string>& config_hash = std::nullopt);
std::vector<CandidateEdge> read_candidate_log_jsonl(std::istream& in);
nlohmann::json expansion_manifest(const ExpansionState& state);

}  // namespace kgfuse::expand
