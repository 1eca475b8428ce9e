#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "kgfuse/graph.hpp"

namespace kgfuse::linkpred {

struct IdTriple {
    std::uint32_t h = 0;
    std::uint32_t r = 0;
    std::uint32_t t = 0;

    friend auto operator<=>(const IdTriple&, const IdTriple&) = default;
    friend bool operator==(const IdTriple&, const IdTriple&) = default;
};

class TripleDataset {
public:
    std::vector<std::string> entities;
    std::vector<std::string> relations;
    std::vector<IdTriple> train;
    std::vector<IdTriple> valid;
    std::vector<IdTriple> test;

    std::uint32_t entity_id(std::string_view name) const;  // throws LookupError
    std::uint32_t relation_id(std::string_view name) const;
    std::uint32_t intern_entity(const std::string& name);
    std::uint32_t intern_relation(const std::string& name);

    // Throws IntegrityError if the splits overlap or an index is out of range.
    void validate() const;

    // Three TSV streams with columns head, relation, tail.
    static TripleDataset from_tsv(std::istream& train, std::istream& valid, std::istream& test);
    static TripleDataset from_tsv_files(const std::string& train, const std::string& valid, const std::string& test);

    // Seeded shuffle of the graph's triples split by the given fractions.
    static TripleDataset from_graph(const KnowledgeGraph& g, double valid_fraction = 0.1, double test_fraction = 0.1,
                                    std::uint64_t seed = 0);

    // `pairs` entity pairs (a_k, b_k) joined by r0: a_k -> b_k and
    // r1: b_k -> a_k, so every pair forms a two-relation cycle. Valid and test
    // each take one direction from distinct pairs (10% of the triples), so the
    // reverse of every held-out triple stays in train.
    static TripleDataset synthetic_pair_cycles(std::size_t pairs = 25, std::uint64_t seed = 0);

private:
    std::map<std::string, std::uint32_t, std::less<>> entity_index_;
    std::map<std::string, std::uint32_t, std::less<>> relation_index_;
};

enum class ModelKind { TransE, RotatE, DistMult, ComplEx };
std::string to_string(ModelKind k);
ModelKind parse_model_kind(std::string_view s);

// Parameters are stored row-major. TransE and DistMult use d reals per row;
// ComplEx stores d real parts followed by d imaginary parts for both entities
// and relations; RotatE stores complex entities the same way and d phases per
// relation, so every relation entry has modulus 1 by construction.
struct KGEModel {
    ModelKind kind = ModelKind::TransE;
    std::size_t dim = 0;
    int norm = 2;  // TransE distance norm, 1 or 2
    std::size_t num_entities = 0;
    std::size_t num_relations = 0;
    std::vector<double> entity;
    std::vector<double> relation;
    std::vector<std::string> entity_names;
    std::vector<std::string> relation_names;

    std::size_t entity_width() const;
    std::size_t relation_width() const;
    const double* e(std::size_t i) const { return entity.data() + i * entity_width(); }
    const double* r(std::size_t i) const { return relation.data() + i * relation_width(); }
    double* e(std::size_t i) { return entity.data() + i * entity_width(); }
    double* r(std::size_t i) { return relation.data() + i * relation_width(); }

    friend bool operator==(const KGEModel&, const KGEModel&) = default;
};

// Higher is more plausible for every kind:
//   TransE   -|e_h + e_r - e_t|_p
//   DistMult sum(e_h * e_r * e_t)
//   ComplEx  Re(sum(e_h * e_r * conj(e_t)))
//   RotatE   -|e_h o e_r - e_t|_2 with e_r = exp(i * phase)
// Throws LookupError on an out-of-range index.
double score_triple(const KGEModel& m, std::size_t h, std::size_t r, std::size_t t);

enum class Optimizer { sgd, adagrad };

struct TrainConfig {
    std::size_t dim = 64;
    std::size_t epochs = 500;
    std::size_t batch_size = 128;
    double learning_rate = 0.05;
    double margin = 1.0;
    std::size_t negatives = 4;
    std::uint64_t seed = 0;
    int norm = 2;
    double l2 = 0.0;  // weight decay for the bilinear models
    Optimizer optimizer = Optimizer::adagrad;
    // 1 gives bit-identical parameters for a fixed seed. Larger values split
    // each batch across threads; results then depend on the thread count.
    std::size_t threads = 1;
};

struct TrainResult {
    KGEModel model;
    std::vector<double> epoch_loss;  // mean loss per positive, one per epoch
};

// Seeded initialisation only; what train() returns for epochs = 0.
KGEModel init_model(const TripleDataset& ds, ModelKind kind, const TrainConfig& cfg);

// Throws TrainingError on an empty train split or a non-finite loss, and
// ConfigError on invalid settings.
TrainResult train(const TripleDataset& ds, ModelKind kind, const TrainConfig& cfg);

enum class Setting { raw, filtered };
std::string to_string(Setting s);

enum class Slot { head, tail };

class KnownTriples {
public:
    explicit KnownTriples(const TripleDataset& ds);
    bool contains(std::uint32_t h, std::uint32_t r, std::uint32_t t) const;

private:
    std::vector<std::uint64_t> keys_;  // sorted
    std::uint64_t ne_ = 0;
    std::uint64_t nr_ = 0;
};

// 1 + number of eligible candidates scoring at least as high as the true
// entity (ties count against it). Filtered drops candidates that form a
// known triple other than the query's own.
std::size_t rank_query(const KGEModel& m, const IdTriple& truth, Slot missing, Setting setting,
                       const KnownTriples* known);
std::size_t rank_from_scores(const std::vector<double>& scores, std::size_t truth,
                             const std::vector<bool>* excluded = nullptr);

struct RankingReport {
    Setting setting = Setting::filtered;
    std::vector<std::size_t> ranks;
    double mr = 0.0;
    double mrr = 0.0;
    std::map<std::size_t, double> hits;
    std::map<std::size_t, double> p_at_k_literal;  // mean of (rank <= K) / K
};

// Throws Error on empty input or a rank of 0.
RankingReport evaluate_ranking(const std::vector<std::size_t>& ranks, const std::vector<std::size_t>& ks = {1, 3, 10});

// Tail then head query for every triple in `split`, in split order.
RankingReport evaluate_model(const KGEModel& m, const TripleDataset& ds, const std::vector<IdTriple>& split,
                             Setting setting, const std::vector<std::size_t>& ks = {1, 3, 10});

nlohmann::json ranking_report_to_json(const RankingReport& r, ModelKind kind, bool include_ranks = true);

nlohmann::json model_to_json(const KGEModel& m);
KGEModel model_from_json(const nlohmann::json& j);
void save_model(const KGEModel& m, const std::string& path,
                const std::optional<std::string>& config_hash = std::nullopt);
KGEModel load_model(const std::string& path);

}  // namespace kgfuse::linkpred
