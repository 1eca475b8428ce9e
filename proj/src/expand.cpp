#include "kgfuse/expand.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <istream>
#include <ostream>
#include <random>
#include <set>

#include "kgfuse/errors.hpp"
#include "kgfuse/graph_io.hpp"
#include "parallel.hpp"

namespace kgfuse::expand {

namespace {

double squared_distance(const embed::EmbeddingVector& a, const embed::EmbeddingVector& b) {
    if (a.dim() != b.dim())
        throw DimensionError("embedding dims differ: " + std::to_string(a.dim()) + " vs " + std::to_string(b.dim()));
    double s = 0.0;
    for (std::size_t i = 0; i < a.dim(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

void check_sigma(double sigma) {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ConfigError("sigma must be a positive finite number");
}

// Subtractive updates drift by an ulp (0.7 - 0.2 != 0.5 in binary); snap to a
// fine grid so boundary comparisons against tau behave as written.
double snap(double p) { return std::round(p * 1e12) / 1e12; }

CandidateEdge& find_candidate(ExpansionState& s, CandidateId id) {
    for (auto& c : s.candidates)
        if (c.id == id) return c;
    throw LookupError("unknown candidate id " + std::to_string(id));
}

}  // namespace

double gaussian_relation_prob(const embed::EmbeddingVector& head, const embed::EmbeddingVector& tail, double sigma) {
    check_sigma(sigma);
    const double d2 = squared_distance(head, tail);
    return std::clamp(-std::expm1(-d2 / (2.0 * sigma * sigma)), 0.0, 1.0);
}

double gaussian_affinity(const embed::EmbeddingVector& head, const embed::EmbeddingVector& tail, double sigma) {
    check_sigma(sigma);
    const double d2 = squared_distance(head, tail);
    return std::clamp(std::exp(-d2 / (2.0 * sigma * sigma)), 0.0, 1.0);
}

const RelationType& RelationAssigner::assign(const NodeType& head, const NodeType& tail) const {
    auto it = table_.find({head, tail});
    return it == table_.end() ? fallback_ : it->second;
}

RelationAssigner RelationAssigner::canonical_defaults() {
    RelationAssigner a;
    const NodeType genes{"Genes"}, diseases{"Diseases"}, cognitive{"CognitiveProcesses"},
        pathways{"BiologicalPathways"}, targets{"TherapeuticTargets"};
    a.set(genes, diseases, RelationType{"AssociatedWith"});
    a.set(genes, cognitive, RelationType{"Influences"});
    a.set(genes, pathways, RelationType{"Regulates"});
    a.set(diseases, cognitive, RelationType{"LinkedTo"});
    a.set(pathways, cognitive, RelationType{"InvolvedIn"});
    a.set(pathways, diseases, RelationType{"InvolvedIn"});
    a.set(targets, diseases, RelationType{"Influences"});
    return a;
}

GaussianPredictor::GaussianPredictor(const embed::EmbeddingProvider& provider, GaussianPredictorConfig cfg)
    : provider_(provider), cfg_(std::move(cfg)) {
    check_sigma(cfg_.sigma);
}

std::vector<RelationScore> GaussianPredictor::predict(const Node& head, const Node& tail,
                                                      const KnowledgeGraph&) const {
    const auto vh = provider_.embed(head.label.empty() ? head.id : head.label);
    const auto vt = provider_.embed(tail.label.empty() ? tail.id : tail.label);
    const double p = cfg_.inverted ? gaussian_affinity(vh, vt, cfg_.sigma) : gaussian_relation_prob(vh, vt, cfg_.sigma);
    return {{cfg_.assigner.assign(head.type, tail.type), p}};
}

std::string to_string(CandidateStatus s) {
    switch (s) {
        case CandidateStatus::pending: return "pending";
        case CandidateStatus::accepted: return "accepted";
        case CandidateStatus::rejected: return "rejected";
        case CandidateStatus::removed: return "removed";
    }
    return "pending";
}

std::string to_string(Verdict v) { return v == Verdict::accept ? "accept" : "reject"; }

CandidateStatus parse_status(std::string_view s) {
    if (s == "pending") return CandidateStatus::pending;
    if (s == "accepted") return CandidateStatus::accepted;
    if (s == "rejected") return CandidateStatus::rejected;
    if (s == "removed") return CandidateStatus::removed;
    throw ParseError("unknown candidate status '" + std::string(s) + "'");
}

Verdict parse_verdict(std::string_view s) {
    if (s == "accept") return Verdict::accept;
    if (s == "reject") return Verdict::reject;
    throw ParseError("unknown verdict '" + std::string(s) + "'");
}

ExpansionState ExpansionState::start(KnowledgeGraph g, ExpansionConfig cfg) {
    if (cfg.tau_accept < 0.0 || cfg.tau_accept > 1.0 || !std::isfinite(cfg.tau_accept))
        throw ConfigError("tau_accept must lie in [0, 1]");
    if (cfg.delta_p < 0.0 || !std::isfinite(cfg.delta_p)) throw ConfigError("delta_p must be >= 0");
    ExpansionState s;
    s.graph = std::make_shared<const KnowledgeGraph>(std::move(g));
    s.config = cfg;
    return s;
}

const CandidateEdge& ExpansionState::candidate(CandidateId id) const {
    for (const auto& c : candidates)
        if (c.id == id) return c;
    throw LookupError("unknown candidate id " + std::to_string(id));
}

std::map<CandidateStatus, std::size_t> ExpansionState::status_counts() const {
    std::map<CandidateStatus, std::size_t> out{{CandidateStatus::pending, 0},
                                               {CandidateStatus::accepted, 0},
                                               {CandidateStatus::rejected, 0},
                                               {CandidateStatus::removed, 0}};
    for (const auto& c : candidates) ++out[c.status];
    return out;
}

std::vector<std::pair<std::string, std::string>> AllPairs::pairs(const KnowledgeGraph& g, std::size_t) const {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& [h, hn] : g.nodes())
        for (const auto& [t, tn] : g.nodes()) {
            if (h == t) continue;
            if (cross_type_only_ && hn.type == tn.type) continue;
            out.emplace_back(h, t);
        }
    return out;
}

std::vector<std::pair<std::string, std::string>> TwoHopPairs::pairs(const KnowledgeGraph& g,
                                                                    std::size_t iteration) const {
    std::set<std::pair<std::string, std::string>> seen;
    for (const auto& [h, hn] : g.nodes()) {
        std::set<std::string> reach;
        for (const auto& n1 : g.neighbors(h)) {
            reach.insert(n1);
            for (const auto& n2 : g.neighbors(n1)) reach.insert(n2);
        }
        reach.erase(h);
        for (const auto& t : reach)
            if (g.node(t).type != hn.type) seen.emplace(h, t);
    }
    std::vector<std::pair<std::string, std::string>> out(seen.begin(), seen.end());
    std::mt19937_64 rng(seed_ ^ (0x9e3779b97f4a7c15ULL * (iteration + 1)));
    // Fisher-Yates by hand: std::shuffle's draw pattern is implementation-defined.
    for (std::size_t i = out.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng() % i);
        std::swap(out[i - 1], out[j]);
    }
    if (out.size() > cap_) out.resize(cap_);
    return out;
}

std::vector<CandidateEdge> propose_candidates(const ExpansionState& state, const RelationPredictor& predictor,
                                              const PairSource& pair_source) {
    const KnowledgeGraph& g = *state.graph;
    const auto pairs = pair_source.pairs(g, state.iteration);
    std::set<TripleKey> pooled;
    for (const auto& c : state.candidates) pooled.insert(c.triple.key());

    struct Scored {
        std::size_t pair;
        CandidateEdge edge;
    };
    auto scored = detail::parallel_collect<Scored>(pairs.size(), [&](std::size_t i, std::vector<Scored>& out) {
        const auto& [h, t] = pairs[i];
        if (h == t) return;
        const Node& hn = g.node(h);
        const Node& tn = g.node(t);
        for (const auto& rs : predictor.predict(hn, tn, g)) {
            if (!(rs.probability >= state.config.tau_accept)) continue;
            TripleKey key{h, rs.relation, t};
            if (g.contains(key) || pooled.count(key)) continue;
            CandidateEdge c;
            c.triple = Triple{h, rs.relation, t, Provenance::predicted(), std::clamp(rs.probability, 0.0, 1.0)};
            c.probability = std::clamp(rs.probability, 0.0, 1.0);
            c.iteration_born = state.iteration;
            out.push_back({i, std::move(c)});
        }
    });
    std::stable_sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
        return std::tie(a.pair, a.edge.triple.relation) < std::tie(b.pair, b.edge.triple.relation);
    });
    std::vector<CandidateEdge> out;
    std::set<TripleKey> emitted;
    for (auto& s : scored)
        if (emitted.insert(s.edge.triple.key()).second) out.push_back(std::move(s.edge));
    return out;
}

ExpansionState admit_candidates(ExpansionState state, std::vector<CandidateEdge> fresh) {
    std::set<TripleKey> pooled;
    for (const auto& c : state.candidates) pooled.insert(c.triple.key());
    for (auto& c : fresh) {
        if (state.graph->contains(c.triple.key()) || !pooled.insert(c.triple.key()).second) continue;
        c.id = state.next_id++;
        state.candidates.push_back(std::move(c));
        ++state.proposed_since_step;
    }
    return state;
}

ExpansionState expand_step(ExpansionState state) {
    if (state.iteration >= state.config.max_iterations)
        throw StateError("iteration budget exhausted (" + std::to_string(state.config.max_iterations) + ")");
    auto next = std::make_shared<KnowledgeGraph>(*state.graph);
    std::size_t added = 0;
    for (auto& c : state.candidates) {
        if (c.integrated || c.status == CandidateStatus::removed) continue;
        const bool take = c.status == CandidateStatus::accepted ||
                          (state.config.mode == IntegrationMode::auto_accept && c.status == CandidateStatus::pending &&
                           c.probability >= state.config.tau_accept);
        if (!take) continue;
        Triple t = c.triple;
        t.provenance = Provenance::predicted();
        t.confidence = c.probability;
        if (!next->contains(t.key())) ++added;
        next->add_triple(std::move(t));
        c.integrated = true;
    }
    state.history.push_back({state.iteration, state.proposed_since_step, added, state.removed_since_step});
    state.proposed_since_step = 0;
    state.removed_since_step = 0;
    state.graph = std::move(next);
    ++state.iteration;
    return state;
}

ExpansionState apply_feedback(ExpansionState state, CandidateId id, Verdict verdict, double delta_p,
                              std::int64_t timestamp_ms) {
    if (!(delta_p >= 0.0) || !std::isfinite(delta_p)) throw ConfigError("delta_p must be >= 0");
    CandidateEdge& c = find_candidate(state, id);
    if (c.status == CandidateStatus::accepted || c.status == CandidateStatus::removed)
        throw StateError("candidate " + std::to_string(id) + " is already " + to_string(c.status));
    if (verdict == Verdict::accept) {
        c.status = CandidateStatus::accepted;
        c.feedback.push_back({verdict, 0.0, timestamp_ms});
        return state;
    }
    c.probability = snap(std::max(0.0, c.probability - delta_p));
    c.triple.confidence = c.probability;
    c.feedback.push_back({verdict, delta_p, timestamp_ms});
    if (c.probability < state.config.tau_accept) {
        c.status = CandidateStatus::removed;
        ++state.removed_since_step;
        if (c.integrated) {
            auto next = std::make_shared<KnowledgeGraph>(*state.graph);
            next->remove_triple(c.triple.key());
            state.graph = std::move(next);
            c.integrated = false;
        }
    } else if (c.integrated) {
        auto next = std::make_shared<KnowledgeGraph>(*state.graph);
        next->remove_triple(c.triple.key());
        next->add_triple(c.triple);
        state.graph = std::move(next);
    }
    return state;
}

ExpansionState apply_feedback(ExpansionState state, CandidateId id, Verdict verdict, double delta_p) {
    return apply_feedback(std::move(state), id, verdict, delta_p, now_ms());
}

ExpansionState run_expansion(ExpansionState state, const RelationPredictor& predictor, const PairSource& pairs) {
    while (state.iteration < state.config.max_iterations) {
        auto fresh = propose_candidates(state, predictor, pairs);
        const bool proposed = !fresh.empty();
        state = admit_candidates(std::move(state), std::move(fresh));
        state = expand_step(std::move(state));
        if (!proposed && state.history.back().added == 0) break;
    }
    return state;
}

std::vector<Triple> integrated_triples(const ExpansionState& state) {
    std::vector<Triple> out;
    for (const auto& c : state.candidates)
        if (c.integrated)
            if (const Triple* t = state.graph->find_triple(c.triple.key())) out.push_back(*t);
    return out;
}

std::int64_t now_ms() {
    using namespace std::chrono;
    return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

nlohmann::json candidate_to_json(const CandidateEdge& c) {
    nlohmann::json fb = nlohmann::json::array();
    for (const auto& f : c.feedback)
        fb.push_back({{"verdict", to_string(f.verdict)}, {"delta", f.delta_applied}, {"timestamp", f.timestamp_ms}});
    return {{"kind", "candidate"},
            {"id", c.id},
            {"triple", triple_to_json(c.triple)},
            {"probability", c.probability},
            {"status", to_string(c.status)},
            {"feedback", fb},
            {"iteration_born", c.iteration_born},
            {"integrated", c.integrated}};
}

CandidateEdge candidate_from_json(const nlohmann::json& j) {
    try {
        CandidateEdge c;
        c.id = j.at("id").get<CandidateId>();
        c.triple = triple_from_json(j.at("triple"));
        c.probability = j.at("probability").get<double>();
        c.status = parse_status(j.at("status").get<std::string>());
        for (const auto& f : j.value("feedback", nlohmann::json::array()))
            c.feedback.push_back({parse_verdict(f.at("verdict").get<std::string>()), f.at("delta").get<double>(),
                                  f.at("timestamp").get<std::int64_t>()});
        c.iteration_born = j.value("iteration_born", std::size_t{0});
        c.integrated = j.value("integrated", false);
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("bad candidate record: ") + e.what());
    }
}

void write_candidate_log_jsonl(const ExpansionState& state, std::ostream& out,
                               const std::optional<std::string>& config_hash) {
    if (config_hash) out << nlohmann::json{{"kind", "meta"}, {"config_hash", *config_hash}}.dump() << '\n';
    for (const auto& c : state.candidates) out << candidate_to_json(c).dump() << '\n';
}

std::vector<CandidateEdge> read_candidate_log_jsonl(std::istream& in) {
    std::vector<CandidateEdge> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(e.what(), lineno);
        }
        if (j.value("kind", "") != "candidate") continue;
        out.push_back(candidate_from_json(j));
    }
    return out;
}

nlohmann::json expansion_manifest(const ExpansionState& state) {
    nlohmann::json iters = nlohmann::json::array();
    for (const auto& r : state.history)
        iters.push_back({{"iteration", r.iteration}, {"proposed", r.proposed}, {"added", r.added}, {"removed", r.removed}});
    nlohmann::json counts = nlohmann::json::object();
    for (const auto& [s, n] : state.status_counts()) counts[to_string(s)] = n;
    return {{"iterations", state.iteration},
            {"history", iters},
            {"candidates", counts},
            {"config",
             {{"tau_accept", state.config.tau_accept},
              {"delta_p", state.config.delta_p},
              {"max_iterations", state.config.max_iterations},
              {"mode", state.config.mode == IntegrationMode::review ? "review" : "auto_accept"}}},
            {"graph", stats_to_json(graph_stats(*state.graph))}};
}

}  // namespace kgfuse::expand
