#pragma once

#include <map>
#include <tuple>
#include <string>
#include <utility>
#include <vector>

#include "kgfuse/align.hpp"
#include "kgfuse/embed.hpp"
#include "kgfuse/expand.hpp"
#include "kgfuse/graph.hpp"

namespace kgtest {

inline kgfuse::Node node(const std::string& id, const std::string& label, const std::string& type,
                         const std::string& source = "test") {
    return {id, label, kgfuse::NodeType{type}, {}, std::nullopt, {source}};
}

inline kgfuse::Triple triple(const std::string& h, const std::string& r, const std::string& t,
                             const std::string& source = "test") {
    return {h, kgfuse::RelationType{r}, t, kgfuse::Provenance::from_source(source), 1.0};
}

// Two 10-node sources. Seven cross-source pairs denote the same entity; five
// of them differ on the surface and are linked only by the alias table, one
// differs only in case, one only in punctuation. The remaining nodes are
// near misses (shared words, other types).
struct AlignmentFixture {
    std::vector<kgfuse::align::SourceGraph> sources;
    std::map<std::string, std::string> aliases;
    std::vector<std::pair<kgfuse::align::NodeRef, kgfuse::align::NodeRef>> gold;
};

inline AlignmentFixture alignment_fixture() {
    AlignmentFixture f;
    kgfuse::KnowledgeGraph l, r;
    const std::vector<std::tuple<std::string, std::string, std::string>> left = {
        {"L:APOE", "APOE", "Genes"},
        {"L:AD", "Alzheimer's disease", "Diseases"},
        {"L:BDNF", "BDNF", "Genes"},
        {"L:LTP", "long-term potentiation", "BiologicalPathways"},
        {"L:WM", "working memory", "CognitiveProcesses"},
        {"L:NMDAR", "NMDA receptor", "TherapeuticTargets"},
        {"L:PD", "Parkinson's disease", "Diseases"},
        {"L:ATT", "attention", "CognitiveProcesses"},
        {"L:DA", "dopamine signaling", "BiologicalPathways"},
        {"L:SNCA", "SNCA", "Genes"},
    };
    const std::vector<std::tuple<std::string, std::string, std::string>> right = {
        {"R:348", "apolipoprotein E", "Genes"},
        {"R:10652", "Alzheimer disease", "Diseases"},
        {"R:627", "brain-derived neurotrophic factor", "Genes"},
        {"R:LTP", "LTP", "BiologicalPathways"},
        {"R:WM", "Working Memory", "CognitiveProcesses"},
        {"R:2902", "NMDAR", "TherapeuticTargets"},
        {"R:14330", "Parkinson disease", "Diseases"},
        {"R:EM", "episodic memory", "CognitiveProcesses"},
        {"R:5HT", "serotonin signaling", "BiologicalPathways"},
        {"R:12858", "Huntington disease", "Diseases"},
    };
    for (const auto& [id, label, type] : left) l.add_node(node(id, label, type, "left"));
    for (const auto& [id, label, type] : right) r.add_node(node(id, label, type, "right"));
    l.add_triple(triple("L:APOE", "AssociatedWith", "L:AD", "left"));
    l.add_triple(triple("L:BDNF", "Regulates", "L:LTP", "left"));
    l.add_triple(triple("L:LTP", "InvolvedIn", "L:WM", "left"));
    l.add_triple(triple("L:SNCA", "Causes", "L:PD", "left"));
    l.add_triple(triple("L:DA", "InvolvedIn", "L:ATT", "left"));
    r.add_triple(triple("R:348", "Causes", "R:10652", "right"));
    r.add_triple(triple("R:627", "Regulates", "R:LTP", "right"));
    r.add_triple(triple("R:LTP", "InvolvedIn", "R:EM", "right"));
    r.add_triple(triple("R:2902", "TreatedBy", "R:10652", "right"));
    r.add_triple(triple("R:14330", "LinkedTo", "R:WM", "right"));
    f.sources = {{"left", std::move(l)}, {"right", std::move(r)}};
    f.aliases = {{"APOE", "apolipoprotein E"},
                 {"Alzheimer's disease", "Alzheimer disease"},
                 {"BDNF", "brain-derived neurotrophic factor"},
                 {"LTP", "long-term potentiation"},
                 {"NMDAR", "NMDA receptor"},
                 {"Parkinson's disease", "Parkinson disease"}};
    auto pair = [](const std::string& a, const std::string& b) {
        return std::make_pair(kgfuse::align::NodeRef{"left", a}, kgfuse::align::NodeRef{"right", b});
    };
    f.gold = {pair("L:APOE", "R:348"),  pair("L:AD", "R:10652"), pair("L:BDNF", "R:627"), pair("L:LTP", "R:LTP"),
              pair("L:WM", "R:WM"),     pair("L:NMDAR", "R:2902"), pair("L:PD", "R:14330")};
    return f;
}

// Five nodes and five edges; two copies make the identical-sources case.
inline kgfuse::KnowledgeGraph five_by_five(const std::string& source) {
    kgfuse::KnowledgeGraph g;
    g.add_node(node("g1", "APOE", "Genes", source));
    g.add_node(node("d1", "Alzheimer disease", "Diseases", source));
    g.add_node(node("c1", "memory", "CognitiveProcesses", source));
    g.add_node(node("p1", "synaptic plasticity", "BiologicalPathways", source));
    g.add_node(node("t1", "NMDA receptor", "TherapeuticTargets", source));
    g.add_triple(triple("g1", "AssociatedWith", "d1", source));
    g.add_triple(triple("d1", "LinkedTo", "c1", source));
    g.add_triple(triple("p1", "InvolvedIn", "c1", source));
    g.add_triple(triple("g1", "Regulates", "p1", source));
    g.add_triple(triple("t1", "TreatedBy", "d1", source));
    return g;
}

// Returns fixed (relation, probability) answers per ordered pair.
class ScriptedPredictor final : public kgfuse::expand::RelationPredictor {
public:
    void set(const std::string& h, const std::string& t, const std::string& r, double p) {
        answers_[{h, t}].push_back({kgfuse::RelationType{r}, p});
    }
    std::vector<kgfuse::expand::RelationScore> predict(const kgfuse::Node& h, const kgfuse::Node& t,
                                                       const kgfuse::KnowledgeGraph&) const override {
        auto it = answers_.find({h.id, t.id});
        return it == answers_.end() ? std::vector<kgfuse::expand::RelationScore>{} : it->second;
    }

private:
    std::map<std::pair<std::string, std::string>, std::vector<kgfuse::expand::RelationScore>> answers_;
};

// Three typed nodes with one edge and a predictor proposing three edges with
// probabilities 0.9, 0.8 and 0.7.
inline kgfuse::KnowledgeGraph review_graph() {
    kgfuse::KnowledgeGraph g;
    g.add_node(node("APOE", "APOE", "Genes"));
    g.add_node(node("AD", "Alzheimer disease", "Diseases"));
    g.add_node(node("MEM", "memory", "CognitiveProcesses"));
    g.add_triple(triple("AD", "LinkedTo", "MEM"));
    return g;
}

inline ScriptedPredictor review_predictor() {
    ScriptedPredictor p;
    p.set("APOE", "AD", "AssociatedWith", 0.9);
    p.set("APOE", "MEM", "Influences", 0.8);
    p.set("MEM", "AD", "AssociatedWith", 0.7);
    return p;
}

// Review-mode state with the three candidates admitted (ids 1, 2, 3).
inline kgfuse::expand::ExpansionState review_state(double tau = 0.5, double delta_p = 0.2) {
    kgfuse::expand::ExpansionConfig cfg;
    cfg.tau_accept = tau;
    cfg.delta_p = delta_p;
    cfg.mode = kgfuse::expand::IntegrationMode::review;
    auto s = kgfuse::expand::ExpansionState::start(review_graph(), cfg);
    const auto pred = review_predictor();
    const kgfuse::expand::AllPairs pairs;
    return kgfuse::expand::admit_candidates(s, kgfuse::expand::propose_candidates(s, pred, pairs));
}

}  // namespace kgtest
