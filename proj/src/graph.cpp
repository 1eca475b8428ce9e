#include "kgfuse/graph.hpp"

#include <algorithm>

#include "kgfuse/errors.hpp"

namespace kgfuse {

std::string Provenance::to_string() const {
    switch (kind) {
        case Kind::source: return "source:" + source;
        case Kind::merged: return "merged";
        case Kind::predicted: return "predicted";
    }
    return {};
}

Provenance Provenance::parse(std::string_view text) {
    if (text == "merged") return merged();
    if (text == "predicted") return predicted();
    constexpr std::string_view prefix = "source:";
    if (text.substr(0, prefix.size()) == prefix && text.size() > prefix.size()) {
        return from_source(std::string(text.substr(prefix.size())));
    }
    throw Error("unknown provenance '" + std::string(text) + "'");
}

void KnowledgeGraph::add_node(Node n) {
    if (n.id.empty()) throw Error("node id must not be empty");
    n.aliases.erase(std::string{});

    auto it = nodes_.find(n.id);
    if (it == nodes_.end()) {
        auto id = n.id;
        nodes_.emplace(std::move(id), std::move(n));
        return;
    }
    Node& cur = it->second;
    if (cur.type != n.type) {
        throw TypeConflictError("node '" + n.id + "' already has type '" + cur.type.str() +
                                "', cannot re-add as '" + n.type.str() + "'");
    }
    if (cur.label.empty()) cur.label = std::move(n.label);
    cur.aliases.merge(n.aliases);
    cur.sources.merge(n.sources);
    if (!cur.description && n.description) cur.description = std::move(n.description);
}

void KnowledgeGraph::add_triple(Triple t) {
    if (!has_node(t.head) || !has_node(t.tail)) {
        throw IntegrityError("dangling triple (" + t.head + ", " + t.relation.str() + ", " + t.tail +
                             "): " + (has_node(t.head) ? "tail" : "head") + " not in graph");
    }
    t.confidence = std::clamp(t.confidence, 0.0, 1.0);
    auto key = t.key();
    auto it = triples_.find(key);
    if (it != triples_.end()) {
        it->second.confidence = std::max(it->second.confidence, t.confidence);
        return;
    }
    ++out_[t.head][t.tail];
    ++in_[t.tail][t.head];
    triples_.emplace(std::move(key), std::move(t));
}

bool KnowledgeGraph::remove_triple(const TripleKey& key) {
    auto it = triples_.find(key);
    if (it == triples_.end()) return false;

    auto drop = [](PairIndex& idx, const std::string& a, const std::string& b) {
        auto row = idx.find(a);
        auto cell = row->second.find(b);
        if (--cell->second == 0) row->second.erase(cell);
        if (row->second.empty()) idx.erase(row);
    };
    drop(out_, key.head, key.tail);
    drop(in_, key.tail, key.head);
    triples_.erase(it);
    return true;
}

bool KnowledgeGraph::has_node(std::string_view id) const { return nodes_.find(id) != nodes_.end(); }

const Node* KnowledgeGraph::find_node(std::string_view id) const {
    auto it = nodes_.find(id);
    return it == nodes_.end() ? nullptr : &it->second;
}

const Node& KnowledgeGraph::node(std::string_view id) const {
    if (const Node* n = find_node(id)) return *n;
    throw LookupError("unknown node '" + std::string(id) + "'");
}

const Triple* KnowledgeGraph::find_triple(const TripleKey& key) const {
    auto it = triples_.find(key);
    return it == triples_.end() ? nullptr : &it->second;
}

bool KnowledgeGraph::adjacency(std::string_view i, std::string_view j) const {
    node(i);
    node(j);
    auto row = out_.find(std::string(i));
    return row != out_.end() && row->second.find(j) != row->second.end();
}

std::set<RelationType> KnowledgeGraph::relations_between(std::string_view i, std::string_view j) const {
    std::set<RelationType> out;
    for (const Triple* t : out_edges(i)) {
        if (t->tail == j) out.insert(t->relation);
    }
    return out;
}

std::vector<const Triple*> KnowledgeGraph::out_edges(std::string_view id) const {
    node(id);
    std::vector<const Triple*> out;
    // Triples are ordered by head first, so one range covers them.
    const TripleKey lo{std::string(id), RelationType{}, std::string{}};
    for (auto it = triples_.lower_bound(lo); it != triples_.end() && it->first.head == id; ++it) {
        out.push_back(&it->second);
    }
    return out;
}

std::vector<const Triple*> KnowledgeGraph::in_edges(std::string_view id) const {
    node(id);
    std::vector<const Triple*> out;
    auto row = in_.find(std::string(id));
    if (row == in_.end()) return out;
    for (const auto& [head, count] : row->second) {
        for (const Triple* t : out_edges(head)) {
            if (t->tail == id) out.push_back(t);
        }
    }
    return out;
}

std::set<std::string> KnowledgeGraph::neighbors(std::string_view id) const {
    node(id);
    std::set<std::string> out;
    const std::string key(id);
    if (auto row = out_.find(key); row != out_.end()) {
        for (const auto& [tail, count] : row->second) out.insert(tail);
    }
    if (auto row = in_.find(key); row != in_.end()) {
        for (const auto& [head, count] : row->second) out.insert(head);
    }
    return out;
}

std::set<NodeType> KnowledgeGraph::node_taxonomy() const {
    std::set<NodeType> out;
    for (const auto& [id, n] : nodes_) out.insert(n.type);
    return out;
}

std::set<RelationType> KnowledgeGraph::relation_taxonomy() const {
    std::set<RelationType> out;
    for (const auto& [key, t] : triples_) out.insert(key.relation);
    return out;
}

void KnowledgeGraph::check_integrity() const {
    for (const auto& [key, t] : triples_) {
        if (!has_node(key.head) || !has_node(key.tail)) {
            throw IntegrityError("dangling triple (" + key.head + ", " + key.relation.str() + ", " +
                                 key.tail + ")");
        }
    }
}

GraphStats graph_stats(const KnowledgeGraph& g) {
    GraphStats s;
    s.nodes = g.node_count();
    s.edges = g.edge_count();
    for (const auto& [id, n] : g.nodes()) ++s.node_types[n.type.str()];
    for (const auto& [key, t] : g.triples()) ++s.relation_types[key.relation.str()];
    return s;
}

}  // namespace kgfuse
