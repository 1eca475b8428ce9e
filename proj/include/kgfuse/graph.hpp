#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "kgfuse/taxonomy.hpp"

namespace kgfuse {

// Where a triple came from.
struct Provenance {
    enum class Kind { source, merged, predicted };

    Kind kind = Kind::source;
    std::string source;  // only meaningful for Kind::source

    static Provenance from_source(std::string name) { return {Kind::source, std::move(name)}; }
    static Provenance merged() { return {Kind::merged, {}}; }
    static Provenance predicted() { return {Kind::predicted, {}}; }

    // "source:<name>", "merged" or "predicted".
    std::string to_string() const;
    static Provenance parse(std::string_view text);

    friend bool operator==(const Provenance&, const Provenance&) = default;
};

struct Node {
    std::string id;
    std::string label;
    NodeType type;
    std::set<std::string> aliases;
    std::optional<std::string> description;
    std::set<std::string> sources;

    friend bool operator==(const Node&, const Node&) = default;
};

struct TripleKey {
    std::string head;
    RelationType relation;
    std::string tail;

    friend auto operator<=>(const TripleKey&, const TripleKey&) = default;
    friend bool operator==(const TripleKey&, const TripleKey&) = default;
};

struct Triple {
    std::string head;
    RelationType relation;
    std::string tail;
    Provenance provenance;
    double confidence = 1.0;

    TripleKey key() const { return {head, relation, tail}; }
    friend bool operator==(const Triple&, const Triple&) = default;
};

struct GraphStats {
    std::size_t nodes = 0;
    std::size_t edges = 0;
    std::map<std::string, std::size_t> node_types;
    std::map<std::string, std::size_t> relation_types;

    friend bool operator==(const GraphStats&, const GraphStats&) = default;
};

// Typed directed multigraph. Triples are unique per (head, relation, tail);
// the same pair may be linked by several relations. Adjacency is derived from
// the triples through a sparse pair index and never materialised densely.
class KnowledgeGraph {
public:
    // Inserts `n`, or merges it into an existing node with the same id
    // (aliases and sources unioned, description filled if absent).
    // Throws TypeConflictError when the existing node has another type.
    void add_node(Node n);

    // Throws IntegrityError on a dangling endpoint. A duplicate keeps the
    // higher confidence.
    void add_triple(Triple t);

    bool remove_triple(const TripleKey& key);

    bool has_node(std::string_view id) const;
    const Node& node(std::string_view id) const;
    const Node* find_node(std::string_view id) const;

    bool contains(const TripleKey& key) const { return triples_.count(key) != 0; }
    const Triple* find_triple(const TripleKey& key) const;

    // A_ij: true iff some triple (i, r, j) exists. Throws LookupError for
    // unknown ids.
    bool adjacency(std::string_view i, std::string_view j) const;

    // Relation-resolved view of the same pair.
    std::set<RelationType> relations_between(std::string_view i, std::string_view j) const;

    std::vector<const Triple*> out_edges(std::string_view id) const;
    std::vector<const Triple*> in_edges(std::string_view id) const;

    // Undirected neighbour ids.
    std::set<std::string> neighbors(std::string_view id) const;

    const std::map<std::string, Node, std::less<>>& nodes() const noexcept { return nodes_; }
    const std::map<TripleKey, Triple>& triples() const noexcept { return triples_; }
    std::size_t node_count() const noexcept { return nodes_.size(); }
    std::size_t edge_count() const noexcept { return triples_.size(); }
    bool empty() const noexcept { return nodes_.empty(); }

    std::set<NodeType> node_taxonomy() const;
    std::set<RelationType> relation_taxonomy() const;

    // Throws IntegrityError if any endpoint fails to resolve.
    void check_integrity() const;

private:
    using PairIndex = std::unordered_map<std::string, std::map<std::string, std::size_t, std::less<>>>;

    std::map<std::string, Node, std::less<>> nodes_;
    std::map<TripleKey, Triple> triples_;
    PairIndex out_;  // head -> tail -> number of triples
    PairIndex in_;   // tail -> head -> number of triples
};

GraphStats graph_stats(const KnowledgeGraph& g);

}  // namespace kgfuse
