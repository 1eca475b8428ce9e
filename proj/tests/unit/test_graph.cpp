#include <gtest/gtest.h>

#include <sstream>

#include "fixtures.hpp"
#include "gen.hpp"
#include "kgfuse/errors.hpp"
#include "kgfuse/graph.hpp"
#include "kgfuse/graph_io.hpp"
#include "kgfuse/taxonomy.hpp"

using namespace kgfuse;
using kgtest::node;
using kgtest::triple;

TEST(Graph, AddNodeToEmpty) {
    KnowledgeGraph g;
    g.add_node(node("a", "A", "Genes"));
    EXPECT_EQ(g.node_count(), 1u);
    EXPECT_EQ(g.edge_count(), 0u);
}

TEST(Graph, AddSameNodeTwiceUnionsAliases) {
    KnowledgeGraph g;
    auto n1 = node("a", "A", "Genes");
    n1.aliases = {"x"};
    auto n2 = node("a", "A", "Genes", "other");
    n2.aliases = {"y", ""};
    g.add_node(n1);
    g.add_node(n2);
    EXPECT_EQ(g.node_count(), 1u);
    EXPECT_EQ(g.node("a").aliases, (std::set<std::string>{"x", "y"}));
    EXPECT_EQ(g.node("a").sources, (std::set<std::string>{"test", "other"}));
}

TEST(Graph, TypeConflict) {
    KnowledgeGraph g;
    g.add_node(node("DOID:14330", "Parkinson's disease", "Genes"));
    EXPECT_THROW(g.add_node(node("DOID:14330", "Parkinson's disease", "Diseases")), TypeConflictError);
}

TEST(Graph, AddTripleCountsOnce) {
    KnowledgeGraph g;
    g.add_node(node("APOE4", "APOE4", "Genes"));
    g.add_node(node("AD", "Alzheimer's disease", "Diseases"));
    g.add_triple(triple("APOE4", "causes", "AD"));
    EXPECT_EQ(g.edge_count(), 1u);
    g.add_triple(triple("APOE4", "causes", "AD"));
    EXPECT_EQ(g.edge_count(), 1u);
}

TEST(Graph, DuplicateKeepsMaxConfidence) {
    KnowledgeGraph g;
    g.add_node(node("a", "A", "Genes"));
    g.add_node(node("b", "B", "Genes"));
    auto t = triple("a", "Causes", "b");
    t.confidence = 0.4;
    g.add_triple(t);
    t.confidence = 0.8;
    g.add_triple(t);
    t.confidence = 0.6;
    g.add_triple(t);
    EXPECT_DOUBLE_EQ(g.find_triple(t.key())->confidence, 0.8);
}

TEST(Graph, DanglingTripleRejected) {
    KnowledgeGraph g;
    g.add_node(node("a", "A", "Genes"));
    EXPECT_THROW(g.add_triple(triple("a", "Causes", "missing")), IntegrityError);
    EXPECT_THROW(g.add_triple(triple("missing", "Causes", "a")), IntegrityError);
    EXPECT_EQ(g.edge_count(), 0u);
}

TEST(Graph, AdjacencyIsDirected) {
    KnowledgeGraph g;
    g.add_node(node("a", "A", "Genes"));
    g.add_node(node("b", "B", "Diseases"));
    EXPECT_FALSE(g.adjacency("a", "b"));
    g.add_triple(triple("a", "Causes", "b"));
    EXPECT_TRUE(g.adjacency("a", "b"));
    EXPECT_FALSE(g.adjacency("b", "a"));
    EXPECT_THROW(g.adjacency("a", "nope"), LookupError);
}

TEST(Graph, MultigraphRelationsBetween) {
    KnowledgeGraph g;
    g.add_node(node("a", "A", "Genes"));
    g.add_node(node("b", "B", "Diseases"));
    g.add_triple(triple("a", "Causes", "b"));
    g.add_triple(triple("a", "AssociatedWith", "b"));
    EXPECT_EQ(g.edge_count(), 2u);
    EXPECT_EQ(g.relations_between("a", "b").size(), 2u);
    EXPECT_TRUE(g.remove_triple({"a", RelationType{"Causes"}, "b"}));
    EXPECT_TRUE(g.adjacency("a", "b"));
    EXPECT_TRUE(g.remove_triple({"a", RelationType{"AssociatedWith"}, "b"}));
    EXPECT_FALSE(g.adjacency("a", "b"));
    EXPECT_FALSE(g.remove_triple({"a", RelationType{"AssociatedWith"}, "b"}));
}

TEST(Graph, StatsEmpty) {
    EXPECT_EQ(graph_stats(KnowledgeGraph{}), GraphStats{});
}

TEST(Graph, StatsFixture) {
    KnowledgeGraph g;
    g.add_node(node("g1", "APOE", "Genes"));
    g.add_node(node("g2", "BDNF", "Genes"));
    g.add_node(node("d1", "AD", "Diseases"));
    g.add_triple(triple("g1", "AssociatedWith", "d1"));
    g.add_triple(triple("g2", "AssociatedWith", "d1"));
    const auto s = graph_stats(g);
    EXPECT_EQ(s.nodes, 3u);
    EXPECT_EQ(s.edges, 2u);
    EXPECT_EQ(s.node_types, (std::map<std::string, std::size_t>{{"Genes", 2}, {"Diseases", 1}}));
    EXPECT_EQ(s.relation_types, (std::map<std::string, std::size_t>{{"AssociatedWith", 2}}));
}

TEST(Graph, TaxonomiesTrackContent) {
    auto g = kgtest::five_by_five("s");
    EXPECT_EQ(g.node_taxonomy().size(), 5u);
    for (const auto& t : g.node_taxonomy()) EXPECT_TRUE(taxonomy::is_canonical(t));
    EXPECT_EQ(g.relation_taxonomy().size(), 5u);
}

TEST(Graph, ProvenanceRoundTrip) {
    for (const auto& p : {Provenance::from_source("GO"), Provenance::merged(), Provenance::predicted()}) {
        EXPECT_EQ(Provenance::parse(p.to_string()), p);
    }
    EXPECT_EQ(Provenance::from_source("DO").to_string(), "source:DO");
}

TEST(Taxonomy, CanonicalMatching) {
    EXPECT_EQ(taxonomy::canonical_relation("associated_with"), RelationType{"AssociatedWith"});
    EXPECT_EQ(taxonomy::canonical_relation("Associated with"), RelationType{"AssociatedWith"});
    EXPECT_EQ(taxonomy::canonical_relation("causes"), RelationType{"Causes"});
    EXPECT_FALSE(taxonomy::canonical_relation("induces"));
    EXPECT_EQ(taxonomy::canonical_node_type("genes"), NodeType{"Genes"});
    EXPECT_EQ(taxonomy::humanize("AssociatedWith"), "associated with");
}

// Stats sums and exhaustive adjacency against the stored triples.
TEST(GraphProperty, AdjacencyMatchesTriplesExhaustively) {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        kgtest::Gen gen(seed);
        const auto g = gen.graph("n", "src", 50, 200);
        const auto s = graph_stats(g);
        std::size_t nsum = 0, esum = 0;
        for (const auto& [_, c] : s.node_types) nsum += c;
        for (const auto& [_, c] : s.relation_types) esum += c;
        ASSERT_EQ(nsum, g.node_count());
        ASSERT_EQ(esum, g.edge_count());
        ASSERT_NO_THROW(g.check_integrity());

        for (const auto& [i, _a] : g.nodes()) {
            for (const auto& [j, _b] : g.nodes()) {
                bool expected = false;
                for (const auto& [key, t] : g.triples())
                    if (t.head == i && t.tail == j) expected = true;
                ASSERT_EQ(g.adjacency(i, j), expected) << i << " -> " << j;
            }
        }
    }
}

TEST(GraphProperty, IdempotentInsertion) {
    kgtest::Gen gen(7);
    const auto g = gen.graph("n", "src", 30, 60);
    KnowledgeGraph h = g;
    for (const auto& [_, n] : g.nodes()) h.add_node(n);
    for (const auto& [_, t] : g.triples()) h.add_triple(t);
    EXPECT_EQ(graph_stats(h), graph_stats(g));
    EXPECT_EQ(h.triples(), g.triples());
}

TEST(GraphIo, JsonlRoundTrip) {
    kgtest::Gen gen(3);
    auto g = gen.graph("n", "src", 20, 40);
    auto n = g.node("n1");
    n.aliases = {"alias one"};
    n.description = "desc";
    g.add_node(n);
    std::stringstream ss;
    write_graph_jsonl(g, ss, std::string("abc"));
    EXPECT_NE(ss.str().find("\"config_hash\":\"abc\""), std::string::npos);
    const auto back = read_graph_jsonl(ss);
    EXPECT_EQ(back.nodes(), g.nodes());
    EXPECT_EQ(back.triples(), g.triples());
}

TEST(GraphIo, DanglingJsonlTriple) {
    std::stringstream ss(
        R"({"kind":"node","id":"a","label":"A","node_type":"Genes"})"
        "\n"
        R"({"kind":"triple","head":"a","relation":"Causes","tail":"b","provenance":"source:x","confidence":1.0})"
        "\n");
    EXPECT_THROW(read_graph_jsonl(ss), IntegrityError);
}
