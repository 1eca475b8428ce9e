#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "fixtures.hpp"
#include "gen.hpp"
#include "oracles.hpp"
#include "kgfuse/align.hpp"
#include "kgfuse/evaluate.hpp"
#include "kgfuse/pipeline.hpp"

using namespace kgfuse;
using namespace kgfuse::evaluate;
using kgtest::node;
using kgtest::triple;

namespace {

align::MergeResult merge_plain(const std::vector<align::SourceGraph>& gs) {
    return align::merge_graphs(gs, {}, {}, align::TaxonomyMap{}, 0.9);
}

}  // namespace

TEST(Prf, Examples) {
    const std::set<int> s = {1, 2, 3};
    const auto perfect = precision_recall_f1(s, s);
    EXPECT_EQ(perfect.precision, 1.0);
    EXPECT_EQ(perfect.recall, 1.0);
    EXPECT_EQ(perfect.f1, 1.0);
    EXPECT_FALSE(perfect.zero_denominator);

    const auto r = precision_recall_f1(ConfusionCounts{3, 1, 2});
    EXPECT_DOUBLE_EQ(r.precision, 0.75);
    EXPECT_DOUBLE_EQ(r.recall, 0.6);
    EXPECT_NEAR(r.f1, 0.6667, 1e-4);

    const auto z = precision_recall_f1(std::set<int>{}, std::set<int>{});
    EXPECT_EQ(z.precision, 0.0);
    EXPECT_EQ(z.recall, 0.0);
    EXPECT_EQ(z.f1, 0.0);
    EXPECT_TRUE(z.zero_denominator);
}

TEST(PrfProperty, MatchesBruteForceOracle) {
    kgtest::Gen gen(100);
    for (int i = 0; i < 100; ++i) {
        const auto pv = gen.subset(50, gen.real(0, 1));
        const auto gv = gen.subset(50, gen.real(0, 1));
        const auto o = kgtest::oracle::prf(pv, gv);
        const auto r = precision_recall_f1(std::set<int>(pv.begin(), pv.end()), std::set<int>(gv.begin(), gv.end()));
        ASSERT_EQ(r.counts.tp, std::size_t(o.tp));
        ASSERT_EQ(r.counts.fp, std::size_t(o.fp));
        ASSERT_EQ(r.counts.fn, std::size_t(o.fn));
        ASSERT_NEAR(r.precision, o.p, 1e-12);
        ASSERT_NEAR(r.recall, o.r, 1e-12);
        ASSERT_NEAR(r.f1, o.f1, 1e-12);
        if (r.precision + r.recall > 0) {
            ASSERT_NEAR(r.f1, 2 * r.precision * r.recall / (r.precision + r.recall), 1e-12);
        }
    }
}

TEST(Gold, AlignmentAndEdgeFiles) {
    std::istringstream a(
        "left_source\tleft_id\tright_source\tright_id\n"
        "right\tR:1\tleft\tL:1\n"
        "left\tL:2\tright\tR:2\n");
    const auto gold = load_gold_alignments(a);
    EXPECT_EQ(gold.size(), 2u);
    EXPECT_TRUE(gold.count(make_alignment_pair({"left", "L:1"}, {"right", "R:1"})));

    std::istringstream e("head\trelation\ttail\nAPOE\tassociated_with\tAD\n");
    const auto edges = load_gold_edges(e);
    EXPECT_TRUE(edges.count({"APOE", RelationType{"AssociatedWith"}, "AD"}));
}

TEST(Coverage, SingleSourceLossless) {
    const std::vector<align::SourceGraph> gs = {{"A", kgtest::five_by_five("A")}};
    const auto m = merge_plain(gs);
    EXPECT_EQ(coverage(m.graph, gs, m.report.lineage), 1.0);
}

TEST(Coverage, TwoDisjointSources) {
    auto b = kgtest::five_by_five("B");
    KnowledgeGraph renamed;
    for (const auto& [id, n] : b.nodes()) {
        auto c = n;
        c.id = "B:" + id;
        renamed.add_node(c);
    }
    for (const auto& [k, t] : b.triples()) renamed.add_triple(triple("B:" + t.head, t.relation.str(), "B:" + t.tail, "B"));
    const std::vector<align::SourceGraph> gs = {{"A", kgtest::five_by_five("A")}, {"B", renamed}};
    const auto m = merge_plain(gs);
    EXPECT_EQ(coverage(m.graph, gs, m.report.lineage), 1.0);
}

TEST(Coverage, IdenticalSourcesHalf) {
    const std::vector<align::SourceGraph> gs = {{"A", kgtest::five_by_five("A")}, {"B", kgtest::five_by_five("B")}};
    const auto m = merge_plain(gs);
    EXPECT_EQ(m.graph.node_count(), 5u);
    EXPECT_EQ(m.graph.edge_count(), 5u);
    EXPECT_EQ(coverage(m.graph, gs, m.report.lineage), 0.5);
    EXPECT_EQ(coverage_union(m.graph, gs, m.report.lineage), 1.0);
}

TEST(Coverage, PredictedEdgesDoNotCount) {
    const std::vector<align::SourceGraph> gs = {{"A", kgtest::five_by_five("A")}};
    auto m = merge_plain(gs);
    m.graph.add_triple({"g1", RelationType{"Influences"}, "c1", Provenance::predicted(), 0.8});
    EXPECT_EQ(coverage(m.graph, gs, m.report.lineage), 1.0);
}

TEST(CoverageProperty, LosslessDisjointMergesAreOne) {
    for (std::uint64_t seed = 1; seed <= 30; ++seed) {
        kgtest::Gen gen(seed);
        std::vector<align::SourceGraph> gs;
        const auto k = gen.integer(1, 4);
        for (long long i = 0; i < k; ++i) {
            const auto name = "S" + std::to_string(i);
            gs.push_back({name, gen.graph(name + ":", name, static_cast<std::size_t>(gen.integer(0, 20)),
                                          static_cast<std::size_t>(gen.integer(0, 30)))});
        }
        const auto m = merge_plain(gs);
        const double c = coverage(m.graph, gs, m.report.lineage);
        std::size_t total = 0;
        for (const auto& s : gs) total += s.graph.node_count() + s.graph.edge_count();
        if (total == 0) {
            ASSERT_EQ(c, 0.0);
        } else {
            ASSERT_EQ(c, 1.0);
        }
    }
}

TEST(CoverageProperty, AlwaysInUnitInterval) {
    const embed::DeterministicProvider p(1, 32);
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        kgtest::Gen gen(seed);
        // Overlapping ids between sources force collapses.
        std::vector<align::SourceGraph> gs = {{"A", gen.graph("n", "A", 15, 20)}, {"B", gen.graph("n", "B", 15, 20)}};
        // Same ids must carry the same type; drop conflicting nodes from B.
        KnowledgeGraph b;
        for (const auto& [id, n] : gs[1].graph.nodes())
            if (gs[0].graph.node(id).type == n.type) b.add_node(n);
        for (const auto& [k, t] : gs[1].graph.triples())
            if (b.has_node(t.head) && b.has_node(t.tail)) b.add_triple(t);
        gs[1].graph = b;
        const auto m = merge_plain(gs);
        const double c = coverage(m.graph, gs, m.report.lineage);
        ASSERT_GE(c, 0.0);
        ASSERT_LE(c, 1.0);
        ASSERT_GE(coverage_union(m.graph, gs, m.report.lineage), c);
    }
}

TEST(Novelty, Examples) {
    EXPECT_EQ(novelty_score(KnowledgeGraph{}), 0.0);
    EXPECT_EQ(novelty_score(kgtest::five_by_five("A")), 0.0);

    KnowledgeGraph g;
    for (int i = 0; i < 11; ++i) g.add_node(node("n" + std::to_string(i), "x", "Genes"));
    for (int i = 0; i < 10; ++i) {
        Triple t = triple("n" + std::to_string(i), "Regulates", "n" + std::to_string(i + 1));
        if (i < 2) t.provenance = Provenance::predicted();
        g.add_triple(t);
    }
    EXPECT_DOUBLE_EQ(novelty_score(g), 0.2);
}

TEST(NoveltyProperty, InvariantUnderRelabeling) {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        kgtest::Gen gen(seed);
        auto g = gen.graph("n", "s", 20, 40);
        KnowledgeGraph h;
        for (const auto& [id, n] : g.nodes()) {
            auto c = n;
            c.id = "relabel:" + std::to_string(std::hash<std::string>{}(id));
            h.add_node(c);
        }
        KnowledgeGraph withp = g;
        for (const auto& [k, t] : g.triples()) {
            Triple x = t;
            if (gen.coin()) x.provenance = Provenance::predicted();
            withp.remove_triple(k);
            withp.add_triple(x);
            x.head = "relabel:" + std::to_string(std::hash<std::string>{}(t.head));
            x.tail = "relabel:" + std::to_string(std::hash<std::string>{}(t.tail));
            h.add_triple(x);
        }
        ASSERT_EQ(novelty_score(withp), novelty_score(h));
    }
}

TEST(Consistency, CleanFixture) {
    const auto r = consistency_check(kgtest::five_by_five("A"), default_constraints());
    EXPECT_EQ(r.score, 1.0);
    EXPECT_TRUE(r.violations.empty());
    EXPECT_EQ(r.checks, 15u);
}

TEST(Consistency, TreatedByNeedsTargetHead) {
    KnowledgeGraph g;
    g.add_node(node("d", "AD", "Diseases"));
    g.add_node(node("d2", "PD", "Diseases"));
    g.add_triple(triple("d", "TreatedBy", "d2"));
    const auto r = consistency_check(g, default_constraints());
    ASSERT_EQ(r.violations.size(), 1u);
    EXPECT_EQ(r.violations[0].check, Check::domain_range);
}

TEST(Consistency, OneViolationInThirtyChecks) {
    KnowledgeGraph g;
    for (int i = 0; i < 11; ++i) g.add_node(node("p" + std::to_string(i), "x", "BiologicalPathways"));
    for (int i = 0; i < 9; ++i) g.add_triple(triple("p" + std::to_string(i), "LinkedTo", "p" + std::to_string(i + 1)));
    g.add_triple(triple("p9", "part_of", "p10"));
    const auto r = consistency_check(g, default_constraints());
    EXPECT_EQ(r.checks, 30u);
    ASSERT_EQ(r.violations.size(), 1u);
    EXPECT_EQ(r.violations[0].check, Check::relation_taxonomy);
    EXPECT_NEAR(r.score, 29.0 / 30.0, 1e-12);
    EXPECT_NEAR(r.score, 0.9667, 1e-4);
    std::ostringstream out;
    write_violations_tsv(r, out);
    EXPECT_NE(out.str().find("relation_taxonomy"), std::string::npos);
}

TEST(ConsistencyProperty, PerfectIffNoViolations) {
    for (std::uint64_t seed = 1; seed <= 40; ++seed) {
        kgtest::Gen gen(seed);
        const auto g = gen.graph("n", "s", 12, static_cast<std::size_t>(gen.integer(0, 25)));
        const auto r = consistency_check(g, default_constraints());
        ASSERT_EQ(r.score == 1.0, r.violations.empty());
        ASSERT_EQ(r.checks, 3 * g.edge_count());
        ASSERT_NEAR(r.score, r.checks ? 1.0 - double(r.violations.size()) / double(r.checks) : 1.0, 1e-12);
    }
}

TEST(Constraints, TsvMatchesDefaults) {
    std::ifstream in(std::string(KGFUSE_SOURCE_DIR) + "/data/constraints.tsv");
    ASSERT_TRUE(in);
    const auto loaded = load_constraints_tsv(in);
    const auto defaults = default_constraints();
    ASSERT_EQ(loaded.size(), defaults.size());
    for (const auto& [rel, c] : defaults) {
        ASSERT_TRUE(loaded.count(rel)) << rel;
        EXPECT_EQ(loaded.at(rel).heads, c.heads) << rel;
        EXPECT_EQ(loaded.at(rel).tails, c.tails) << rel;
    }
}

TEST(DataFiles, MatchBuiltInTables) {
    std::ifstream rel(std::string(KGFUSE_SOURCE_DIR) + "/data/relation_table.tsv");
    ASSERT_TRUE(rel);
    EXPECT_EQ(align::load_relation_table(rel), default_relation_table());
    std::ifstream types(std::string(KGFUSE_SOURCE_DIR) + "/data/type_mappings.tsv");
    ASSERT_TRUE(types);
    EXPECT_EQ(align::TaxonomyMap::load_tsv(types).tables(), default_type_mappings().tables());
}

TEST(Efficiency, NotMeasuredWhenOff) {
    RunManifest m;
    {
        StageTimer t(m, "ingest");
    }
    EXPECT_TRUE(m.stages.empty());
    const auto e = efficiency_report(m);
    EXPECT_FALSE(e.measured);
    EXPECT_TRUE(e.timings.empty());
    EXPECT_FALSE(e.peak_memory_bytes);
    MetricReport r;
    r.efficiency = e;
    EXPECT_EQ(metric_report_to_json(r).at("metrics").at("Computational Eff."), "not measured");
}

TEST(Efficiency, TwoStagesPositiveAndStable) {
    auto run = [] {
        RunManifest m;
        m.instrumented = true;
        {
            StageTimer t(m, "ingest");
        }
        {
            StageTimer t(m, "merge");
        }
        return efficiency_report(m);
    };
    const auto a = run(), b = run();
    ASSERT_EQ(a.timings.size(), 2u);
    for (const auto& [_, s] : a.timings) EXPECT_GT(s, 0.0);
    EXPECT_TRUE(a.peak_memory_bytes);
    ASSERT_EQ(b.timings.size(), 2u);
    for (std::size_t i = 0; i < 2; ++i) EXPECT_EQ(a.timings[i].first, b.timings[i].first);
}

TEST(MetricReportJson, RowNamesAndPercentages) {
    MetricReport r;
    r.alignment = precision_recall_f1(ConfusionCounts{3, 1, 2});
    r.coverage = 0.5;
    r.coverage_union = 1.0;
    r.novelty = 0.2;
    r.consistency = 29.0 / 30.0;
    r.expert_validation = 0.75;
    const auto j = metric_report_to_json(r, std::string("00ff"));
    const auto& m = j.at("metrics");
    for (const char* k : {"Precision", "Recall", "F1-Score", "Coverage", "Graph Consistency", "Computational Eff.",
                          "Novelty Detection", "Expert Validation"})
        EXPECT_TRUE(m.contains(k)) << k;
    EXPECT_DOUBLE_EQ(m.at("Precision").get<double>(), 75.0);
    EXPECT_DOUBLE_EQ(m.at("Coverage").get<double>(), 50.0);
    EXPECT_DOUBLE_EQ(m.at("Novelty Detection").get<double>(), 20.0);
    EXPECT_DOUBLE_EQ(j.at("coverage_union_nonstandard").get<double>(), 100.0);
    EXPECT_EQ(j.at("config_hash"), "00ff");
}
