#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <set>
#include <sstream>

#include "gen.hpp"
#include "oracles.hpp"
#include "kgfuse/errors.hpp"
#include "kgfuse/linkpred.hpp"

using namespace kgfuse;
using namespace kgfuse::linkpred;

namespace {

KGEModel blank(ModelKind kind, std::size_t dim, std::size_t ne, std::size_t nr) {
    KGEModel m;
    m.kind = kind;
    m.dim = dim;
    m.num_entities = ne;
    m.num_relations = nr;
    m.entity.assign(ne * m.entity_width(), 0.0);
    m.relation.assign(nr * m.relation_width(), 0.0);
    return m;
}

void randomize(KGEModel& m, kgtest::Gen& gen) {
    for (auto& x : m.entity) x = gen.real(-1, 1);
    for (auto& x : m.relation) x = gen.real(-1, 1);
}

// Small dataset with random triples over `ne` entities and `nr` relations.
TripleDataset random_dataset(kgtest::Gen& gen, std::size_t ne, std::size_t nr, std::size_t n) {
    TripleDataset ds;
    for (std::size_t i = 0; i < ne; ++i) ds.intern_entity("e" + std::to_string(i));
    for (std::size_t i = 0; i < nr; ++i) ds.intern_relation("r" + std::to_string(i));
    std::set<IdTriple> seen;
    while (seen.size() < n) {
        IdTriple t{static_cast<std::uint32_t>(gen.integer(0, (long long)ne - 1)),
                   static_cast<std::uint32_t>(gen.integer(0, (long long)nr - 1)),
                   static_cast<std::uint32_t>(gen.integer(0, (long long)ne - 1))};
        if (!seen.insert(t).second) continue;
        const auto bucket = gen.integer(0, 9);
        (bucket < 6 ? ds.train : bucket < 8 ? ds.valid : ds.test).push_back(t);
    }
    if (ds.test.empty()) {
        ds.test.push_back(ds.train.back());
        ds.train.pop_back();
    }
    return ds;
}

TrainConfig quick(std::size_t dim, std::size_t epochs, std::uint64_t seed = 0) {
    TrainConfig c;
    c.dim = dim;
    c.epochs = epochs;
    c.seed = seed;
    return c;
}

}  // namespace

TEST(Score, TransEExactTranslationIsMax) {
    kgtest::Gen gen(1);
    for (int norm : {1, 2}) {
        auto m = blank(ModelKind::TransE, 6, 3, 1);
        m.norm = norm;
        randomize(m, gen);
        for (std::size_t k = 0; k < 6; ++k) m.e(2)[k] = m.e(0)[k] + m.r(0)[k];
        EXPECT_NEAR(score_triple(m, 0, 0, 2), 0.0, 1e-15);
        EXPECT_LT(score_triple(m, 0, 0, 1), 0.0);
    }
}

TEST(Score, DistMultAllOnes) {
    auto m = blank(ModelKind::DistMult, 8, 2, 1);
    std::fill(m.entity.begin(), m.entity.end(), 1.0);
    std::fill(m.relation.begin(), m.relation.end(), 1.0);
    EXPECT_EQ(score_triple(m, 0, 0, 1), 8.0);
}

TEST(Score, OutOfRange) {
    auto m = blank(ModelKind::DistMult, 4, 2, 1);
    EXPECT_THROW(score_triple(m, 2, 0, 0), LookupError);
    EXPECT_THROW(score_triple(m, 0, 1, 0), LookupError);
    EXPECT_THROW(score_triple(m, 0, 0, 5), LookupError);
}

TEST(ScoreProperty, ComplExRealRestrictionEqualsDistMult) {
    kgtest::Gen gen(2);
    for (int i = 0; i < 200; ++i) {
        const std::size_t d = static_cast<std::size_t>(gen.integer(1, 16));
        auto dm = blank(ModelKind::DistMult, d, 3, 2);
        randomize(dm, gen);
        auto cx = blank(ModelKind::ComplEx, d, 3, 2);
        for (std::size_t e = 0; e < 3; ++e)
            for (std::size_t k = 0; k < d; ++k) cx.e(e)[k] = dm.e(e)[k];
        for (std::size_t r = 0; r < 2; ++r)
            for (std::size_t k = 0; k < d; ++k) cx.r(r)[k] = dm.r(r)[k];
        for (std::size_t h = 0; h < 3; ++h)
            for (std::size_t t = 0; t < 3; ++t)
                for (std::size_t r = 0; r < 2; ++r)
                    ASSERT_NEAR(score_triple(cx, h, r, t), score_triple(dm, h, r, t), 1e-9);
    }
}

TEST(ScoreProperty, RotatEZeroPhaseIsNegativeDistance) {
    kgtest::Gen gen(3);
    for (int i = 0; i < 200; ++i) {
        const std::size_t d = static_cast<std::size_t>(gen.integer(1, 16));
        auto m = blank(ModelKind::RotatE, d, 2, 1);
        for (auto& x : m.entity) x = gen.real(-2, 2);
        double s = 0;
        for (std::size_t k = 0; k < 2 * d; ++k) s += (m.e(0)[k] - m.e(1)[k]) * (m.e(0)[k] - m.e(1)[k]);
        ASSERT_NEAR(score_triple(m, 0, 0, 1), -std::sqrt(s), 1e-9);
    }
}

TEST(ScoreProperty, DistMultSymmetricComplExNot) {
    kgtest::Gen gen(4);
    for (int i = 0; i < 200; ++i) {
        auto m = blank(ModelKind::DistMult, 12, 5, 3);
        randomize(m, gen);
        const auto h = static_cast<std::size_t>(gen.integer(0, 4));
        const auto t = static_cast<std::size_t>(gen.integer(0, 4));
        const auto r = static_cast<std::size_t>(gen.integer(0, 2));
        ASSERT_EQ(score_triple(m, h, r, t), score_triple(m, t, r, h));
    }
    auto c = blank(ModelKind::ComplEx, 4, 2, 1);
    randomize(c, gen);
    EXPECT_GT(std::abs(score_triple(c, 0, 0, 1) - score_triple(c, 1, 0, 0)), 1e-6);
}

TEST(Rank, Examples) {
    EXPECT_EQ(rank_from_scores({0.1, 0.9, 0.3}, 1), 1u);
    EXPECT_EQ(rank_from_scores({5, 4, 3, 2, 1}, 2), 3u);
    EXPECT_EQ(rank_from_scores({1, 1, 1}, 0), 3u);  // ties count against the truth
    const std::vector<bool> excluded = {true, true, false, false, false};
    EXPECT_EQ(rank_from_scores({5, 4, 3, 2, 1}, 2, &excluded), 1u);
}

TEST(Rank, FilteredSkipsKnownTriples) {
    TripleDataset ds;
    for (int i = 0; i < 5; ++i) ds.intern_entity("e" + std::to_string(i));
    ds.intern_relation("r");
    ds.train = {{0, 0, 1}, {0, 0, 2}};
    ds.test = {{0, 0, 3}};
    auto m = blank(ModelKind::DistMult, 1, 5, 1);
    m.r(0)[0] = 1.0;
    m.e(0)[0] = 1.0;
    const double s[] = {0.0, 5.0, 4.0, 3.0, 2.0};
    for (int i = 0; i < 5; ++i) m.e(static_cast<std::size_t>(i))[0] = i == 0 ? 1.0 : s[i];
    const KnownTriples known(ds);
    EXPECT_EQ(rank_query(m, ds.test[0], Slot::tail, Setting::raw, nullptr), 3u);
    EXPECT_EQ(rank_query(m, ds.test[0], Slot::tail, Setting::filtered, &known), 1u);
}

TEST(Ranking, Examples) {
    const auto a = evaluate_ranking({1, 1, 1});
    EXPECT_EQ(a.mr, 1.0);
    EXPECT_EQ(a.mrr, 1.0);
    EXPECT_EQ(a.hits.at(10), 1.0);

    const auto b = evaluate_ranking({1, 2, 4});
    EXPECT_NEAR(b.mr, 2.3333, 1e-4);
    EXPECT_NEAR(b.mrr, 0.58333, 1e-5);

    const auto c = evaluate_ranking({1, 3, 12}, {10});
    EXPECT_NEAR(c.hits.at(10), 0.6667, 1e-4);
    EXPECT_NEAR(c.p_at_k_literal.at(10), 0.0667, 1e-4);

    EXPECT_THROW(evaluate_ranking({}), Error);
    EXPECT_THROW(evaluate_ranking({1, 0}), Error);
}

TEST(RankingProperty, MatchesOracleOnRandomModels) {
    kgtest::Gen gen(500);
    const ModelKind kinds[] = {ModelKind::TransE, ModelKind::RotatE, ModelKind::DistMult, ModelKind::ComplEx};
    for (int i = 0; i < 100; ++i) {
        const auto ne = static_cast<std::size_t>(gen.integer(2, 30));
        const auto nr = static_cast<std::size_t>(gen.integer(1, 3));
        const auto n = std::min<std::size_t>(ne * ne * nr, static_cast<std::size_t>(gen.integer(3, 40)));
        const auto ds = random_dataset(gen, ne, nr, n);
        auto m = blank(kinds[i % 4], static_cast<std::size_t>(gen.integer(1, 6)), ne, nr);
        randomize(m, gen);
        // Coarse values make ties common.
        if (i % 5 == 0)
            for (auto& x : m.entity) x = std::round(x);

        std::set<IdTriple> known(ds.train.begin(), ds.train.end());
        known.insert(ds.valid.begin(), ds.valid.end());
        known.insert(ds.test.begin(), ds.test.end());
        for (const auto setting : {Setting::raw, Setting::filtered}) {
            std::vector<std::size_t> expected;
            for (const auto& q : ds.test) {
                for (const auto slot : {Slot::tail, Slot::head}) {
                    std::vector<double> scores(ne);
                    std::vector<bool> excluded(ne, false);
                    for (std::uint32_t c = 0; c < ne; ++c) {
                        const IdTriple cand = slot == Slot::tail ? IdTriple{q.h, q.r, c} : IdTriple{c, q.r, q.t};
                        scores[c] = score_triple(m, cand.h, cand.r, cand.t);
                        excluded[c] = setting == Setting::filtered && cand != q && known.count(cand);
                    }
                    expected.push_back(kgtest::oracle::rank_by_sort(scores, slot == Slot::tail ? q.t : q.h, excluded));
                }
            }
            const auto rep = evaluate_model(m, ds, ds.test, setting);
            ASSERT_EQ(rep.ranks, expected);
            const auto o = kgtest::oracle::ranking(expected, {1, 3, 10});
            ASSERT_NEAR(rep.mr, o.mr, 1e-12);
            ASSERT_NEAR(rep.mrr, o.mrr, 1e-12);
            for (std::size_t k : {1, 3, 10}) {
                ASSERT_NEAR(rep.hits.at(k), o.hits.at(k), 1e-12);
                ASSERT_NEAR(rep.p_at_k_literal.at(k), o.p_literal.at(k), 1e-12);
            }
            ASSERT_GE(rep.mr, 1.0);
            ASSERT_GT(rep.mrr, 0.0);
            ASSERT_LE(rep.mrr, 1.0);
            ASSERT_LE(rep.hits.at(1), rep.hits.at(3));
            ASSERT_LE(rep.hits.at(3), rep.hits.at(10));
        }
    }
}

TEST(RankingProperty, FilteredNeverWorseThanRaw) {
    kgtest::Gen gen(600);
    for (int i = 0; i < 50; ++i) {
        const auto ds = random_dataset(gen, 15, 2, 60);
        auto m = blank(i % 2 ? ModelKind::DistMult : ModelKind::TransE, 4, 15, 2);
        randomize(m, gen);
        const auto raw = evaluate_model(m, ds, ds.test, Setting::raw);
        const auto filt = evaluate_model(m, ds, ds.test, Setting::filtered);
        ASSERT_EQ(raw.ranks.size(), filt.ranks.size());
        for (std::size_t q = 0; q < raw.ranks.size(); ++q) ASSERT_LE(filt.ranks[q], raw.ranks[q]);
    }
}

TEST(Dataset, SyntheticPairCycles) {
    const auto ds = TripleDataset::synthetic_pair_cycles(25, 0);
    EXPECT_EQ(ds.entities.size(), 50u);
    EXPECT_EQ(ds.relations.size(), 2u);
    EXPECT_EQ(ds.train.size(), 40u);
    EXPECT_EQ(ds.valid.size(), 5u);
    EXPECT_EQ(ds.test.size(), 5u);
    EXPECT_NO_THROW(ds.validate());
    std::set<IdTriple> train(ds.train.begin(), ds.train.end());
    for (const auto* split : {&ds.valid, &ds.test})
        for (const auto& t : *split) {
            EXPECT_FALSE(train.count(t));
            EXPECT_TRUE(train.count({t.t, 1 - t.r, t.h}));  // reverse stays in train
        }
    const auto again = TripleDataset::synthetic_pair_cycles(25, 0);
    EXPECT_EQ(again.test, ds.test);
}

TEST(Dataset, TsvAndValidation) {
    std::istringstream tr("a\tr\tb\nb\tr\tc\n"), va("a\tr\tc\n"), te("c\tr\ta\n");
    const auto ds = TripleDataset::from_tsv(tr, va, te);
    EXPECT_EQ(ds.entities.size(), 3u);
    EXPECT_EQ(ds.train.size(), 2u);
    EXPECT_EQ(ds.entity_id("b"), 1u);
    EXPECT_THROW(ds.entity_id("zz"), LookupError);
    EXPECT_THROW(ds.relation_id("zz"), LookupError);

    auto bad = ds;
    bad.test.push_back(bad.train[0]);
    EXPECT_THROW(bad.validate(), IntegrityError);
    auto range = ds;
    range.train.push_back({99, 0, 0});
    EXPECT_THROW(range.validate(), IntegrityError);
}

TEST(Dataset, FromGraphSplitsDisjoint) {
    kgtest::Gen gen(12);
    const auto g = gen.graph("n", "s", 30, 100);
    const auto ds = TripleDataset::from_graph(g, 0.1, 0.1, 5);
    EXPECT_EQ(ds.train.size() + ds.valid.size() + ds.test.size(), g.edge_count());
    EXPECT_NO_THROW(ds.validate());
    EXPECT_EQ(TripleDataset::from_graph(g, 0.1, 0.1, 5).test, ds.test);
}

TEST(Train, ZeroEpochsIsInitialisation) {
    const auto ds = TripleDataset::synthetic_pair_cycles(25, 0);
    for (auto kind : {ModelKind::TransE, ModelKind::RotatE, ModelKind::DistMult, ModelKind::ComplEx}) {
        const auto r = train(ds, kind, quick(16, 0, 9));
        EXPECT_EQ(r.model, init_model(ds, kind, quick(16, 0, 9)));
        EXPECT_TRUE(r.epoch_loss.empty());
    }
}

TEST(Train, EmptySplitAndBadConfig) {
    TripleDataset ds;
    ds.intern_entity("a");
    ds.intern_relation("r");
    EXPECT_THROW(train(ds, ModelKind::TransE, quick(4, 1)), TrainingError);
    auto ok = TripleDataset::synthetic_pair_cycles(3, 0);
    auto bad = quick(4, 1);
    bad.dim = 0;
    EXPECT_THROW(train(ok, ModelKind::TransE, bad), ConfigError);
}

TEST(Train, SingleTripleRanksFirst) {
    TripleDataset ds;
    for (const char* e : {"a", "b", "c"}) ds.intern_entity(e);
    ds.intern_relation("r");
    ds.train = {{0, 0, 1}};
    const auto r = train(ds, ModelKind::TransE, quick(8, 200, 1));
    EXPECT_EQ(rank_query(r.model, ds.train[0], Slot::tail, Setting::raw, nullptr), 1u);
}

TEST(Train, LossDecreasesOnSyntheticCycles) {
    const auto ds = TripleDataset::synthetic_pair_cycles(25, 0);
    for (auto kind : {ModelKind::TransE, ModelKind::DistMult}) {
        const auto r = train(ds, kind, quick(32, 50, 0));
        ASSERT_EQ(r.epoch_loss.size(), 50u);
        EXPECT_LT(r.epoch_loss[49], r.epoch_loss[0]) << to_string(kind);
    }
}

TEST(Train, FixedSeedReproducesReport) {
    const auto ds = TripleDataset::synthetic_pair_cycles(25, 0);
    auto run = [&] {
        const auto r = train(ds, ModelKind::DistMult, quick(16, 60, 4));
        return ranking_report_to_json(evaluate_model(r.model, ds, ds.test, Setting::filtered), ModelKind::DistMult)
            .dump();
    };
    EXPECT_EQ(run(), run());
    const auto other = train(ds, ModelKind::DistMult, quick(16, 60, 5)).model;
    EXPECT_NE(other, train(ds, ModelKind::DistMult, quick(16, 60, 4)).model);
}

TEST(Train, RotatEPhasesKeepUnitModulus) {
    const auto ds = TripleDataset::synthetic_pair_cycles(10, 0);
    auto c = quick(8, 20, 2);
    c.margin = 4.0;
    const auto m = train(ds, ModelKind::RotatE, c).model;
    EXPECT_EQ(m.relation_width(), 8u);  // one phase per dimension
    for (double x : m.relation) EXPECT_TRUE(std::isfinite(x));
    for (double x : m.entity) EXPECT_TRUE(std::isfinite(x));
}

TEST(ModelIo, JsonAndFileRoundTrip) {
    const auto ds = TripleDataset::synthetic_pair_cycles(5, 0);
    const auto m = train(ds, ModelKind::ComplEx, quick(6, 5, 3)).model;
    EXPECT_EQ(model_from_json(model_to_json(m)), m);
    const auto path = (std::filesystem::temp_directory_path() / "kgfuse_model_io.json").string();
    save_model(m, path);
    EXPECT_EQ(load_model(path), m);
    std::remove(path.c_str());
}

TEST(ReportJson, Fields) {
    const auto rep = evaluate_ranking({1, 2, 4});
    const auto j = ranking_report_to_json(rep, ModelKind::TransE);
    EXPECT_EQ(j.at("model"), "TransE");
    EXPECT_EQ(j.at("setting"), "filtered");
    EXPECT_EQ(j.at("queries"), 3);
    EXPECT_EQ(j.at("ranks"), nlohmann::json::array({1, 2, 4}));
    EXPECT_EQ(parse_model_kind("complex"), ModelKind::ComplEx);
    EXPECT_THROW(parse_model_kind("ConvE"), Error);
}
