#include "fixtures.hpp"

#include <gtest/gtest.h>

using namespace odin;
using odin::testing::constant_edges;
using odin::testing::graph_of;

namespace {

std::vector<std::string> triple_lines(const GraphSnapshot& g) {
    std::vector<std::string> out;
    for (TripleIndex t = 0; t < g.total_triples(); ++t) {
        const auto& tr = g.triple(t);
        out.push_back(g.entity_name(tr.subject) + " " + g.relation_name(tr.relation) + " " + g.entity_name(tr.object) + " " +
                      (tr.timestamp ? std::to_string(*tr.timestamp) : "-"));
    }
    return out;
}

}  // namespace

TEST(Generator, NoCrossEdgesWhenPOutIsZero) {
    SyntheticSpec spec;
    spec.num_entities = 90;
    spec.num_communities = 3;
    spec.p_in = 0.1;
    spec.p_out = 0.0;
    spec.rng_seed = 5;
    const auto s = generate(spec);
    ASSERT_GT(s.graph.total_triples(), 0u);
    for (TripleIndex t = 0; t < s.graph.total_triples(); ++t) {
        const auto& tr = s.graph.triple(t);
        EXPECT_EQ(s.planted_community[tr.subject], s.planted_community[tr.object]);
    }
}

TEST(Generator, CertainClosureClosesEveryTwoPath) {
    SyntheticSpec spec;
    spec.num_entities = 60;
    spec.num_communities = 1;
    spec.p_in = 0.06;
    spec.num_relations = 3;
    spec.rng_seed = 9;
    const auto pool = relation_pool(3);
    spec.planted_rule = PlantedRule{pool[0], pool[1], pool[2], 1.0};
    const auto s = generate(spec);
    const auto& g = s.graph;
    const auto r1 = g.relation(pool[0]), r2 = g.relation(pool[1]), r3 = g.relation(pool[2]);
    std::size_t chains = 0;
    for (TripleIndex t = 0; t < g.total_triples(); ++t) {
        const auto& first = g.triple(t);
        if (first.relation != r1) continue;
        for (const auto& e : g.neighbors(first.object)) {
            if (g.triple(e.triple).relation != r2 || e.other == first.subject) continue;
            ++chains;
            EXPECT_TRUE(g.find_triple(first.subject, r3, e.other).has_value());
        }
    }
    EXPECT_GT(chains, 0u);
    EXPECT_FALSE(s.planted_closures.empty());
}

TEST(Generator, FixedSeedIsReproducible) {
    SyntheticSpec spec;
    spec.num_entities = 80;
    spec.planted_bridges = 2;
    spec.timestamp_range = {{100, 5000}};
    spec.rng_seed = 17;
    const auto a = generate(spec), b = generate(spec);
    EXPECT_EQ(triple_lines(a.graph), triple_lines(b.graph));
    EXPECT_EQ(a.planted_bridges, b.planted_bridges);
    spec.rng_seed = 18;
    EXPECT_NE(triple_lines(generate(spec).graph), triple_lines(a.graph));
}

TEST(Generator, RejectsBadSpecs) {
    SyntheticSpec spec;
    spec.p_in = 0.01;
    spec.p_out = 0.02;
    EXPECT_THROW(generate(spec), Error);
    spec = {};
    spec.num_entities = 1;
    EXPECT_THROW(generate(spec), Error);
    spec = {};
    spec.timestamp_range = {{10, 5}};
    EXPECT_THROW(generate(spec), Error);
}

TEST(Oracle, CountsEveryPathOfTheTree) {
    auto g = regular_tree(5, 3);
    const auto root = g.entity("t000");
    const auto ppr = ppr_local_push(g, {root});
    const auto meta = CommunityMetadata::absent();
    CompassScorer scorer(g, constant_edges(1.0), ppr, meta);
    const auto report = exhaustive_oracle(scorer, SearchConfig{{root}, 3, 1, 500, false});
    EXPECT_EQ(report.score_evaluations, 155u);
    EXPECT_EQ(report.results.size(), 155u);
    EXPECT_DOUBLE_EQ(estimate_path_count(g, {root}, 3), 155.0);
}

TEST(Oracle, GuardRefusesHugeEnumerations) {
    // Complete digraph on 40 nodes: 39^5 length-5 walks is beyond the guard.
    std::vector<odin::testing::T> triples;
    for (std::size_t i = 0; i < 40; ++i)
        for (std::size_t j = 0; j < 40; ++j)
            if (i != j) triples.push_back({padded_name("k", i, 2), "r", padded_name("k", j, 2)});
    auto g = graph_of(triples);
    const auto ppr = ppr_local_push(g, {0});
    const auto meta = CommunityMetadata::absent();
    CompassScorer scorer(g, constant_edges(1.0), ppr, meta);
    try {
        exhaustive_oracle(scorer, SearchConfig{{0}, 5, 1, 10, false});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::guard);
    }
    EXPECT_NO_THROW(exhaustive_oracle(scorer, SearchConfig{{0}, 2, 1, 10, false}));
}

TEST(RandomWalk, DeadEndSeedFindsNothing) {
    auto g = graph_of({{"a", "r", "b"}});
    const auto ppr = ppr_local_push(g, {g.entity("b")});
    const auto meta = CommunityMetadata::absent();
    CompassScorer scorer(g, constant_edges(1.0), ppr, meta);
    EXPECT_TRUE(random_walk_baseline(scorer, SearchConfig{{g.entity("b")}, 3, 1, 10, false}, 100).results.empty());
}

TEST(RandomWalk, ReproducibleForFixedSeed) {
    auto g = random_graph(100, 4.0, 3, 2);
    const auto seed = busiest_entity(g);
    const auto ppr = ppr_local_push(g, {seed});
    const auto meta = CommunityMetadata::absent();
    CompassScorer scorer(g, constant_edges(1.0), ppr, meta);
    const SearchConfig cfg{{seed}, 3, 1, 20, false};
    const auto a = search_report_to_json(g, random_walk_baseline(scorer, cfg, 300, 11));
    const auto b = search_report_to_json(g, random_walk_baseline(scorer, cfg, 300, 11));
    EXPECT_EQ(a["paths"].dump(), b["paths"].dump());
    EXPECT_EQ(a["score_evaluations"], b["score_evaluations"]);
    // Every walk prefix it returns is a real simple path from the seed.
    for (const auto& sp : random_walk_baseline(scorer, cfg, 300, 11).results) {
        validate_path(g, sp.path);
        EXPECT_EQ(sp.path.seed(), seed);
    }
}

TEST(PprOnly, MatchesFullScorerWhenOtherSignalsAreNeutral) {
    // One relation, no timestamps, no metadata, edge scorer 1: only S_struct varies.
    auto g = random_graph(120, 4.0, 1, 6);
    const auto seed = busiest_entity(g);
    const auto ppr = ppr_local_push(g, {seed});
    const auto meta = CommunityMetadata::absent();
    CompassScorer scorer(g, constant_edges(1.0), ppr, meta);
    const SearchConfig cfg{{seed}, 3, 8, 20, false};
    EXPECT_EQ(search_report_to_json(g, ppr_only_baseline(scorer, cfg))["paths"].dump(),
              search_report_to_json(g, discover(scorer, cfg))["paths"].dump());
}

TEST(Coverage, CountsReferenceHits) {
    auto g = graph_of({{"a", "r", "b"}, {"a", "r", "c"}, {"b", "r", "c"}});
    const auto ppr = ppr_local_push(g, {g.entity("a")});
    const auto meta = CommunityMetadata::absent();
    CompassScorer scorer(g, constant_edges(1.0), ppr, meta);
    const auto all = exhaustive_oracle(scorer, SearchConfig{{g.entity("a")}, 2, 1, 10, false}).results;
    ASSERT_EQ(all.size(), 3u);
    EXPECT_DOUBLE_EQ(coverage(all, all), 1.0);
    EXPECT_DOUBLE_EQ(coverage({all[0]}, all), 1.0 / 3.0);
    EXPECT_DOUBLE_EQ(coverage({}, {}), 1.0);
}

TEST(Ablation, StandardRowsAndNeutralTemporal) {
    SyntheticSpec spec;
    spec.num_entities = 120;
    spec.num_communities = 3;
    spec.p_in = 0.06;
    spec.p_out = 0.004;
    spec.planted_bridges = 3;
    spec.timestamp_range = {{5000, 5000}};  // every edge shares one timestamp
    spec.rng_seed = 3;
    const auto s = generate(spec);
    const auto pipeline = prepare_pipeline(s.graph, {busiest_entity(s.graph)}, PipelineOptions{});
    const auto scorer = pipeline.scorer();
    const SearchConfig cfg{{busiest_entity(s.graph)}, 3, 16, 20, false};
    const auto report = run_ablation(scorer, cfg);
    ASSERT_EQ(report.rows.size(), 4u);
    EXPECT_EQ(report.rows[0].method, "Full");
    EXPECT_EQ(report.rows[1].method, "No-NPLL");
    EXPECT_EQ(report.rows[2].method, "No-Temporal");
    EXPECT_EQ(report.rows[3].method, "No-Bridge");
    for (const auto& row : report.rows) {
        ASSERT_TRUE(row.coverage_at_k.has_value());
        ASSERT_TRUE(row.cross_community.has_value());
        EXPECT_GE(*row.coverage_at_k, 0.0);
        EXPECT_LE(*row.coverage_at_k, 1.0);
    }
    const auto full = discover(scorer, cfg);
    const auto no_temporal = discover(scorer.with_toggles(SignalToggles::all().set(Signal::temporal, false)), cfg);
    EXPECT_EQ(search_report_to_json(s.graph, full)["paths"].dump(),
              search_report_to_json(s.graph, no_temporal)["paths"].dump());
    EXPECT_THROW(report.row("Nope"), Error);
}

TEST(CompareMethods, OracleRowHasFullCoverage) {
    auto g = random_graph(80, 3.0, 3, 12);
    const auto pipeline = prepare_pipeline(g, {busiest_entity(g)}, PipelineOptions{});
    const auto scorer = pipeline.scorer();
    const auto report = compare_methods(scorer, SearchConfig{{busiest_entity(g)}, 3, 8, 10, false}, 200);
    ASSERT_EQ(report.rows.size(), 4u);
    EXPECT_DOUBLE_EQ(*report.row("Exhaustive").coverage_at_k, 1.0);
    EXPECT_LE(report.row("Beam").score_evaluations, report.row("Exhaustive").score_evaluations);
}

TEST(RecallCurve, ReachesOneAndNeverDecreases) {
    std::vector<GraphSnapshot> graphs;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) graphs.push_back(random_graph(60, 3.0, 3, seed));
    std::vector<Pipeline> pipelines;
    pipelines.reserve(graphs.size());
    std::vector<CompassScorer> scorers;
    std::vector<RecallCase> cases;
    for (const auto& g : graphs) {
        PipelineOptions opts;
        opts.train_model = false;
        opts.compass.normalizer_mode = NormalizerMode::fixed;
        pipelines.push_back(prepare_pipeline(g, {busiest_entity(g)}, opts));
    }
    scorers.reserve(pipelines.size());
    for (std::size_t i = 0; i < graphs.size(); ++i) {
        scorers.push_back(pipelines[i].scorer());
        cases.push_back(RecallCase{&scorers.back(), {busiest_entity(graphs[i])}});
    }
    const auto curve = recall_curve(cases, {1, 2, 4, 8, 16, 32, 64, 128}, 3, 10);
    ASSERT_EQ(curve.size(), 8u);
    for (std::size_t i = 1; i < curve.size(); ++i) {
        EXPECT_GE(curve[i].mean_recall, curve[i - 1].mean_recall - 1e-12);
        EXPECT_GT(curve[i].bound, curve[i - 1].bound);
    }
    EXPECT_DOUBLE_EQ(curve.back().mean_recall, 1.0);
    EXPECT_THROW(recall_curve({}, {1}, 3, 10), Error);
}
