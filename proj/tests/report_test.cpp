#include "fixtures.hpp"

#include <gtest/gtest.h>

using namespace odin;
using odin::testing::constant_edges;
using odin::testing::graph_of;

namespace {

// Factor order: edge, struct, bridge, affinity, prior, temp.
SignalBreakdown sample() { return SignalBreakdown::from_factors({0.9, 0.5, 1.2, 1.0, 0.4, 0.8}); }

}  // namespace

TEST(BreakdownJson, FactorsAndShapley) {
    const auto j = breakdown_to_json(sample());
    EXPECT_NEAR(j["compass"].get<double>(), 0.1728, 1e-15);
    EXPECT_DOUBLE_EQ(j["factors"]["bridge"].get<double>(), 1.2);
    EXPECT_DOUBLE_EQ(j["shapley"]["prior"].get<double>(), std::log(0.4));
    EXPECT_DOUBLE_EQ(j["shapley"]["affinity"].get<double>(), 0.0);
    EXPECT_FALSE(j.contains("veto"));
    const auto back = breakdown_from_json(j);
    EXPECT_EQ(back.factors, sample().factors);
    EXPECT_EQ(back.compass, sample().compass);
}

TEST(BreakdownJson, VetoHasNullShapley) {
    const auto j = breakdown_to_json(SignalBreakdown::from_factors({0.0, 0.5, 1.0, 1.0, 0.0, 1.0}));
    EXPECT_EQ(j["compass"].get<double>(), 0.0);
    EXPECT_TRUE(j["shapley"].is_null());
    EXPECT_EQ(j["veto"], nlohmann::json::array({"edge", "prior"}));
}

TEST(Narrative, NamesStrongestAndWeakestSignals) {
    EXPECT_EQ(explain_narrative(sample(), 2),
              "Path #2 (compass 0.1728) ranks primarily due to bridge entities (phi_bridge=+0.182) and community affinity "
              "(phi_affinity=+0.000); held back most by relation prior (phi_prior=-0.916). "
              "Sum of phi = ln(compass) = -1.756.");
}

TEST(Narrative, VetoAndNeutralCases) {
    EXPECT_EQ(explain_narrative(SignalBreakdown::from_factors({1, 1, 1, 1, 1, 0}), 1),
              "Path #1 (compass 0.0000) is vetoed by temporal relevance (S_temp=0); it has no finite log decomposition.");
    EXPECT_EQ(explain_narrative(SignalBreakdown::from_factors({1, 1, 1, 1, 1, 1}), 3),
              "Path #3 (compass 1.0000) is neutral on every signal (all phi = 0).");
}

TEST(SearchReportJson, PathsCarryEdgesAndProvenance) {
    auto g = graph_of({{"a", "r", "b", 100, {"doc1", "doc2"}}, {"b", "s", "c", std::nullopt, {}}});
    const auto ppr = ppr_local_push(g, {g.entity("a")});
    const auto meta = CommunityMetadata::absent();
    CompassScorer scorer(g, constant_edges(1.0), ppr, meta);
    const auto report = discover(scorer, SearchConfig{{g.entity("a")}, 2, 4, 5, false});
    const auto j = search_report_to_json(g, report);
    ASSERT_EQ(j["paths"].size(), 2u);
    EXPECT_FALSE(j.contains("elapsed_ms"));
    const auto& top = j["paths"][0];
    EXPECT_EQ(top["rank"], 1);
    EXPECT_EQ(top["entities"][0], "a");
    EXPECT_EQ(top["edges"][0]["prov"], nlohmann::json::array({"doc1", "doc2"}));
    EXPECT_EQ(top["edges"][0]["t"], 100);
    const auto& second = j["paths"][1];
    EXPECT_EQ(second["hop"], 2);
    EXPECT_TRUE(second["edges"][1]["t"].is_null());
    EXPECT_EQ(j.dump(), search_report_to_json(g, discover(scorer, SearchConfig{{g.entity("a")}, 2, 4, 5, false})).dump());

    const auto text = render_search_report(g, report);
    EXPECT_NE(text.find("a -[r]-> b  prov: doc1 doc2"), std::string::npos);
    EXPECT_NE(text.find("shapley:"), std::string::npos);
}

TEST(EvalTable, AlignedRowsWithDashesForMissingValues) {
    EvalReport report;
    report.k = 10;
    report.rows.push_back(EvalRow{"Full", 0.9, std::nullopt, std::nullopt, 10, 120, 120, 1.25});
    report.rows.push_back(EvalRow{"No-Bridge", 0.5, 0.25, std::nullopt, 10, 120, 120, 0.5});
    const auto table = render_eval_table(report);
    std::istringstream in(table);
    std::vector<std::string> lines;
    for (std::string line; std::getline(in, line);) lines.push_back(line);
    ASSERT_EQ(lines.size(), 4u);
    EXPECT_EQ(lines[0].rfind("Method", 0), 0u);
    EXPECT_EQ(lines[1].find_first_not_of('-'), std::string::npos);
    EXPECT_EQ(lines[2].size(), lines[3].size());
    EXPECT_NE(lines[2].find("90.0%"), std::string::npos);
    EXPECT_NE(lines[2].find(" -  "), std::string::npos);
    EXPECT_NE(lines[3].find("25.0%"), std::string::npos);

    const auto j = eval_report_to_json(report);
    EXPECT_EQ(j["k"], 10);
    EXPECT_TRUE(j["rows"][0]["cross_community_fraction"].is_null());
    EXPECT_DOUBLE_EQ(j["rows"][1]["coverage_at_k"].get<double>(), 0.5);
}
