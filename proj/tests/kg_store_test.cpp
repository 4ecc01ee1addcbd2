#include "fixtures.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>

using namespace odin;
using odin::testing::graph_of;

namespace {

GraphSnapshot ingest_text(const std::string& text) {
    std::istringstream in(text);
    return ingest(in);
}

ErrorKind kind_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    ADD_FAILURE() << "expected odin::Error";
    return ErrorKind::io;
}

}  // namespace

TEST(Ingest, SingleRecord) {
    auto g = ingest_text(R"({"s":"a","r":"likes","o":"b"})" "\n");
    EXPECT_EQ(g.num_entities(), 2u);
    EXPECT_EQ(g.total_triples(), 1u);
    EXPECT_EQ(g.num_relations(), 1u);
    EXPECT_EQ(g.relation_count(g.relation("likes")), 1u);
    EXPECT_FALSE(g.max_timestamp().has_value());
}

TEST(Ingest, DuplicatesCollapseToLatestTimestampAndUnionProvenance) {
    auto g = ingest_text(R"({"s":"a","r":"r","o":"b","t":10,"prov":["d1","d2"]})" "\n"
                         R"({"s":"a","r":"r","o":"b","t":20,"prov":["d3","d1"]})" "\n");
    ASSERT_EQ(g.total_triples(), 1u);
    const auto& t = g.triple(0);
    EXPECT_EQ(t.timestamp, 20);
    EXPECT_EQ(t.provenance, (std::vector<std::string>{"d1", "d2", "d3"}));
    EXPECT_EQ(g.max_timestamp(), 20);
}

TEST(Ingest, MissingTimestampIsAbsentNotZero) {
    auto g = ingest_text(R"({"s":"a","r":"r","o":"b"})" "\n" R"({"s":"b","r":"r","o":"c","t":5})" "\n");
    EXPECT_FALSE(g.triple(*g.find_triple(g.entity("a"), g.relation("r"), g.entity("b"))).timestamp);
    EXPECT_EQ(g.max_timestamp(), 5);
}

TEST(Ingest, ThreeCycleStatistics) {
    auto g = graph_of({{"a", "r", "b"}, {"b", "r", "c"}, {"c", "r", "a"}});
    EXPECT_DOUBLE_EQ(g.avg_out_degree(), 1.0);
    EXPECT_EQ(g.relation_count(g.relation("r")), 3u);
    EXPECT_EQ(g.max_out_degree(), 1u);
}

TEST(Ingest, MalformedLineIsNamed) {
    try {
        ingest_text(R"({"s":"a","r":"r","o":"b"})" "\n" R"({"s":"a","r":"r"})" "\n");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::parse);
        EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
    }
    try {
        ingest_text("\n\nnot json\n");
        FAIL();
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
    }
}

TEST(Ingest, RejectsBadFields) {
    EXPECT_EQ(kind_of([] { ingest_text(R"({"s":"","r":"r","o":"b"})"); }), ErrorKind::parse);
    EXPECT_EQ(kind_of([] { ingest_text(R"({"s":"a","r":"r","o":"b","t":-1})"); }), ErrorKind::parse);
    EXPECT_EQ(kind_of([] { ingest_text(R"({"s":"a","r":"r","o":"b","t":1.5})"); }), ErrorKind::parse);
    EXPECT_EQ(kind_of([] { ingest_text(R"({"s":"a","r":"r","o":"b","prov":"d"})"); }), ErrorKind::parse);
    EXPECT_EQ(kind_of([] { ingest_text("[1,2]"); }), ErrorKind::parse);
}

TEST(Ingest, EmptyInput) {
    try {
        ingest_text("\n  \n");
        FAIL();
    } catch (const Error& e) {
        EXPECT_STREQ(e.what(), "empty graph");
    }
}

TEST(Ingest, ExplicitEntitiesAreKept) {
    auto g = graph_of({{"a", "r", "b"}}, {"lonely"});
    EXPECT_EQ(g.num_entities(), 3u);
    EXPECT_TRUE(g.neighbors("lonely").empty());
    EXPECT_EQ(g.isolated_entities(), std::vector<EntityIndex>{g.entity("lonely")});
}

TEST(Neighbors, IsolatedNodeIsEmpty) {
    auto g = graph_of({{"a", "r", "b"}});
    EXPECT_TRUE(g.neighbors("b").empty());
}

TEST(Neighbors, CanonicalOrder) {
    auto g = graph_of({{"n", "r2", "x"}, {"n", "r1", "y"}});
    auto nb = g.neighbors("n");
    ASSERT_EQ(nb.size(), 2u);
    EXPECT_EQ(g.relation_name(nb[0].relation), "r1");
    EXPECT_EQ(g.entity_name(nb[0].other), "y");
    EXPECT_EQ(g.relation_name(nb[1].relation), "r2");
    EXPECT_EQ(g.entity_name(nb[1].other), "x");
}

TEST(Neighbors, HubDegree) {
    std::vector<odin::testing::T> triples;
    for (int i = 0; i < 50; ++i) triples.push_back({"hub", "r", "leaf" + std::to_string(i)});
    auto g = graph_of(triples);
    EXPECT_EQ(g.neighbors("hub").size(), 50u);
    EXPECT_EQ(g.max_out_degree(), 50u);
}

TEST(Neighbors, UnknownEntity) {
    auto g = graph_of({{"a", "r", "b"}});
    try {
        g.neighbors("zzz");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::not_found);
        EXPECT_NE(std::string(e.what()).find("entity not found"), std::string::npos);
    }
}

TEST(Neighbors, ListExactlyTheSubjectsTriples) {
    auto g = random_graph(60, 4.0, 3, 11);
    std::size_t total = 0;
    for (EntityIndex e = 0; e < g.num_entities(); ++e) {
        for (const auto& edge : g.neighbors(e)) {
            const auto& t = g.triple(edge.triple);
            EXPECT_EQ(t.subject, e);
            EXPECT_EQ(t.relation, edge.relation);
            EXPECT_EQ(t.object, edge.other);
        }
        total += g.neighbors(e).size();
    }
    EXPECT_EQ(total, g.total_triples());
}

TEST(RelationFrequency, Examples) {
    auto single = graph_of({{"a", "r", "b"}, {"b", "r", "c"}});
    EXPECT_DOUBLE_EQ(single.relation_frequency("r"), 1.0);

    auto two = graph_of({{"a", "r1", "b"}, {"b", "r1", "c"}, {"c", "r1", "a"}, {"a", "r2", "c"}});
    EXPECT_DOUBLE_EQ(two.relation_frequency("r1"), 0.75);

    auto three = graph_of({{"a", "r1", "b"}, {"a", "r2", "b"}, {"a", "r3", "b"}, {"b", "r3", "a"}});
    EXPECT_DOUBLE_EQ(three.relation_frequency("r3"), 0.5);
}

TEST(RelationFrequency, UnseenRelation) {
    auto g = graph_of({{"a", "r", "b"}});
    EXPECT_THROW(g.relation_frequency("missing"), Error);
}

TEST(GraphProperties, FrequenciesSumToOneAndCountsToTotal) {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        auto g = random_graph(80, 5.0, 7, seed);
        double freq = 0.0;
        std::size_t count = 0;
        for (RelationIndex r = 0; r < g.num_relations(); ++r) {
            freq += g.relation_frequency(r);
            count += g.relation_count(r);
        }
        EXPECT_NEAR(freq, 1.0, 1e-12);
        EXPECT_EQ(count, g.total_triples());
    }
}

TEST(GraphProperties, SerializeRoundTrip) {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        SyntheticSpec spec;
        spec.num_entities = 50;
        spec.p_in = 0.08;
        spec.timestamp_range = {{1000, 5000}};
        spec.rng_seed = seed;
        auto g = generate(spec).graph;
        const std::string text = serialize(g);
        auto back = ingest_text(text);
        EXPECT_EQ(serialize(back), text);
        EXPECT_EQ(back.num_entities(), g.num_entities());
        EXPECT_EQ(back.total_triples(), g.total_triples());
        EXPECT_EQ(back.max_timestamp(), g.max_timestamp());
        EXPECT_DOUBLE_EQ(back.avg_out_degree(), g.avg_out_degree());
    }
}

TEST(GraphProperties, IngestionOrderIrrelevant) {
    auto g = random_graph(40, 3.0, 4, 5, std::make_pair<std::int64_t, std::int64_t>(0, 100));
    std::vector<std::string> lines;
    std::istringstream in(serialize(g));
    std::string line;
    std::getline(in, line);  // header must stay first
    while (std::getline(in, line)) lines.push_back(line);
    Rng rng(99);
    for (int trial = 0; trial < 5; ++trial) {
        rng.shuffle(lines);
        std::string text;
        for (const auto& l : lines) text += l + "\n";
        EXPECT_EQ(serialize(ingest_text(text)), serialize(g));
    }
}

TEST(GraphProperties, HeaderOnlyFirst) {
    EXPECT_THROW(ingest_text(R"({"s":"a","r":"r","o":"b"})" "\n" R"({"format":"odin-kg","version":1})"), Error);
    EXPECT_THROW(ingest_text(R"({"format":"odin-kg","version":2})" "\n" R"({"s":"a","r":"r","o":"b"})"), Error);
}
