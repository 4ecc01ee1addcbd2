#include "fixtures.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

using namespace odin;
using odin::testing::graph_of;
using odin::testing::T;

namespace {

void add_clique(std::vector<T>& triples, const std::string& prefix, int size) {
    for (int i = 0; i < size; ++i)
        for (int j = i + 1; j < size; ++j) triples.push_back({prefix + std::to_string(i), "r", prefix + std::to_string(j)});
}

// Assignment from entity-name prefix: first character 'a' -> 0, 'b' -> 1, ...
CommunityAssignment by_prefix(const GraphSnapshot& g) {
    CommunityAssignment a;
    for (EntityIndex e = 0; e < g.num_entities(); ++e) {
        const auto c = static_cast<CommunityId>(g.entity_name(e)[0] - 'a');
        a.community.push_back(c);
        a.num_communities = std::max<std::size_t>(a.num_communities, c + 1);
    }
    return a;
}

// Fraction of nodes whose detected label matches the planted one under the
// best mapping of detected communities to planted blocks (majority vote).
double agreement(const CommunityAssignment& found, const std::vector<CommunityId>& planted) {
    std::map<CommunityId, std::map<CommunityId, std::size_t>> votes;
    for (std::size_t i = 0; i < planted.size(); ++i) ++votes[found.community[i]][planted[i]];
    std::size_t hits = 0;
    for (const auto& [c, tally] : votes) {
        std::size_t best = 0;
        for (const auto& [p, count] : tally) best = std::max(best, count);
        hits += best;
    }
    return static_cast<double>(hits) / static_cast<double>(planted.size());
}

std::filesystem::path fresh_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace

TEST(Detect, TwoDisconnectedCliques) {
    std::vector<T> triples;
    add_clique(triples, "a", 6);
    add_clique(triples, "b", 6);
    auto g = graph_of(triples);
    auto c = detect_communities(g);
    EXPECT_EQ(c.num_communities, 2u);
    for (EntityIndex e = 0; e < g.num_entities(); ++e)
        EXPECT_EQ(c.of(e), c.of(g.entity(g.entity_name(e)[0] == 'a' ? "a0" : "b0")));
    EXPECT_NE(c.of(g.entity("a0")), c.of(g.entity("b0")));
}

TEST(Detect, SingleEdgeIsOneCommunity) {
    auto g = graph_of({{"a", "r", "b"}});
    auto c = detect_communities(g);
    EXPECT_EQ(c.num_communities, 1u);
    EXPECT_EQ(c.of(0), c.of(1));
}

TEST(Detect, PlantedPartitionRecovered) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        SyntheticSpec spec;
        spec.num_entities = 100;
        spec.num_communities = 2;
        spec.p_in = 0.3;
        spec.p_out = 0.01;
        spec.rng_seed = seed;
        auto synthetic = generate(spec);
        auto found = detect_communities(synthetic.graph);
        EXPECT_GE(agreement(found, synthetic.planted_community), 0.9) << "seed " << seed;
    }
}

TEST(Detect, DeterministicUnderSeedAndTotal) {
    auto g = random_graph(150, 4.0, 3, 9);
    auto a = detect_communities(g, louvain_detector, 7);
    auto b = detect_communities(g, louvain_detector, 7);
    EXPECT_EQ(a, b);
    ASSERT_EQ(a.community.size(), g.num_entities());
    for (CommunityId c : a.community) EXPECT_LT(c, a.num_communities);
    for (std::size_t size : a.sizes()) EXPECT_GT(size, 0u);
}

TEST(Detect, PluggableStrategy) {
    auto g = graph_of({{"a0", "r", "b0"}, {"b0", "r", "c0"}});
    auto c = detect_communities(g, [](const GraphSnapshot& graph, std::uint64_t) { return by_prefix(graph); });
    EXPECT_EQ(c.num_communities, 3u);
}

TEST(Bridges, SingleCommunityHasNone) {
    std::vector<T> triples;
    add_clique(triples, "a", 5);
    auto g = graph_of(triples);
    EXPECT_TRUE(compute_bridges(g, detect_communities(g)).empty());
}

TEST(Bridges, ThreeCommunityNeighborhood) {
    // x (community 0) touches communities 1 and 2.
    auto g = graph_of({{"ax", "r", "a1"}, {"ax", "r", "b1"}, {"c1", "r", "ax"}});
    auto bridges = compute_bridges(g, by_prefix(g));
    ASSERT_FALSE(bridges.empty());
    EXPECT_EQ(g.entity_name(bridges[0].entity), "ax");
    EXPECT_EQ(bridges[0].strength, 3u);
    EXPECT_EQ(bridges[0].communities, (std::vector<CommunityId>{0, 1, 2}));
}

TEST(Bridges, BarbellEndpointsOnly) {
    std::vector<T> triples;
    add_clique(triples, "a", 5);
    add_clique(triples, "b", 5);
    triples.push_back({"a0", "r", "b0"});
    auto g = graph_of(triples);
    auto assignment = detect_communities(g);
    ASSERT_EQ(assignment.num_communities, 2u);
    auto bridges = compute_bridges(g, assignment);
    ASSERT_EQ(bridges.size(), 2u);
    EXPECT_EQ(g.entity_name(bridges[0].entity), "a0");
    EXPECT_EQ(g.entity_name(bridges[1].entity), "b0");
    for (const auto& b : bridges) EXPECT_EQ(b.strength, 2u);
}

TEST(Bridges, SoundAndCompleteByBruteForce) {
    Rng rng(3);
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        auto g = random_graph(60, 2.0, 2, seed);
        CommunityAssignment a;
        a.num_communities = 4;
        for (EntityIndex e = 0; e < g.num_entities(); ++e) a.community.push_back(static_cast<CommunityId>(rng.below(4)));
        auto bridges = compute_bridges(g, a);
        std::map<EntityIndex, std::uint32_t> listed;
        for (const auto& b : bridges) listed[b.entity] = b.strength;
        for (EntityIndex e = 0; e < g.num_entities(); ++e) {
            std::set<CommunityId> span{a.of(e)};
            for (const auto& t : g.triples()) {
                if (t.subject == e) span.insert(a.of(t.object));
                if (t.object == e) span.insert(a.of(t.subject));
            }
            if (span.size() >= 2) {
                ASSERT_TRUE(listed.count(e));
                EXPECT_EQ(listed[e], span.size());
            } else {
                EXPECT_FALSE(listed.count(e));
            }
        }
        for (std::size_t i = 1; i < bridges.size(); ++i) {
            const auto& p = bridges[i - 1];
            const auto& q = bridges[i];
            EXPECT_TRUE(p.strength > q.strength || (p.strength == q.strength && p.entity < q.entity));
        }
    }
}

TEST(Affinity, DisconnectedCliquesEmpty) {
    std::vector<T> triples;
    add_clique(triples, "a", 4);
    add_clique(triples, "b", 4);
    auto g = graph_of(triples);
    EXPECT_TRUE(compute_affinity(g, detect_communities(g)).empty());
}

TEST(Affinity, SinglePairNormalizesToOne) {
    auto g = graph_of({{"a0", "r", "a1"}, {"b0", "r", "b1"}, {"a0", "r", "b0"}, {"a1", "r", "b1"}});
    auto table = compute_affinity(g, by_prefix(g));
    ASSERT_EQ(table.size(), 1u);
    EXPECT_DOUBLE_EQ(table.at(0, 1), 1.0);
    EXPECT_DOUBLE_EQ(table.at(1, 0), 1.0);
}

TEST(Affinity, DensitiesNormalizedByMaximum) {
    // Three communities of 10; 2 cross pairs a-b (density 0.02), 1 pair a-c (0.01).
    std::vector<T> triples;
    for (const char* p : {"a", "b", "c"})
        for (int i = 0; i < 9; ++i) triples.push_back({p + std::to_string(i), "r", p + std::to_string(i + 1)});
    triples.push_back({"a0", "r", "b0"});
    triples.push_back({"b5", "r", "a3"});
    triples.push_back({"a0", "r", "b0"});  // duplicate collapses
    triples.push_back({"c2", "r", "a7"});
    auto g = graph_of(triples);
    auto table = compute_affinity(g, by_prefix(g));
    EXPECT_DOUBLE_EQ(table.at(0, 1), 1.0);
    EXPECT_DOUBLE_EQ(table.at(0, 2), 0.5);
    EXPECT_DOUBLE_EQ(table.at(1, 2), 0.0);
    EXPECT_DOUBLE_EQ(table.max_score(), 1.0);
}

TEST(Affinity, SymmetricAndMaxNormalizedOnRandomGraphs) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        SyntheticSpec spec;
        spec.num_entities = 120;
        spec.num_communities = 4;
        spec.p_in = 0.08;
        spec.p_out = 0.01;
        spec.rng_seed = seed;
        auto g = generate(spec).graph;
        auto table = compute_affinity(g, detect_communities(g));
        ASSERT_FALSE(table.empty());
        EXPECT_DOUBLE_EQ(table.max_score(), 1.0);
        for (const auto& [key, v] : table.entries()) {
            EXPECT_EQ(table.at(key.second, key.first), v);
            EXPECT_GT(v, 0.0);
            EXPECT_LE(v, 1.0);
        }
    }
}

TEST(Metadata, RoundTrip) {
    auto g = graph_of({{"ax", "r", "a1"}, {"ax", "r", "b1"}, {"c1", "r", "ax"}, {"b1", "r", "c1"}, {"a1", "r", "b1"}});
    auto assignment = by_prefix(g);
    auto meta = CommunityMetadata::from(g, assignment, compute_bridges(g, assignment), compute_affinity(g, assignment));
    ASSERT_EQ(meta.bridges->size(), 4u);
    ASSERT_EQ(meta.affinity->size(), 3u);
    const auto dir = fresh_dir("odin_meta_roundtrip");
    save_metadata(dir, g, meta);
    auto back = load_metadata(dir, g);
    EXPECT_EQ(back.assignment, meta.assignment);
    EXPECT_EQ(back.bridges, meta.bridges);
    EXPECT_EQ(back.affinity, meta.affinity);
    EXPECT_EQ(back.bridge_strength, meta.bridge_strength);
    std::filesystem::remove_all(dir);
}

TEST(Metadata, MissingFilesMeanAbsent) {
    auto g = graph_of({{"a", "r", "b"}});
    const auto dir = fresh_dir("odin_meta_missing");
    auto meta = load_metadata(dir, g);
    EXPECT_FALSE(meta.has_bridges());
    EXPECT_FALSE(meta.has_affinity());
    auto none = load_metadata_or_absent(dir / "does-not-exist", g);
    EXPECT_FALSE(none.has_bridges());
    std::filesystem::remove_all(dir);
}

TEST(Metadata, AffinityOutOfRange) {
    auto g = graph_of({{"a", "r", "b"}});
    const auto dir = fresh_dir("odin_meta_bad");
    std::ofstream(dir / kAffinityFile) << R"({"ci":0,"cj":1,"score":1.2})" << '\n';
    try {
        load_metadata(dir, g);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::corrupt);
        EXPECT_NE(std::string(e.what()).find("affinity out of range"), std::string::npos) << e.what();
    }
    std::vector<std::string> warnings;
    auto meta = load_metadata_or_absent(dir, g, &warnings);
    EXPECT_FALSE(meta.has_affinity());
    ASSERT_EQ(warnings.size(), 1u);
    std::filesystem::remove_all(dir);
}

TEST(Metadata, SchemaViolations) {
    auto g = graph_of({{"a", "r", "b"}});
    const auto dir = fresh_dir("odin_meta_schema");
    std::ofstream(dir / kBridgesFile) << R"({"entity":"a","communities":[0,1],"strength":3})" << '\n';
    EXPECT_THROW(load_metadata(dir, g), Error);
    std::ofstream(dir / kBridgesFile, std::ios::trunc) << R"({"entity":"ghost","communities":[0,1],"strength":2})" << '\n';
    EXPECT_THROW(load_metadata(dir, g), Error);
    std::filesystem::remove(dir / kBridgesFile);
    std::ofstream(dir / kCommunitiesFile) << R"({"entity":"a","community":0})" << '\n';
    EXPECT_THROW(load_metadata(dir, g), Error);  // b is not covered
    std::filesystem::remove_all(dir);
}
