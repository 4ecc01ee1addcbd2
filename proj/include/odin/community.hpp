#pragma once
// Offline community metadata consumed by the bridge and affinity signals.
//
// - detect_communities: pluggable detector; the default is multilevel greedy
//   modularity maximization (Louvain) on the symmetrized graph
// - compute_bridges: entities whose 1-hop neighborhood, own community
//   included, spans >= 2 communities; strength = size of that span
// - compute_affinity: cross-community undirected pair count divided by
//   |ci| * |cj|, normalized so the densest pair scores 1
//
// Files (JSON lines, in a metadata directory):
//   communities.jsonl  {"entity": id, "community": int}
//   bridges.jsonl      {"entity": id, "communities": [int], "strength": int}
//   affinity.jsonl     {"ci": int, "cj": int, "score": float}

#include "odin/kg_store.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace odin {

using CommunityId = std::uint32_t;

struct CommunityAssignment {
    std::vector<CommunityId> community;  // indexed by entity
    std::size_t num_communities = 0;

    CommunityId of(EntityIndex e) const { return community.at(e); }

    std::vector<std::size_t> sizes() const {
        std::vector<std::size_t> result(num_communities, 0);
        for (CommunityId c : community) ++result[c];
        return result;
    }

    friend bool operator==(const CommunityAssignment&, const CommunityAssignment&) = default;
};

struct BridgeEntry {
    EntityIndex entity = 0;
    std::vector<CommunityId> communities;  // sorted, size >= 2
    std::uint32_t strength = 0;

    friend bool operator==(const BridgeEntry&, const BridgeEntry&) = default;
};

class AffinityTable {
public:
    void set(CommunityId a, CommunityId b, double score) {
        if (a == b) throw Error(ErrorKind::invalid_argument, "affinity is only defined across communities");
        entries_[key(a, b)] = score;
    }

    // Missing pairs read as 0.
    double at(CommunityId a, CommunityId b) const {
        auto it = entries_.find(key(a, b));
        return it == entries_.end() ? 0.0 : it->second;
    }

    bool empty() const { return entries_.empty(); }
    std::size_t size() const { return entries_.size(); }
    const std::map<std::pair<CommunityId, CommunityId>, double>& entries() const { return entries_; }

    double max_score() const {
        double top = 0.0;
        for (const auto& [k, v] : entries_) top = std::max(top, v);
        return top;
    }

    friend bool operator==(const AffinityTable&, const AffinityTable&) = default;

private:
    static std::pair<CommunityId, CommunityId> key(CommunityId a, CommunityId b) {
        return a < b ? std::make_pair(a, b) : std::make_pair(b, a);
    }

    std::map<std::pair<CommunityId, CommunityId>, double> entries_;
};

using CommunityDetector = std::function<CommunityAssignment(const GraphSnapshot&, std::uint64_t)>;

namespace detail {

struct WeightedGraph {
    std::vector<std::vector<std::pair<std::uint32_t, double>>> adj;  // no self entries
    std::vector<double> self_loops;                                  // weight of i-i, counted once

    std::size_t size() const { return adj.size(); }
    double degree(std::uint32_t i) const {
        double d = 2.0 * self_loops[i];
        for (const auto& [j, w] : adj[i]) d += w;
        return d;
    }
};

inline WeightedGraph symmetrized(const GraphSnapshot& g) {
    const std::size_t n = g.num_entities();
    std::vector<std::map<std::uint32_t, double>> acc(n);
    for (const auto& t : g.triples()) {
        if (t.subject == t.object) continue;
        acc[t.subject][t.object] += 1.0;
        acc[t.object][t.subject] += 1.0;
    }
    WeightedGraph wg;
    wg.adj.resize(n);
    wg.self_loops.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) wg.adj[i].assign(acc[i].begin(), acc[i].end());
    return wg;
}

// One level of local moving; returns community per node (renumbered densely
// in order of first appearance) and whether anything moved.
inline std::pair<std::vector<std::uint32_t>, bool> louvain_level(const WeightedGraph& wg, Rng& rng) {
    const std::size_t n = wg.size();
    std::vector<std::uint32_t> comm(n);
    std::vector<double> degree(n), tot(n);
    double total = 0.0;
    for (std::uint32_t i = 0; i < n; ++i) {
        comm[i] = i;
        degree[i] = wg.degree(i);
        tot[i] = degree[i];
        total += degree[i];
    }
    if (total <= 0.0) return {comm, false};

    std::vector<std::uint32_t> order(n);
    for (std::uint32_t i = 0; i < n; ++i) order[i] = i;
    rng.shuffle(order);

    bool moved_any = false;
    std::vector<double> link(n, 0.0);
    std::vector<std::uint32_t> touched;
    for (int pass = 0; pass < 100; ++pass) {
        bool moved = false;
        for (std::uint32_t i : order) {
            const std::uint32_t old = comm[i];
            touched.clear();
            for (const auto& [j, w] : wg.adj[i]) {
                if (link[comm[j]] == 0.0) touched.push_back(comm[j]);
                link[comm[j]] += w;
            }
            tot[old] -= degree[i];
            std::sort(touched.begin(), touched.end());

            std::uint32_t best = old;
            double best_gain = link[old] - tot[old] * degree[i] / total;
            for (std::uint32_t c : touched) {
                const double gain = link[c] - tot[c] * degree[i] / total;
                if (gain > best_gain + 1e-12) {
                    best_gain = gain;
                    best = c;
                }
            }
            tot[best] += degree[i];
            comm[i] = best;
            if (best != old) moved = true;
            for (std::uint32_t c : touched) link[c] = 0.0;
            link[old] = 0.0;
        }
        if (!moved) break;
        moved_any = true;
    }

    std::vector<std::uint32_t> relabel(n, kNoIndex);
    std::uint32_t next = 0;
    for (std::uint32_t i = 0; i < n; ++i) {
        if (relabel[comm[i]] == kNoIndex) relabel[comm[i]] = next++;
        comm[i] = relabel[comm[i]];
    }
    return {comm, moved_any};
}

inline WeightedGraph aggregate(const WeightedGraph& wg, const std::vector<std::uint32_t>& comm) {
    const std::uint32_t m = comm.empty() ? 0 : *std::max_element(comm.begin(), comm.end()) + 1;
    std::vector<std::map<std::uint32_t, double>> acc(m);
    WeightedGraph next;
    next.self_loops.assign(m, 0.0);
    for (std::uint32_t i = 0; i < wg.size(); ++i) {
        next.self_loops[comm[i]] += wg.self_loops[i];
        for (const auto& [j, w] : wg.adj[i]) {
            if (comm[i] == comm[j]) {
                if (i < j) next.self_loops[comm[i]] += w;
            } else {
                acc[comm[i]][comm[j]] += w;
            }
        }
    }
    next.adj.resize(m);
    for (std::uint32_t c = 0; c < m; ++c) next.adj[c].assign(acc[c].begin(), acc[c].end());
    return next;
}

// Communities numbered by their smallest member entity.
inline CommunityAssignment canonical_assignment(const std::vector<std::uint32_t>& raw) {
    CommunityAssignment result;
    result.community.resize(raw.size());
    std::map<std::uint32_t, CommunityId> relabel;
    for (std::size_t e = 0; e < raw.size(); ++e) {
        auto [it, inserted] = relabel.emplace(raw[e], static_cast<CommunityId>(relabel.size()));
        result.community[e] = it->second;
    }
    result.num_communities = relabel.size();
    return result;
}

}  // namespace detail

inline CommunityAssignment louvain_detector(const GraphSnapshot& g, std::uint64_t rng_seed) {
    Rng rng(rng_seed);
    auto wg = detail::symmetrized(g);
    std::vector<std::uint32_t> membership(g.num_entities());
    for (std::uint32_t i = 0; i < membership.size(); ++i) membership[i] = i;
    for (int level = 0; level < 32; ++level) {
        auto [comm, moved] = detail::louvain_level(wg, rng);
        if (!moved) break;
        for (auto& c : membership) c = comm[c];
        wg = detail::aggregate(wg, comm);
    }
    return detail::canonical_assignment(membership);
}

inline CommunityAssignment detect_communities(const GraphSnapshot& g, const CommunityDetector& detector = louvain_detector,
                                              std::uint64_t rng_seed = 42) {
    auto assignment = detector(g, rng_seed);
    if (assignment.community.size() != g.num_entities())
        throw Error(ErrorKind::invalid_argument, "detector returned a partial assignment");
    for (CommunityId c : assignment.community)
        if (c >= assignment.num_communities) throw Error(ErrorKind::invalid_argument, "community id out of range");
    return assignment;
}

// Sorted by strength desc, then entity id.
inline std::vector<BridgeEntry> compute_bridges(const GraphSnapshot& g, const CommunityAssignment& assignment) {
    std::vector<BridgeEntry> bridges;
    for (EntityIndex e = 0; e < g.num_entities(); ++e) {
        std::set<CommunityId> span{assignment.of(e)};
        for (EntityIndex u : g.undirected_neighbors(e)) span.insert(assignment.of(u));
        if (span.size() < 2) continue;
        bridges.push_back(BridgeEntry{e, {span.begin(), span.end()}, static_cast<std::uint32_t>(span.size())});
    }
    std::stable_sort(bridges.begin(), bridges.end(),
                     [](const BridgeEntry& a, const BridgeEntry& b) { return a.strength > b.strength; });
    return bridges;
}

inline AffinityTable compute_affinity(const GraphSnapshot& g, const CommunityAssignment& assignment) {
    std::set<std::pair<EntityIndex, EntityIndex>> pairs;
    for (const auto& t : g.triples()) {
        if (assignment.of(t.subject) == assignment.of(t.object)) continue;
        pairs.emplace(std::min(t.subject, t.object), std::max(t.subject, t.object));
    }
    std::map<std::pair<CommunityId, CommunityId>, double> counts;
    for (const auto& [a, b] : pairs) {
        CommunityId ca = assignment.of(a), cb = assignment.of(b);
        if (ca > cb) std::swap(ca, cb);
        counts[{ca, cb}] += 1.0;
    }
    const auto sizes = assignment.sizes();
    double top = 0.0;
    for (auto& [key, value] : counts) {
        value /= static_cast<double>(sizes[key.first]) * static_cast<double>(sizes[key.second]);
        top = std::max(top, value);
    }
    AffinityTable table;
    for (const auto& [key, value] : counts) table.set(key.first, key.second, value / top);
    return table;
}

// What the online engine consumes. Each part is optional; absent parts turn
// the corresponding signal into a constant 1.
struct CommunityMetadata {
    std::optional<CommunityAssignment> assignment;
    std::optional<std::vector<BridgeEntry>> bridges;
    std::optional<AffinityTable> affinity;
    std::vector<std::uint32_t> bridge_strength;  // per entity, 0 = not a bridge

    bool has_bridges() const { return bridges.has_value(); }
    bool has_affinity() const { return assignment.has_value() && affinity.has_value(); }

    std::uint32_t strength(EntityIndex e) const { return e < bridge_strength.size() ? bridge_strength[e] : 0; }

    static CommunityMetadata absent() { return {}; }

    static CommunityMetadata from(const GraphSnapshot& g, CommunityAssignment assignment, std::vector<BridgeEntry> bridges,
                                  AffinityTable affinity) {
        CommunityMetadata meta;
        meta.bridge_strength.assign(g.num_entities(), 0);
        for (const auto& b : bridges) meta.bridge_strength.at(b.entity) = b.strength;
        meta.assignment = std::move(assignment);
        meta.bridges = std::move(bridges);
        meta.affinity = std::move(affinity);
        return meta;
    }

    static CommunityMetadata compute(const GraphSnapshot& g, const CommunityDetector& detector = louvain_detector,
                                     std::uint64_t rng_seed = 42) {
        auto assignment = detect_communities(g, detector, rng_seed);
        auto bridges = compute_bridges(g, assignment);
        auto affinity = compute_affinity(g, assignment);
        return from(g, std::move(assignment), std::move(bridges), std::move(affinity));
    }
};

inline constexpr const char* kCommunitiesFile = "communities.jsonl";
inline constexpr const char* kBridgesFile = "bridges.jsonl";
inline constexpr const char* kAffinityFile = "affinity.jsonl";

inline void save_metadata(const std::filesystem::path& dir, const GraphSnapshot& g, const CommunityMetadata& meta) {
    std::filesystem::create_directories(dir);
    auto open = [&](const char* name) {
        std::ofstream out(dir / name, std::ios::trunc);
        if (!out) throw Error(ErrorKind::io, "cannot write " + (dir / name).string());
        return out;
    };
    if (meta.assignment) {
        auto out = open(kCommunitiesFile);
        for (EntityIndex e = 0; e < g.num_entities(); ++e)
            out << nlohmann::json{{"entity", g.entity_name(e)}, {"community", meta.assignment->of(e)}}.dump() << '\n';
    }
    if (meta.bridges) {
        auto out = open(kBridgesFile);
        for (const auto& b : *meta.bridges)
            out << nlohmann::json{{"entity", g.entity_name(b.entity)}, {"communities", b.communities}, {"strength", b.strength}}
                       .dump()
                << '\n';
    }
    if (meta.affinity) {
        auto out = open(kAffinityFile);
        for (const auto& [key, score] : meta.affinity->entries())
            out << nlohmann::json{{"ci", key.first}, {"cj", key.second}, {"score", score}}.dump() << '\n';
    }
}

namespace detail {

template <typename Fn>
void for_each_jsonl(const std::filesystem::path& file, Fn&& fn) {
    std::ifstream in(file);
    if (!in) throw Error(ErrorKind::io, "cannot open " + file.string());
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            fn(nlohmann::json::parse(line));
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorKind::corrupt,
                        file.filename().string() + " line " + std::to_string(line_no) + ": " + e.what());
        } catch (const Error& e) {
            throw Error(e.kind(), file.filename().string() + " line " + std::to_string(line_no) + ": " + e.what());
        }
    }
}

}  // namespace detail

// Loads whichever metadata files exist. Throws Error(corrupt) on any file
// that exists but violates the schema.
inline CommunityMetadata load_metadata(const std::filesystem::path& dir, const GraphSnapshot& g) {
    CommunityMetadata meta;
    meta.bridge_strength.assign(g.num_entities(), 0);
    auto entity_of = [&](const nlohmann::json& obj) {
        const auto id = obj.at("entity").get<std::string>();
        auto e = g.find_entity(id);
        if (!e) throw Error(ErrorKind::corrupt, "unknown entity " + id);
        return *e;
    };

    if (std::filesystem::exists(dir / kCommunitiesFile)) {
        std::vector<std::int64_t> raw(g.num_entities(), -1);
        detail::for_each_jsonl(dir / kCommunitiesFile, [&](const nlohmann::json& obj) {
            const auto e = entity_of(obj);
            const auto c = obj.at("community").get<std::int64_t>();
            if (c < 0) throw Error(ErrorKind::corrupt, "negative community id");
            raw[e] = c;
        });
        CommunityAssignment assignment;
        assignment.community.resize(g.num_entities());
        for (EntityIndex e = 0; e < g.num_entities(); ++e) {
            if (raw[e] < 0) throw Error(ErrorKind::corrupt, "communities file misses entity " + g.entity_name(e));
            assignment.community[e] = static_cast<CommunityId>(raw[e]);
            assignment.num_communities = std::max<std::size_t>(assignment.num_communities, raw[e] + 1);
        }
        meta.assignment = std::move(assignment);
    }

    if (std::filesystem::exists(dir / kBridgesFile)) {
        std::vector<BridgeEntry> bridges;
        detail::for_each_jsonl(dir / kBridgesFile, [&](const nlohmann::json& obj) {
            BridgeEntry b;
            b.entity = entity_of(obj);
            b.communities = obj.at("communities").get<std::vector<CommunityId>>();
            b.strength = obj.at("strength").get<std::uint32_t>();
            std::set<CommunityId> distinct(b.communities.begin(), b.communities.end());
            if (b.strength < 2 || distinct.size() != b.strength)
                throw Error(ErrorKind::corrupt, "bridge strength must equal its number of distinct communities (>= 2)");
            b.communities.assign(distinct.begin(), distinct.end());
            meta.bridge_strength[b.entity] = b.strength;
            bridges.push_back(std::move(b));
        });
        meta.bridges = std::move(bridges);
    }

    if (std::filesystem::exists(dir / kAffinityFile)) {
        AffinityTable table;
        detail::for_each_jsonl(dir / kAffinityFile, [&](const nlohmann::json& obj) {
            const auto ci = obj.at("ci").get<CommunityId>();
            const auto cj = obj.at("cj").get<CommunityId>();
            const double score = obj.at("score").get<double>();
            if (!(score >= 0.0 && score <= 1.0)) throw Error(ErrorKind::corrupt, "affinity out of range");
            if (ci == cj) throw Error(ErrorKind::corrupt, "affinity entry within one community");
            table.set(ci, cj, score);
        });
        meta.affinity = std::move(table);
    }
    return meta;
}

// Engine-side loading: a corrupt directory degrades to no metadata.
inline CommunityMetadata load_metadata_or_absent(const std::filesystem::path& dir, const GraphSnapshot& g,
                                                 std::vector<std::string>* warnings = nullptr) {
    try {
        return load_metadata(dir, g);
    } catch (const std::exception& e) {
        if (warnings) warnings->push_back(std::string("community metadata ignored: ") + e.what());
        return CommunityMetadata::absent();
    }
}

}  // namespace odin
