#pragma once
// Desk-scale validation harness: synthetic graph generators, the exhaustive
// path oracle, baselines, signal ablations and the beam recall curve.
//
// All methods share one CompassScorer and the ranking order of
// beam_search.hpp, so differences between rows come from search policy or
// from the toggled signals only.

#include "odin/beam_search.hpp"
#include "odin/community.hpp"
#include "odin/compass.hpp"
#include "odin/kg_store.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace odin {

// ---------------------------------------------------------------------------
// Generators

struct PlantedRule {
    std::string body_first;
    std::string body_second;
    std::string head;
    double closure_probability = 1.0;
};

struct SyntheticSpec {
    std::size_t num_entities = 200;
    std::size_t num_communities = 2;
    double p_in = 0.05;
    double p_out = 0.002;
    std::size_t num_relations = 4;
    double zipf_exponent = 1.0;
    std::optional<PlantedRule> planted_rule;
    std::size_t planted_bridges = 0;
    std::size_t bridge_links = 3;  // per other community, each direction
    std::optional<std::pair<std::int64_t, std::int64_t>> timestamp_range;
    std::size_t num_documents = 50;
    std::uint64_t rng_seed = 1;

    void validate() const {
        auto bad = [](const char* what) { throw Error(ErrorKind::invalid_argument, what); };
        if (num_entities < 2) bad("need at least two entities");
        if (num_communities == 0 || num_communities > num_entities) bad("bad community count");
        if (num_relations == 0) bad("need at least one relation");
        if (!(p_in >= 0.0 && p_in <= 1.0 && p_out >= 0.0 && p_out <= 1.0)) bad("probabilities must be in [0,1]");
        if (num_communities > 1 && !(p_in > p_out)) bad("p_in must exceed p_out");
        if (timestamp_range && timestamp_range->first > timestamp_range->second) bad("empty timestamp range");
        if (planted_rule && !(planted_rule->closure_probability >= 0.0 && planted_rule->closure_probability <= 1.0))
            bad("closure probability must be in [0,1]");
    }
};

struct SyntheticGraph {
    GraphSnapshot graph;
    std::vector<CommunityId> planted_community;  // per entity index
    std::vector<EntityIndex> planted_bridges;
    std::vector<TripleIndex> planted_closures;   // head triples added by the rule
};

inline std::string padded_name(const char* prefix, std::size_t i, std::size_t width) {
    std::string digits = std::to_string(i);
    if (digits.size() < width) digits.insert(0, width - digits.size(), '0');
    return prefix + digits;
}

inline std::vector<std::string> relation_pool(std::size_t count) {
    std::vector<std::string> names;
    const std::size_t width = std::to_string(count > 0 ? count - 1 : 0).size();
    for (std::size_t i = 0; i < count; ++i) names.push_back(padded_name("r", i, width));
    return names;
}

// Block model with Zipf-skewed relations, optional planted bridges and an
// optional planted rule closure. Deterministic under rng_seed.
inline SyntheticGraph generate(const SyntheticSpec& spec) {
    spec.validate();
    Rng rng(spec.rng_seed);
    const std::size_t n = spec.num_entities;
    const std::size_t m = spec.num_communities;
    const std::size_t width = std::to_string(n - 1).size();
    std::vector<std::string> names(n);
    std::vector<CommunityId> block(n);
    for (std::size_t i = 0; i < n; ++i) {
        names[i] = padded_name("e", i, width);
        block[i] = static_cast<CommunityId>(i * m / n);
    }
    const auto relations = relation_pool(spec.num_relations);

    std::vector<double> cumulative;
    double total = 0.0;
    for (std::size_t k = 0; k < relations.size(); ++k) {
        total += 1.0 / std::pow(static_cast<double>(k + 1), spec.zipf_exponent);
        cumulative.push_back(total);
    }
    auto draw_relation = [&]() -> std::size_t {
        const double u = rng.uniform() * total;
        return static_cast<std::size_t>(std::upper_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin());
    };

    // (s, r, o) over index space; a set keeps generation order irrelevant.
    std::set<std::tuple<std::size_t, std::size_t, std::size_t>> edges;
    for (std::size_t s = 0; s < n; ++s) {
        for (std::size_t o = 0; o < n; ++o) {
            if (s == o) continue;
            const double p = block[s] == block[o] ? spec.p_in : spec.p_out;
            if (p > 0.0 && rng.bernoulli(p)) edges.emplace(s, draw_relation(), o);
        }
    }

    std::vector<std::size_t> bridges;
    if (spec.planted_bridges > 0 && m > 1) {
        std::vector<std::size_t> order(n);
        for (std::size_t i = 0; i < n; ++i) order[i] = i;
        rng.shuffle(order);
        bridges.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(std::min(spec.planted_bridges, n)));
        std::sort(bridges.begin(), bridges.end());
        for (std::size_t b : bridges) {
            for (CommunityId c = 0; c < m; ++c) {
                if (c == block[b]) continue;
                const std::size_t lo = (c * n + m - 1) / m;
                const std::size_t hi = ((c + 1) * n + m - 1) / m;
                for (std::size_t k = 0; k < spec.bridge_links; ++k) {
                    const std::size_t out = lo + static_cast<std::size_t>(rng.below(hi - lo));
                    const std::size_t in = lo + static_cast<std::size_t>(rng.below(hi - lo));
                    edges.emplace(b, draw_relation(), out);
                    edges.emplace(in, draw_relation(), b);
                }
            }
        }
    }

    std::set<std::tuple<std::size_t, std::size_t, std::size_t>> closures;
    if (spec.planted_rule) {
        auto index_of = [&](const std::string& name) {
            auto it = std::find(relations.begin(), relations.end(), name);
            if (it == relations.end()) throw Error(ErrorKind::invalid_argument, "planted rule names unknown relation " + name);
            return static_cast<std::size_t>(it - relations.begin());
        };
        const auto r1 = index_of(spec.planted_rule->body_first);
        const auto r2 = index_of(spec.planted_rule->body_second);
        const auto r3 = index_of(spec.planted_rule->head);
        std::vector<std::vector<std::size_t>> via_first(n), via_second(n);
        for (const auto& [s, r, o] : edges) {
            if (r == r1) via_first[s].push_back(o);
            if (r == r2) via_second[s].push_back(o);
        }
        std::set<std::pair<std::size_t, std::size_t>> pairs;
        for (std::size_t x = 0; x < n; ++x)
            for (std::size_t y : via_first[x])
                for (std::size_t z : via_second[y])
                    if (x != z) pairs.emplace(x, z);
        for (const auto& [x, z] : pairs) {
            if (!rng.bernoulli(spec.planted_rule->closure_probability)) continue;
            if (edges.emplace(x, r3, z).second) closures.emplace(x, r3, z);
        }
    }

    std::vector<TripleRecord> records;
    records.reserve(edges.size());
    for (const auto& [s, r, o] : edges) {
        TripleRecord rec{names[s], relations[r], names[o], std::nullopt, {}};
        if (spec.timestamp_range) {
            const auto [lo, hi] = *spec.timestamp_range;
            rec.timestamp = lo + static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(hi - lo) + 1));
        }
        if (spec.num_documents > 0) rec.provenance.push_back(padded_name("doc-", rng.below(spec.num_documents), 4));
        records.push_back(std::move(rec));
    }
    if (records.empty()) throw Error(ErrorKind::invalid_argument, "generated graph has no edges");

    SyntheticGraph out{GraphSnapshot::build(records, names), {}, {}, {}};
    out.planted_community.resize(n);
    for (std::size_t i = 0; i < n; ++i) out.planted_community[out.graph.entity(names[i])] = block[i];
    for (std::size_t b : bridges) out.planted_bridges.push_back(out.graph.entity(names[b]));
    for (const auto& [s, r, o] : closures)
        out.planted_closures.push_back(
            *out.graph.find_triple(out.graph.entity(names[s]), out.graph.relation(relations[r]), out.graph.entity(names[o])));
    std::sort(out.planted_closures.begin(), out.planted_closures.end());
    return out;
}

// Directed G(n, p) with p = mean_out_degree / (n - 1).
inline GraphSnapshot random_graph(std::size_t n, double mean_out_degree, std::size_t num_relations, std::uint64_t seed,
                                  std::optional<std::pair<std::int64_t, std::int64_t>> timestamps = std::nullopt) {
    SyntheticSpec spec;
    spec.num_entities = n;
    spec.num_communities = 1;
    spec.p_in = std::min(1.0, mean_out_degree / static_cast<double>(n - 1));
    spec.p_out = 0.0;
    spec.num_relations = num_relations;
    spec.timestamp_range = timestamps;
    spec.rng_seed = seed;
    return generate(spec).graph;
}

// Complete `branching`-ary out-tree of the given depth, root "t0...0".
inline GraphSnapshot regular_tree(std::size_t branching, std::size_t depth, const std::string& relation = "r") {
    std::size_t total = 1, level = 1;
    for (std::size_t d = 0; d < depth; ++d) {
        level *= branching;
        total += level;
    }
    const std::size_t width = std::to_string(total - 1).size();
    std::vector<TripleRecord> records;
    records.reserve(total - 1);
    for (std::size_t child = 1; child < total; ++child) {
        const std::size_t parent = (child - 1) / branching;
        records.push_back(TripleRecord{padded_name("t", parent, width), relation, padded_name("t", child, width),
                                       std::nullopt, {}});
    }
    return GraphSnapshot::build(records);
}

// ---------------------------------------------------------------------------
// Oracle and baselines

inline constexpr double kOracleMaxPaths = 1e7;

// Number of walks of length 1..h from the seeds; bounds the simple-path count.
inline double estimate_path_count(const GraphSnapshot& g, const std::vector<EntityIndex>& seeds, std::size_t hops) {
    std::vector<double> count(g.num_entities(), 0.0), next(g.num_entities(), 0.0);
    for (EntityIndex s : seeds) count[s] += 1.0;
    double total = 0.0;
    for (std::size_t h = 0; h < hops; ++h) {
        std::fill(next.begin(), next.end(), 0.0);
        for (EntityIndex v = 0; v < g.num_entities(); ++v) {
            if (count[v] == 0.0) continue;
            for (const auto& edge : g.neighbors(v)) next[edge.other] += count[v];
        }
        count.swap(next);
        for (double c : count) total += c;
        if (total > kOracleMaxPaths * 10) break;
    }
    return total;
}

// Exact top-k over every path of length 1..h from the seeds (simple paths
// unless allow_revisit). Each length is scored as one frontier, which is
// exactly what beam search scores when it never prunes.
inline SearchReport exhaustive_oracle(const CompassScorer& scorer, const SearchConfig& cfg) {
    const auto start = std::chrono::steady_clock::now();
    const GraphSnapshot& g = scorer.graph();
    cfg.validate(g);
    const auto seeds = cfg.sorted_seeds();
    const double estimate = estimate_path_count(g, seeds, cfg.hops);
    if (estimate > kOracleMaxPaths)
        throw Error(ErrorKind::guard, "exhaustive oracle would enumerate ~" + std::to_string(static_cast<long long>(estimate)) +
                                          " paths (limit 1e7); use a smaller hop count");

    std::vector<std::vector<Path>> by_length(cfg.hops + 1);
    std::function<void(const Path&)> expand = [&](const Path& path) {
        if (path.hops() == cfg.hops) return;
        for (const auto& edge : g.neighbors(path.terminal())) {
            if (!cfg.allow_revisit && path.contains(edge.other)) continue;
            Path next = path.extended(edge);
            expand(next);
            by_length[next.hops()].push_back(std::move(next));
        }
    };
    for (EntityIndex s : seeds) expand(Path::from_seed(s));

    SearchReport report;
    std::vector<ScoredPath> pool;
    for (std::size_t len = 1; len <= cfg.hops; ++len) {
        report.paths_explored += by_length[len].size();
        report.score_evaluations += by_length[len].size();
        auto scored = score_frontier(scorer, std::move(by_length[len]), len);
        pool.insert(pool.end(), std::make_move_iterator(scored.begin()), std::make_move_iterator(scored.end()));
    }
    rank_top(pool, cfg.top_k);
    report.results = std::move(pool);
    report.elapsed = std::chrono::steady_clock::now() - start;
    return report;
}

// Uniform random out-edge walks of up to h steps; every walk prefix is a
// candidate. Candidates are scored per length like the other methods.
inline SearchReport random_walk_baseline(const CompassScorer& scorer, const SearchConfig& cfg, std::size_t walks = 1000,
                                         std::uint64_t rng_seed = 7) {
    const auto start = std::chrono::steady_clock::now();
    const GraphSnapshot& g = scorer.graph();
    cfg.validate(g);
    const auto seeds = cfg.sorted_seeds();
    Rng rng(rng_seed);

    std::vector<std::set<std::vector<TripleIndex>>> seen(cfg.hops + 1);
    std::vector<std::vector<Path>> by_length(cfg.hops + 1);
    std::vector<Edge> options;
    for (std::size_t w = 0; w < walks; ++w) {
        Path path = Path::from_seed(seeds[rng.below(seeds.size())]);
        for (std::size_t step = 0; step < cfg.hops; ++step) {
            options.clear();
            for (const auto& edge : g.neighbors(path.terminal()))
                if (cfg.allow_revisit || !path.contains(edge.other)) options.push_back(edge);
            if (options.empty()) break;
            path = path.extended(options[rng.below(options.size())]);
            if (seen[path.hops()].insert(path.triples).second) by_length[path.hops()].push_back(path);
        }
    }

    SearchReport report;
    std::vector<ScoredPath> pool;
    for (std::size_t len = 1; len <= cfg.hops; ++len) {
        report.paths_explored += by_length[len].size();
        report.score_evaluations += by_length[len].size();
        auto scored = score_frontier(scorer, std::move(by_length[len]), len);
        pool.insert(pool.end(), std::make_move_iterator(scored.begin()), std::make_move_iterator(scored.end()));
    }
    rank_top(pool, cfg.top_k);
    report.results = std::move(pool);
    report.elapsed = std::chrono::steady_clock::now() - start;
    return report;
}

// Beam search with every signal but S_struct forced to 1.
inline SearchReport ppr_only_baseline(const CompassScorer& scorer, const SearchConfig& cfg) {
    return discover(scorer.with_toggles(SignalToggles::only(Signal::structural)), cfg);
}

// ---------------------------------------------------------------------------
// Metrics

inline bool same_path(const Path& a, const Path& b) { return a.triples == b.triples && a.entities == b.entities; }

// Fraction of `reference` paths present in `found`.
inline double coverage(const std::vector<ScoredPath>& found, const std::vector<ScoredPath>& reference) {
    if (reference.empty()) return 1.0;
    std::set<std::pair<std::vector<EntityIndex>, std::vector<TripleIndex>>> have;
    for (const auto& sp : found) have.emplace(sp.path.entities, sp.path.triples);
    std::size_t hits = 0;
    for (const auto& sp : reference)
        if (have.count({sp.path.entities, sp.path.triples})) ++hits;
    return static_cast<double>(hits) / static_cast<double>(reference.size());
}

inline bool crosses_communities(const GraphSnapshot& g, const Path& path, const CommunityAssignment& assignment) {
    for (TripleIndex t : path.triples) {
        const auto& triple = g.triple(t);
        if (assignment.of(triple.subject) != assignment.of(triple.object)) return true;
    }
    return false;
}

inline double cross_community_fraction(const GraphSnapshot& g, const std::vector<ScoredPath>& paths,
                                       const CommunityAssignment& assignment) {
    if (paths.empty()) return 0.0;
    std::size_t crossing = 0;
    for (const auto& sp : paths)
        if (crosses_communities(g, sp.path, assignment)) ++crossing;
    return static_cast<double>(crossing) / static_cast<double>(paths.size());
}

struct EvalRow {
    std::string method;
    std::optional<double> coverage_at_k;        // vs the full-scorer oracle top-k
    std::optional<double> cross_community;      // fraction of top-k crossing communities
    std::optional<double> pattern_fraction;     // fraction of top-k matching a caller predicate
    std::size_t results = 0;
    std::size_t paths_explored = 0;
    std::size_t score_evaluations = 0;
    double elapsed_ms = 0.0;
};

struct EvalReport {
    std::size_t k = 0;
    std::vector<EvalRow> rows;

    const EvalRow& row(std::string_view method) const {
        for (const auto& r : rows)
            if (r.method == method) return r;
        throw Error(ErrorKind::not_found, "no eval row named " + std::string(method));
    }
};

using PathPredicate = std::function<bool(const Path&)>;

inline EvalRow make_row(const std::string& method, const SearchReport& report, const CompassScorer& scorer,
                        const std::vector<ScoredPath>* reference, const PathPredicate& pattern) {
    EvalRow row;
    row.method = method;
    row.results = report.results.size();
    row.paths_explored = report.paths_explored;
    row.score_evaluations = report.score_evaluations;
    row.elapsed_ms = std::chrono::duration<double, std::milli>(report.elapsed).count();
    if (reference) row.coverage_at_k = coverage(report.results, *reference);
    if (scorer.metadata().assignment)
        row.cross_community = cross_community_fraction(scorer.graph(), report.results, *scorer.metadata().assignment);
    if (pattern && !report.results.empty()) {
        std::size_t hits = 0;
        for (const auto& sp : report.results)
            if (pattern(sp.path)) ++hits;
        row.pattern_fraction = static_cast<double>(hits) / static_cast<double>(report.results.size());
    }
    return row;
}

struct AblationSetting {
    std::string name;
    SignalToggles toggles;
};

inline std::vector<AblationSetting> standard_ablations() {
    return {
        {"Full", SignalToggles::all()},
        {"No-NPLL", SignalToggles::all().set(Signal::edge, false)},
        {"No-Temporal", SignalToggles::all().set(Signal::temporal, false)},
        {"No-Bridge", SignalToggles::all().set(Signal::bridge, false).set(Signal::affinity, false)},
    };
}

// One discover() per setting. Coverage is measured against the exhaustive
// oracle of the full scorer when the oracle fits its guard.
inline EvalReport run_ablation(const CompassScorer& scorer, const SearchConfig& cfg,
                               const std::vector<AblationSetting>& settings = standard_ablations(),
                               const PathPredicate& pattern = {}) {
    EvalReport report;
    report.k = cfg.top_k;
    std::optional<std::vector<ScoredPath>> reference;
    try {
        reference = exhaustive_oracle(scorer, cfg).results;
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::guard) throw;
    }
    for (const auto& setting : settings) {
        const auto variant = scorer.with_toggles(setting.toggles);
        const auto result = discover(variant, cfg);
        report.rows.push_back(make_row(setting.name, result, scorer, reference ? &*reference : nullptr, pattern));
    }
    return report;
}

// Oracle, beam, random-walk and PPR-only rows side by side.
inline EvalReport compare_methods(const CompassScorer& scorer, const SearchConfig& cfg, std::size_t walks = 1000,
                                  std::uint64_t rng_seed = 7) {
    EvalReport report;
    report.k = cfg.top_k;
    const auto oracle = exhaustive_oracle(scorer, cfg);
    report.rows.push_back(make_row("Exhaustive", oracle, scorer, &oracle.results, {}));
    report.rows.push_back(make_row("Beam", discover(scorer, cfg), scorer, &oracle.results, {}));
    report.rows.push_back(make_row("RandomWalk", random_walk_baseline(scorer, cfg, walks, rng_seed), scorer, &oracle.results, {}));
    report.rows.push_back(make_row("PPR-only", ppr_only_baseline(scorer, cfg), scorer, &oracle.results, {}));
    return report;
}

struct RecallCase {
    const CompassScorer* scorer;
    std::vector<EntityIndex> seeds;
};

struct RecallPoint {
    std::size_t beam_width = 0;
    double mean_recall = 0.0;  // |oracle top-k n beam top-k| / |oracle top-k|, averaged
    double bound = 0.0;        // 1 - exp(-b / d), reference only
};

inline std::vector<RecallPoint> recall_curve(const std::vector<RecallCase>& cases, const std::vector<std::size_t>& beam_widths,
                                             std::size_t hops, std::size_t k) {
    if (cases.empty()) throw Error(ErrorKind::invalid_argument, "recall curve needs at least one graph");
    double degree = 0.0;
    std::vector<std::vector<ScoredPath>> oracles;
    for (const auto& c : cases) {
        degree += c.scorer->graph().avg_out_degree();
        SearchConfig cfg{c.seeds, hops, 1, k, false};
        oracles.push_back(exhaustive_oracle(*c.scorer, cfg).results);
    }
    degree /= static_cast<double>(cases.size());

    std::vector<RecallPoint> curve;
    for (std::size_t b : beam_widths) {
        double sum = 0.0;
        for (std::size_t i = 0; i < cases.size(); ++i) {
            SearchConfig cfg{cases[i].seeds, hops, b, k, false};
            const auto found = discover(*cases[i].scorer, cfg).results;
            // Graphs with fewer than k reachable paths are scored against what exists.
            sum += coverage(found, oracles[i]);
        }
        curve.push_back(RecallPoint{b, sum / static_cast<double>(cases.size()), 1.0 - std::exp(-static_cast<double>(b) / degree)});
    }
    return curve;
}

}  // namespace odin
