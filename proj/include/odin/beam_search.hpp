#pragma once
// Deterministic beam search guided by COMPASS.
//
//   B0 = seeds
//   for hop = 1..h:
//       C  = every out-edge extension of every path in B(hop-1)
//       B(hop) = top-b of C
//   return top-k of B1 u ... u Bh
//
// Paths of every length compete in the final top-k. Candidates are ordered
// by (compass desc, hop asc, entity ids asc, triple ids asc), a total order,
// so results never depend on evaluation order. The struct-signal normalizer
// of a hop is computed over that hop's full candidate set before selection.

#include "odin/compass.hpp"
#include "odin/path.hpp"

#include <algorithm>
#include <chrono>
#include <stdexcept>
#include <vector>

namespace odin {

struct SearchConfig {
    std::vector<EntityIndex> seeds;
    std::size_t hops = 3;
    std::size_t beam_width = 64;
    std::size_t top_k = 50;
    bool allow_revisit = false;

    void validate(const GraphSnapshot& g) const {
        if (seeds.empty()) throw Error(ErrorKind::invalid_argument, "empty seed set");
        for (EntityIndex s : seeds)
            if (s >= g.num_entities()) throw Error(ErrorKind::not_found, "seed not in graph");
        if (hops == 0) throw Error(ErrorKind::invalid_argument, "hops must be >= 1");
        if (beam_width == 0) throw Error(ErrorKind::invalid_argument, "beam width must be >= 1");
        if (top_k == 0) throw Error(ErrorKind::invalid_argument, "top_k must be >= 1");
    }

    std::vector<EntityIndex> sorted_seeds() const {
        auto s = seeds;
        std::sort(s.begin(), s.end());
        s.erase(std::unique(s.begin(), s.end()), s.end());
        return s;
    }
};

struct ScoredPath {
    Path path;
    SignalBreakdown breakdown;
    std::size_t hop = 0;
};

// Strict weak (in fact total) ranking order.
inline bool ranks_before(const ScoredPath& a, const ScoredPath& b) {
    if (a.breakdown.compass != b.breakdown.compass) return a.breakdown.compass > b.breakdown.compass;
    if (a.hop != b.hop) return a.hop < b.hop;
    if (a.path.entities != b.path.entities) return a.path.entities < b.path.entities;
    return a.path.triples < b.path.triples;
}

inline void rank_top(std::vector<ScoredPath>& paths, std::size_t keep) {
    if (paths.size() > keep) {
        std::partial_sort(paths.begin(), paths.begin() + static_cast<std::ptrdiff_t>(keep), paths.end(), ranks_before);
        paths.resize(keep);
    } else {
        std::sort(paths.begin(), paths.end(), ranks_before);
    }
}

struct SearchReport {
    std::vector<ScoredPath> results;
    std::size_t score_evaluations = 0;
    std::size_t paths_explored = 0;
    std::chrono::nanoseconds elapsed{0};
};

// Scores one hop's candidates with a shared normalizer.
inline std::vector<ScoredPath> score_frontier(const CompassScorer& scorer, std::vector<Path> candidates, std::size_t hop) {
    std::vector<double> raw(candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i) raw[i] = scorer.struct_raw(candidates[i]);
    const double norm = scorer.normalizer(raw);
    std::vector<ScoredPath> scored;
    scored.reserve(candidates.size());
    for (auto& path : candidates) {
        auto breakdown = scorer.score(path, norm);
        scored.push_back(ScoredPath{std::move(path), breakdown, hop});
    }
    return scored;
}

// Upper bound on COMPASS evaluations for one discover() run.
inline std::size_t evaluation_bound(const GraphSnapshot& g, const SearchConfig& cfg) {
    return (cfg.sorted_seeds().size() + cfg.beam_width * (cfg.hops - 1)) * g.max_out_degree();
}

inline SearchReport discover(const CompassScorer& scorer, const SearchConfig& cfg) {
    const auto start = std::chrono::steady_clock::now();
    const GraphSnapshot& g = scorer.graph();
    cfg.validate(g);

    SearchReport report;
    std::vector<Path> beam;
    for (EntityIndex s : cfg.sorted_seeds()) beam.push_back(Path::from_seed(s));

    std::vector<ScoredPath> pool;
    for (std::size_t hop = 1; hop <= cfg.hops && !beam.empty(); ++hop) {
        std::vector<Path> candidates;
        for (const auto& path : beam) {
            for (const auto& edge : g.neighbors(path.terminal())) {
                if (!cfg.allow_revisit && path.contains(edge.other)) continue;
                candidates.push_back(path.extended(edge));
            }
        }
        report.paths_explored += candidates.size();
        report.score_evaluations += candidates.size();

        auto scored = score_frontier(scorer, std::move(candidates), hop);
        rank_top(scored, cfg.beam_width);
        beam.clear();
        for (const auto& sp : scored) {
            beam.push_back(sp.path);
            pool.push_back(sp);
        }
    }

    if (report.score_evaluations > evaluation_bound(g, cfg))
        throw std::logic_error("beam search exceeded its evaluation bound");

    rank_top(pool, cfg.top_k);
    report.results = std::move(pool);
    report.elapsed = std::chrono::steady_clock::now() - start;
    return report;
}

struct NeighborScore {
    Edge edge;
    Path path;  // context path extended by `edge`
    SignalBreakdown breakdown;
};

// One expansion step for an interactive agent: every out-edge of `e` scored
// as the extension of `context` (empty context = start at e).
inline std::vector<NeighborScore> score_neighbors(const CompassScorer& scorer, EntityIndex e, const Path& context,
                                                  std::size_t top_n, bool allow_revisit = false) {
    const GraphSnapshot& g = scorer.graph();
    if (e >= g.num_entities()) throw Error(ErrorKind::not_found, "entity not found");
    Path base = context.entities.empty() ? Path::from_seed(e) : context;
    validate_path(g, base);
    if (base.terminal() != e) throw Error(ErrorKind::invalid_argument, "context path does not end at the entity");

    std::vector<Path> candidates;
    std::vector<Edge> edges;
    for (const auto& edge : g.neighbors(e)) {
        if (!allow_revisit && base.contains(edge.other)) continue;
        candidates.push_back(base.extended(edge));
        edges.push_back(edge);
    }
    const std::size_t hop = base.hops() + 1;
    auto scored = score_frontier(scorer, std::move(candidates), hop);
    // Keep each candidate's edge alongside it through ranking.
    std::vector<std::size_t> order(scored.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return ranks_before(scored[a], scored[b]); });

    std::vector<NeighborScore> result;
    for (std::size_t i = 0; i < order.size() && i < top_n; ++i) {
        auto& sp = scored[order[i]];
        result.push_back(NeighborScore{edges[order[i]], std::move(sp.path), sp.breakdown});
    }
    return result;
}

inline std::vector<NeighborScore> score_neighbors(const CompassScorer& scorer, std::string_view entity,
                                                  const Path& context, std::size_t top_n, bool allow_revisit = false) {
    return score_neighbors(scorer, scorer.graph().entity(entity), context, top_n, allow_revisit);
}

}  // namespace odin
