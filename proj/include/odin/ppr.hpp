#pragma once
// Personalized PageRank from a seed set.
//
//   pi = (1 - alpha) * P^T pi + alpha * s
//
// P is the row-stochastic walk matrix over out-edges (one slot per triple);
// dangling entities send their mass back to the seed distribution s.
//
// ppr_local_push is the query-time approximation. It runs residual push in
// rounds, each round visiting active entities in ascending id order, and
// stops once the total residual mass is at most epsilon. Because the
// propagation operator preserves mass, that gives
//   0 <= exact(v) - approx(v) <= epsilon <= epsilon * max(1, degree(v))
// for every entity, on directed graphs as well as undirected ones.
//
// ppr_exact is dense power iteration, kept as the validation oracle.

#include "odin/kg_store.hpp"
#include "odin/path.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <ostream>
#include <vector>

namespace odin {

struct PprConfig {
    double alpha = 0.15;
    double epsilon = 1e-4;
    bool symmetrize = false;  // walk over in-edges as well as out-edges

    void validate() const {
        if (!(alpha > 0.0 && alpha < 1.0))
            throw Error(ErrorKind::invalid_argument, "ppr alpha must be in (0,1)");
        if (!(epsilon > 0.0)) throw Error(ErrorKind::invalid_argument, "ppr epsilon must be > 0");
    }
};

struct PprVector {
    std::vector<double> scores;  // dense; entities never reached hold 0
    std::vector<EntityIndex> seeds;

    double at(EntityIndex e) const { return e < scores.size() ? scores[e] : 0.0; }

    double total() const {
        double sum = 0.0;
        for (double v : scores) sum += v;
        return sum;
    }

    std::size_t support_size() const {
        return static_cast<std::size_t>(std::count_if(scores.begin(), scores.end(), [](double v) { return v > 0.0; }));
    }
};

// Walk structure shared by the push and the exact solver so both iterate
// the same matrix.
class WalkGraph {
public:
    WalkGraph(const GraphSnapshot& g, bool symmetrize) {
        const std::size_t n = g.num_entities();
        offsets_.assign(n + 1, 0);
        for (EntityIndex e = 0; e < n; ++e) {
            if (symmetrize) {
                auto nbrs = g.undirected_neighbors(e);
                targets_.insert(targets_.end(), nbrs.begin(), nbrs.end());
            } else {
                for (const auto& edge : g.neighbors(e)) targets_.push_back(edge.other);
            }
            offsets_[e + 1] = targets_.size();
        }
    }

    std::size_t size() const { return offsets_.size() - 1; }
    std::size_t degree(EntityIndex e) const { return offsets_[e + 1] - offsets_[e]; }
    std::span<const EntityIndex> targets(EntityIndex e) const {
        return {targets_.data() + offsets_[e], targets_.data() + offsets_[e + 1]};
    }

private:
    std::vector<std::size_t> offsets_;
    std::vector<EntityIndex> targets_;
};

namespace detail {

inline std::vector<EntityIndex> canonical_seeds(const GraphSnapshot& g, std::vector<EntityIndex> seeds) {
    if (seeds.empty()) throw Error(ErrorKind::invalid_argument, "empty seed set");
    for (EntityIndex s : seeds)
        if (s >= g.num_entities()) throw Error(ErrorKind::not_found, "seed not in graph");
    std::sort(seeds.begin(), seeds.end());
    seeds.erase(std::unique(seeds.begin(), seeds.end()), seeds.end());
    return seeds;
}

}  // namespace detail

inline PprVector ppr_local_push(const GraphSnapshot& g, const std::vector<EntityIndex>& seed_set,
                                const PprConfig& cfg = {}) {
    cfg.validate();
    const auto seeds = detail::canonical_seeds(g, seed_set);
    const WalkGraph walk(g, cfg.symmetrize);
    const std::size_t n = walk.size();
    const double alpha = cfg.alpha;
    const double eps = cfg.epsilon;
    const double seed_share = 1.0 / static_cast<double>(seeds.size());

    std::vector<double> estimate(n, 0.0);
    std::vector<double> residual(n, 0.0);
    std::vector<char> listed(n, 0);
    std::vector<EntityIndex> holders;  // entities that may hold residual

    auto add_residual = [&](EntityIndex v, double mass) {
        residual[v] += mass;
        if (!listed[v]) {
            listed[v] = 1;
            holders.push_back(v);
        }
    };
    auto push = [&](EntityIndex u) {
        const double mass = residual[u];
        residual[u] = 0.0;
        estimate[u] += alpha * mass;
        const double spread = (1.0 - alpha) * mass;
        const auto out = walk.targets(u);
        if (out.empty()) {
            for (EntityIndex s : seeds) add_residual(s, spread * seed_share);
        } else {
            const double share = spread / static_cast<double>(out.size());
            for (EntityIndex v : out) add_residual(v, share);
        }
    };
    auto threshold = [&](EntityIndex u) {
        return eps * static_cast<double>(std::max<std::size_t>(1, walk.degree(u)));
    };
    // Sorts the holder list and drops entities whose residual went to zero.
    auto compact_holders = [&] {
        std::sort(holders.begin(), holders.end());
        std::vector<EntityIndex> kept;
        kept.reserve(holders.size());
        for (EntityIndex v : holders) {
            if (residual[v] > 0.0) kept.push_back(v);
            else listed[v] = 0;
        }
        holders.swap(kept);
    };

    for (EntityIndex s : seeds) add_residual(s, seed_share);

    // Phase 1: classic degree-scaled threshold push.
    for (;;) {
        compact_holders();
        std::vector<EntityIndex> active;
        for (EntityIndex v : holders)
            if (residual[v] >= threshold(v)) active.push_back(v);
        if (active.empty()) break;
        for (EntityIndex u : active)
            if (residual[u] >= threshold(u)) push(u);
    }

    // Phase 2: drain until the total residual is at most epsilon.
    for (;;) {
        compact_holders();
        double total = 0.0;
        for (EntityIndex v : holders) total += residual[v];
        if (total <= eps) break;
        const std::vector<EntityIndex> active = holders;
        for (EntityIndex u : active)
            if (residual[u] > 0.0) push(u);
    }

    return PprVector{std::move(estimate), seeds};
}

inline PprVector ppr_local_push(const GraphSnapshot& g, std::span<const std::string> seed_ids,
                                const PprConfig& cfg = {}) {
    std::vector<EntityIndex> seeds;
    for (const auto& id : seed_ids) {
        auto e = g.find_entity(id);
        if (!e) throw Error(ErrorKind::not_found, "seed not in graph: " + id);
        seeds.push_back(*e);
    }
    return ppr_local_push(g, seeds, cfg);
}

inline constexpr std::size_t kExactPprMaxEntities = 100000;

inline PprVector ppr_exact(const GraphSnapshot& g, const std::vector<EntityIndex>& seed_set, double alpha,
                           std::size_t iterations = 10000, bool symmetrize = false) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorKind::invalid_argument, "ppr alpha must be in (0,1)");
    if (iterations == 0) throw Error(ErrorKind::invalid_argument, "iterations must be positive");
    if (g.num_entities() > kExactPprMaxEntities)
        throw Error(ErrorKind::guard, "graph too large for exact PPR (" + std::to_string(g.num_entities()) +
                                          " entities > " + std::to_string(kExactPprMaxEntities) + ")");
    const auto seeds = detail::canonical_seeds(g, seed_set);
    const WalkGraph walk(g, symmetrize);
    const std::size_t n = walk.size();
    const double seed_share = 1.0 / static_cast<double>(seeds.size());

    std::vector<double> pi(n, 0.0);
    for (EntityIndex s : seeds) pi[s] = seed_share;
    std::vector<double> next(n, 0.0);
    for (std::size_t it = 0; it < iterations; ++it) {
        std::fill(next.begin(), next.end(), 0.0);
        double dangling = 0.0;
        for (EntityIndex u = 0; u < n; ++u) {
            if (pi[u] == 0.0) continue;
            const auto out = walk.targets(u);
            if (out.empty()) {
                dangling += pi[u];
                continue;
            }
            const double share = (1.0 - alpha) * pi[u] / static_cast<double>(out.size());
            for (EntityIndex v : out) next[v] += share;
        }
        for (EntityIndex s : seeds) next[s] += (alpha + (1.0 - alpha) * dangling) * seed_share;

        double change = 0.0;
        for (std::size_t v = 0; v < n; ++v) change = std::max(change, std::abs(next[v] - pi[v]));
        pi.swap(next);
        if (change < 1e-10) break;
    }
    return PprVector{std::move(pi), seeds};
}

// Mean PPR mass over the path's non-seed entities e1..eh, divided by
// `normalizer` and clamped to [0,1].
inline double struct_score(const PprVector& ppr, const Path& path, double normalizer) {
    if (path.empty()) throw Error(ErrorKind::invalid_argument, "struct score of an empty path");
    if (!(normalizer > 0.0)) throw Error(ErrorKind::invalid_argument, "struct normalizer must be > 0");
    double sum = 0.0;
    for (std::size_t i = 1; i < path.entities.size(); ++i) sum += ppr.at(path.entities[i]);
    const double value = sum / static_cast<double>(path.hops()) / normalizer;
    return std::clamp(value, 0.0, 1.0);
}

// Un-normalized mean used to build per-hop normalizers.
inline double struct_raw(const PprVector& ppr, const Path& path) {
    double sum = 0.0;
    for (std::size_t i = 1; i < path.entities.size(); ++i) sum += ppr.at(path.entities[i]);
    return path.empty() ? 0.0 : sum / static_cast<double>(path.hops());
}

// Debug dump: one {"e": id, "score": value} line per entity with mass.
inline void write_ppr_jsonl(const GraphSnapshot& g, const PprVector& ppr, std::ostream& out) {
    for (EntityIndex e = 0; e < ppr.scores.size(); ++e) {
        if (ppr.scores[e] > 0.0)
            out << nlohmann::json{{"e", g.entity_name(e)}, {"score", ppr.scores[e]}}.dump() << '\n';
    }
}

}  // namespace odin
