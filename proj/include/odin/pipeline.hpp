#pragma once
// Assembles the per-query scoring inputs: NPLL model, PPR vector for the
// seed set and community metadata, then hands out CompassScorers over them.

#include "odin/community.hpp"
#include "odin/compass.hpp"
#include "odin/kg_store.hpp"
#include "odin/npll.hpp"
#include "odin/ppr.hpp"

#include <optional>
#include <vector>

namespace odin {

struct PipelineOptions {
    PprConfig ppr;
    TrainConfig train;
    CompassConfig compass;
    SignalToggles toggles;
    bool train_model = true;        // false: S_edge falls back to 1
    bool detect_communities = true; // false: bridge and affinity signals are neutral
    std::uint64_t community_seed = 42;
};

// Owns everything a scorer points into; do not move after calling scorer().
struct Pipeline {
    const GraphSnapshot* graph = nullptr;
    NpllModel model;
    PprVector ppr;
    CommunityMetadata meta;
    CompassConfig compass;
    SignalToggles toggles;
    LifecycleStats lifecycle;

    CompassScorer scorer() const { return CompassScorer(*graph, model, ppr, meta, compass, toggles); }
};

// `store` persists the model across runs; null trains in memory.
// `metadata` overrides community detection when given.
inline Pipeline prepare_pipeline(const GraphSnapshot& g, const std::vector<EntityIndex>& seeds,
                                 const PipelineOptions& opts, WeightStore* store = nullptr,
                                 std::optional<CommunityMetadata> metadata = std::nullopt) {
    Pipeline p;
    p.graph = &g;
    p.compass = opts.compass;
    p.toggles = opts.toggles;
    if (opts.train_model) {
        MemoryWeightStore scratch;
        p.model = ensure_model(store ? *store : scratch, g, opts.train, &p.lifecycle);
    } else {
        p.model = NpllModel::fallback();
    }
    p.ppr = ppr_local_push(g, seeds, opts.ppr);
    if (metadata) p.meta = std::move(*metadata);
    else if (opts.detect_communities) p.meta = CommunityMetadata::compute(g, louvain_detector, opts.community_seed);
    return p;
}

// Highest out-degree entity, lowest index on ties.
inline EntityIndex busiest_entity(const GraphSnapshot& g) {
    EntityIndex best = 0;
    for (EntityIndex e = 1; e < g.num_entities(); ++e)
        if (g.out_degree(e) > g.out_degree(best)) best = e;
    return best;
}

}  // namespace odin
