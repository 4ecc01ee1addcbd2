#pragma once
// COMPASS: multiplicative six-signal path score and its explanation.
//
//   compass(p) = S_edge * S_struct * S_bridge * S_affinity * S_prior * S_temp
//
// S_bridge and S_affinity are boosts (>= 1); the rest lie in [0, 1]. The
// score is used for ranking only, so factors are not clamped to [0, 1].
//
// Explanation: in log space the score is additive, ln compass = sum ln S_i,
// and each signal's marginal contribution to the log score does not depend
// on which other signals are present. The Shapley value of signal i in that
// game is therefore exactly phi_i = ln S_i, and the phi_i sum to ln compass.

#include "odin/community.hpp"
#include "odin/kg_store.hpp"
#include "odin/npll.hpp"
#include "odin/path.hpp"
#include "odin/ppr.hpp"

#include <array>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace odin {

enum class Signal : std::size_t { edge = 0, structural, bridge, affinity, prior, temporal };

inline constexpr std::size_t kNumSignals = 6;
inline constexpr std::array<Signal, kNumSignals> kSignals{Signal::edge,     Signal::structural, Signal::bridge,
                                                          Signal::affinity, Signal::prior,      Signal::temporal};

inline std::string_view signal_key(Signal s) {
    switch (s) {
        case Signal::edge: return "edge";
        case Signal::structural: return "struct";
        case Signal::bridge: return "bridge";
        case Signal::affinity: return "affinity";
        case Signal::prior: return "prior";
        case Signal::temporal: return "temp";
    }
    return "?";
}

inline std::string_view signal_label(Signal s) {
    switch (s) {
        case Signal::edge: return "semantic plausibility";
        case Signal::structural: return "structural importance";
        case Signal::bridge: return "bridge entities";
        case Signal::affinity: return "community affinity";
        case Signal::prior: return "relation prior";
        case Signal::temporal: return "temporal relevance";
    }
    return "?";
}

enum class PriorMode { frequency, inverse_frequency };

enum class NormalizerMode { frontier_max, fixed };

inline constexpr double kSecondsPerDay = 86400.0;

struct CompassConfig {
    double lambda_decay = 1.0 / (90.0 * kSecondsPerDay);  // per second
    std::optional<std::int64_t> t_now;                    // default: snapshot max timestamp
    double beta_bridge = 0.5;
    double rho = 0.5;
    double beta_affinity = 0.5;
    PriorMode prior_mode = PriorMode::frequency;
    NormalizerMode normalizer_mode = NormalizerMode::frontier_max;
    double fixed_normalizer = 1.0;

    void validate() const {
        auto bad = [](const char* what) { throw Error(ErrorKind::invalid_argument, what); };
        if (!(lambda_decay >= 0.0) || !std::isfinite(lambda_decay)) bad("lambda_decay must be >= 0");
        if (!(beta_bridge >= 0.0)) bad("beta_bridge must be >= 0");
        if (!(beta_affinity >= 0.0)) bad("beta_affinity must be >= 0");
        if (!(rho > 0.0) || !std::isfinite(rho)) bad("rho must be > 0");
        if (normalizer_mode == NormalizerMode::fixed && !(fixed_normalizer > 0.0)) bad("fixed normalizer must be > 0");
    }
};

// A disabled signal is forced to 1 (ablation).
struct SignalToggles {
    std::array<bool, kNumSignals> enabled{true, true, true, true, true, true};

    bool on(Signal s) const { return enabled[static_cast<std::size_t>(s)]; }
    SignalToggles& set(Signal s, bool value) {
        enabled[static_cast<std::size_t>(s)] = value;
        return *this;
    }

    static SignalToggles all() { return {}; }
    static SignalToggles only(Signal keep) {
        SignalToggles t;
        t.enabled.fill(false);
        t.set(keep, true);
        return t;
    }

    friend bool operator==(const SignalToggles&, const SignalToggles&) = default;
};

struct SignalBreakdown {
    std::array<double, kNumSignals> factors{1, 1, 1, 1, 1, 1};
    double compass = 1.0;

    double factor(Signal s) const { return factors[static_cast<std::size_t>(s)]; }

    static SignalBreakdown from_factors(const std::array<double, kNumSignals>& factors) {
        SignalBreakdown b;
        b.factors = factors;
        b.compass = 1.0;
        for (double f : factors) b.compass *= f;
        return b;
    }

    std::vector<Signal> vetoing_signals() const {
        std::vector<Signal> result;
        for (Signal s : kSignals)
            if (factor(s) == 0.0) result.push_back(s);
        return result;
    }
};

struct Attribution {
    Signal signal;
    double phi;
};

// phi_i = ln S_i. Throws Error(veto) when the score is 0.
inline std::array<Attribution, kNumSignals> explain(const SignalBreakdown& b) {
    if (!(b.compass > 0.0)) {
        std::string names;
        for (Signal s : b.vetoing_signals()) names += (names.empty() ? "" : ",") + std::string(signal_key(s));
        throw Error(ErrorKind::veto, "veto path has no finite log decomposition (vetoed by " +
                                         (names.empty() ? std::string("underflow") : names) + ")");
    }
    std::array<Attribution, kNumSignals> result{};
    for (std::size_t i = 0; i < kNumSignals; ++i) result[i] = Attribution{kSignals[i], std::log(b.factors[i])};
    return result;
}

inline std::optional<std::int64_t> resolve_t_now(const GraphSnapshot& g, const CompassConfig& cfg) {
    return cfg.t_now ? cfg.t_now : g.max_timestamp();
}

// Mean of exp(-lambda * age) over the path's edges. Missing timestamps
// contribute 1; timestamps after t_now count as age 0.
inline double temporal_score(const GraphSnapshot& g, const Path& path, const CompassConfig& cfg) {
    if (path.empty()) throw Error(ErrorKind::invalid_argument, "temporal score of an empty path");
    const auto now = resolve_t_now(g, cfg);
    double sum = 0.0;
    for (TripleIndex t : path.triples) {
        const auto& ts = g.triple(t).timestamp;
        if (!ts || !now) {
            sum += 1.0;
            continue;
        }
        const double age = std::max<double>(0.0, static_cast<double>(*now - *ts));
        sum += std::exp(-cfg.lambda_decay * age);
    }
    return sum / static_cast<double>(path.hops());
}

inline double prior_score(const GraphSnapshot& g, const Path& path, const CompassConfig& cfg) {
    if (path.empty()) throw Error(ErrorKind::invalid_argument, "prior score of an empty path");
    const double uniform = 1.0 / static_cast<double>(g.num_relations());
    double sum = 0.0;
    for (TripleIndex t : path.triples) {
        const double f = g.relation_frequency(g.triple(t).relation);
        sum += cfg.prior_mode == PriorMode::frequency ? f : std::min(1.0, 1.0 - f + uniform);
    }
    return sum / static_cast<double>(path.hops());
}

// Power mean of b(e) = 1 + beta_b * ln(1 + strength(e)) over the distinct
// path entities, seed included; non-bridges contribute 1.
inline double bridge_score(const Path& path, const CommunityMetadata& meta, const CompassConfig& cfg) {
    if (path.empty()) throw Error(ErrorKind::invalid_argument, "bridge score of an empty path");
    if (!meta.has_bridges()) return 1.0;
    const auto nodes = distinct_entities(path);
    double sum = 0.0;
    for (EntityIndex e : nodes) {
        const auto strength = meta.strength(e);
        sum += strength > 0 ? 1.0 + cfg.beta_bridge * std::log(1.0 + static_cast<double>(strength)) : 1.0;
    }
    return std::pow(sum / static_cast<double>(nodes.size()), cfg.rho);
}

// Product of (1 + beta_a * A(C(s), C(o))) over cross-community edges.
inline double affinity_score(const GraphSnapshot& g, const Path& path, const CommunityMetadata& meta,
                             const CompassConfig& cfg) {
    if (!meta.has_affinity()) return 1.0;
    double product = 1.0;
    for (TripleIndex t : path.triples) {
        const auto& triple = g.triple(t);
        const auto cs = meta.assignment->of(triple.subject);
        const auto co = meta.assignment->of(triple.object);
        if (cs != co) product *= 1.0 + cfg.beta_affinity * meta.affinity->at(cs, co);
    }
    return product;
}

using EdgeScorer = std::function<double(TripleIndex)>;

// Bundles the per-run inputs of the six signals. Holds references: the
// graph, PPR vector and metadata must outlive the scorer.
class CompassScorer {
public:
    CompassScorer(const GraphSnapshot& g, const NpllModel& model, const PprVector& ppr, const CommunityMetadata& meta,
                  CompassConfig cfg = {}, SignalToggles toggles = {})
        : CompassScorer(
              g, [&g, model](TripleIndex t) { return score_edge(model, g, t); }, ppr, meta, cfg, toggles) {}

    CompassScorer(const GraphSnapshot& g, EdgeScorer edge_scorer, const PprVector& ppr, const CommunityMetadata& meta,
                  CompassConfig cfg = {}, SignalToggles toggles = {})
        : graph_(&g), edge_scorer_(std::move(edge_scorer)), ppr_(&ppr), meta_(&meta), cfg_(cfg), toggles_(toggles) {
        cfg_.validate();
    }

    const GraphSnapshot& graph() const { return *graph_; }
    const CompassConfig& config() const { return cfg_; }
    const SignalToggles& toggles() const { return toggles_; }
    const CommunityMetadata& metadata() const { return *meta_; }
    const PprVector& ppr() const { return *ppr_; }

    CompassScorer with_toggles(SignalToggles toggles) const {
        CompassScorer copy = *this;
        copy.toggles_ = toggles;
        return copy;
    }

    CompassScorer with_config(CompassConfig cfg) const {
        cfg.validate();
        CompassScorer copy = *this;
        copy.cfg_ = cfg;
        return copy;
    }

    CompassScorer with_edge_scorer(EdgeScorer edge_scorer) const {
        CompassScorer copy = *this;
        copy.edge_scorer_ = std::move(edge_scorer);
        return copy;
    }

    double struct_raw(const Path& path) const { return odin::struct_raw(*ppr_, path); }

    // Normalizer for one hop's candidate frontier.
    double normalizer(std::span<const double> frontier_raw) const {
        if (cfg_.normalizer_mode == NormalizerMode::fixed) return cfg_.fixed_normalizer;
        double top = 0.0;
        for (double v : frontier_raw) top = std::max(top, v);
        return top > 0.0 ? top : 1.0;
    }

    SignalBreakdown score(const Path& path, double struct_normalizer) const {
        if (path.empty()) throw Error(ErrorKind::invalid_argument, "cannot score an empty path");
        std::array<double, kNumSignals> f{1, 1, 1, 1, 1, 1};
        auto slot = [&f](Signal s) -> double& { return f[static_cast<std::size_t>(s)]; };
        if (toggles_.on(Signal::edge)) {
            double product = 1.0;
            for (TripleIndex t : path.triples) product *= edge_scorer_(t);
            slot(Signal::edge) = product;
        }
        if (toggles_.on(Signal::structural)) slot(Signal::structural) = struct_score(*ppr_, path, struct_normalizer);
        if (toggles_.on(Signal::bridge)) slot(Signal::bridge) = bridge_score(path, *meta_, cfg_);
        if (toggles_.on(Signal::affinity)) slot(Signal::affinity) = affinity_score(*graph_, path, *meta_, cfg_);
        if (toggles_.on(Signal::prior)) slot(Signal::prior) = prior_score(*graph_, path, cfg_);
        if (toggles_.on(Signal::temporal)) slot(Signal::temporal) = temporal_score(*graph_, path, cfg_);
        return SignalBreakdown::from_factors(f);
    }

private:
    const GraphSnapshot* graph_;
    EdgeScorer edge_scorer_;
    const PprVector* ppr_;
    const CommunityMetadata* meta_;
    CompassConfig cfg_;
    SignalToggles toggles_;
};

// One-shot scoring of a validated path.
inline SignalBreakdown compass_score(const GraphSnapshot& g, const Path& path, const NpllModel& model,
                                     const PprVector& ppr, const CommunityMetadata& meta, const CompassConfig& cfg,
                                     double struct_normalizer) {
    validate_path(g, path);
    return CompassScorer(g, model, ppr, meta, cfg).score(path, struct_normalizer);
}

}  // namespace odin
