#pragma once
// NPLL: discriminative plausibility model over observed edges.
//
// A model is a set of length-2 Horn rules
//     r1(X,Y) & r2(Y,Z) => r3(X,Z)
// with learned weights, a learned bias per relation, and light entity and
// relation embeddings. Scoring an observed edge (s, r, o):
//
//     M(s,r,o) = sigmoid( bias[r]
//                       + sum of weights of rules with head r whose body
//                         grounds through some Y between s and o
//                       + gamma * <E_s * R_r, E_o> )
//
// Embeddings are never stored. They are a deterministic function of the
// graph and the stored rng_seed (seeded random features smoothed over the
// 1-hop neighborhood; relation vectors are the normalized mean of E_s * E_o
// over the relation's triples), rebuilt on first use. That is what lets the
// persisted blob carry only rules and biases and still reproduce every score.
//
// Scoring is only defined for triples present in the graph; the model never
// contributes an edge that is not evidence.

#include "odin/kg_store.hpp"
#include "odin/path.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace odin {

struct Rule {
    RelationIndex body_first = 0;
    RelationIndex body_second = 0;
    RelationIndex head = 0;
    std::size_t support = 0;
    double confidence = 0.0;
    double weight = 0.0;

    friend bool operator==(const Rule&, const Rule&) = default;
};

struct TrainConfig {
    std::size_t min_support = 10;
    double min_confidence = 0.1;
    std::size_t negative_ratio = 5;
    double learning_rate = 0.05;
    std::size_t epochs = 10;
    std::uint64_t rng_seed = 42;
    std::size_t embedding_dim = 16;
    double embedding_weight = 0.1;   // gamma
    std::size_t max_rules = 50;
    std::size_t max_sample = 50000;  // observed triples sampled for training
    std::size_t inner_steps = 25;    // optimizer steps per M-step
    double l2 = 1e-4;

    void validate() const {
        auto bad = [](const char* what) { throw Error(ErrorKind::invalid_argument, what); };
        if (min_support == 0) bad("min_support must be positive");
        if (!(min_confidence > 0.0 && min_confidence <= 1.0)) bad("min_confidence must be in (0,1]");
        if (negative_ratio == 0) bad("negative_ratio must be positive");
        if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) bad("learning_rate must be positive");
        if (epochs == 0) bad("epochs must be positive");
        if (embedding_dim == 0) bad("embedding_dim must be positive");
        if (!(embedding_weight >= 0.0) || !std::isfinite(embedding_weight)) bad("embedding_weight must be >= 0");
        if (!(l2 >= 0.0)) bad("l2 must be >= 0");
    }
};

// Learned parameters and confidences are rounded to kWeightDecimals once
// training ends, so the short decimal form written to the blob reloads to the
// identical double. Rounding goes through the decimal string itself: the
// result is the double nearest that decimal. A logit step of 1e-4 moves a
// sigmoid score by at most 2.5e-5.
inline constexpr int kWeightDecimals = 4;

inline double quantize_weight(double w) {
    if (!std::isfinite(w)) return w;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", kWeightDecimals, w);
    const double q = std::strtod(buf, nullptr);
    return q == 0.0 ? 0.0 : q;
}

namespace detail {

struct Embeddings {
    std::size_t dim = 0;
    std::vector<double> entity;    // num_entities * dim
    std::vector<double> relation;  // num_relations * dim
};

inline void normalize(std::span<double> v) {
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (norm > 0.0)
        for (double& x : v) x /= norm;
}

inline Embeddings reconstruct_embeddings(const GraphSnapshot& g, std::uint64_t seed, std::size_t dim) {
    const std::size_t n = g.num_entities();
    Embeddings emb;
    emb.dim = dim;
    std::vector<double> base(n * dim);
    Rng rng(seed);
    for (double& x : base) x = rng.normal();

    emb.entity.assign(n * dim, 0.0);
    for (EntityIndex e = 0; e < n; ++e) {
        std::span<double> out(emb.entity.data() + e * dim, dim);
        for (std::size_t k = 0; k < dim; ++k) out[k] = base[e * dim + k];
        const auto nbrs = g.undirected_neighbors(e);
        if (!nbrs.empty()) {
            const double share = 1.0 / static_cast<double>(nbrs.size());
            for (EntityIndex u : nbrs)
                for (std::size_t k = 0; k < dim; ++k) out[k] += share * base[u * dim + k];
        }
        normalize(out);
    }

    emb.relation.assign(g.num_relations() * dim, 0.0);
    for (const auto& t : g.triples()) {
        double* r = emb.relation.data() + t.relation * dim;
        const double* s = emb.entity.data() + t.subject * dim;
        const double* o = emb.entity.data() + t.object * dim;
        for (std::size_t k = 0; k < dim; ++k) r[k] += s[k] * o[k];
    }
    for (RelationIndex r = 0; r < g.num_relations(); ++r)
        normalize(std::span<double>(emb.relation.data() + r * dim, dim));
    return emb;
}

class EmbeddingCache {
public:
    std::shared_ptr<const Embeddings> get(const GraphSnapshot& g, std::uint64_t seed, std::size_t dim) {
        std::lock_guard lock(mutex_);
        if (!value_ || graph_ != &g || seed_ != seed || value_->dim != dim) {
            value_ = std::make_shared<const Embeddings>(reconstruct_embeddings(g, seed, dim));
            graph_ = &g;
            seed_ = seed;
            ++builds_;
        }
        return value_;
    }

    std::size_t builds() const {
        std::lock_guard lock(mutex_);
        return builds_;
    }

private:
    mutable std::mutex mutex_;
    std::shared_ptr<const Embeddings> value_;
    const GraphSnapshot* graph_ = nullptr;
    std::uint64_t seed_ = 0;
    std::size_t builds_ = 0;
};

}  // namespace detail

struct NpllModel {
    bool trained = false;
    std::vector<Rule> rules;
    std::vector<double> relation_bias;  // indexed by relation
    std::uint64_t rng_seed = 0;
    std::size_t embedding_dim = 16;
    double embedding_weight = 0.1;
    std::vector<double> loss_history;  // loss before training, then after each epoch

    std::shared_ptr<detail::EmbeddingCache> embedding_cache = std::make_shared<detail::EmbeddingCache>();

    // S_edge == 1 everywhere.
    static NpllModel fallback() { return NpllModel{}; }

    std::shared_ptr<const detail::Embeddings> embeddings(const GraphSnapshot& g) const {
        return embedding_cache->get(g, rng_seed, embedding_dim);
    }

    // Number of times embeddings were rebuilt through this model's cache.
    std::size_t embedding_builds() const { return embedding_cache->builds(); }

    std::vector<std::vector<std::size_t>> rules_by_head(std::size_t num_relations) const {
        std::vector<std::vector<std::size_t>> index(num_relations);
        for (std::size_t i = 0; i < rules.size(); ++i)
            if (rules[i].head < num_relations) index[rules[i].head].push_back(i);
        return index;
    }
};

// Number of intermediates Y with r1(s,Y) and r2(Y,o) in the graph.
inline std::size_t body_groundings(const GraphSnapshot& g, const Rule& rule, EntityIndex s, EntityIndex o) {
    std::size_t count = 0;
    for (const auto& edge : g.neighbors_by_relation(s, rule.body_first))
        if (g.find_triple(edge.other, rule.body_second, o)) ++count;
    return count;
}

inline double embedding_compatibility(const detail::Embeddings& emb, EntityIndex s, RelationIndex r, EntityIndex o) {
    const std::size_t d = emb.dim;
    const double* es = emb.entity.data() + s * d;
    const double* rr = emb.relation.data() + r * d;
    const double* eo = emb.entity.data() + o * d;
    double sum = 0.0;
    for (std::size_t k = 0; k < d; ++k) sum += es[k] * rr[k] * eo[k];
    return sum;
}

namespace detail {

// Logit for any (s, r, o), observed or not. Evaluation and training only:
// public scoring goes through score_edge, which enforces evidence grounding.
inline double plausibility_logit(const NpllModel& m, const GraphSnapshot& g, EntityIndex s, RelationIndex r,
                                 EntityIndex o) {
    double z = r < m.relation_bias.size() ? m.relation_bias[r] : 0.0;
    for (const auto& rule : m.rules)
        if (rule.head == r && body_groundings(g, rule, s, o) > 0) z += rule.weight;
    if (m.embedding_weight != 0.0) z += m.embedding_weight * embedding_compatibility(*m.embeddings(g), s, r, o);
    return z;
}

}  // namespace detail

inline double score_edge(const NpllModel& m, const GraphSnapshot& g, EntityIndex s, RelationIndex r, EntityIndex o) {
    if (!g.find_triple(s, r, o)) throw Error(ErrorKind::not_found, "not an observed edge");
    if (!m.trained) return 1.0;
    return sigmoid(detail::plausibility_logit(m, g, s, r, o));
}

inline double score_edge(const NpllModel& m, const GraphSnapshot& g, TripleIndex t) {
    if (t >= g.total_triples()) throw Error(ErrorKind::not_found, "not an observed edge");
    const auto& triple = g.triple(t);
    return score_edge(m, g, triple.subject, triple.relation, triple.object);
}

inline double score_edge(const NpllModel& m, const GraphSnapshot& g, std::string_view s, std::string_view r,
                         std::string_view o) {
    auto si = g.find_entity(s);
    auto ri = g.find_relation(r);
    auto oi = g.find_entity(o);
    if (!si || !ri || !oi) throw Error(ErrorKind::not_found, "not an observed edge");
    return score_edge(m, g, *si, *ri, *oi);
}

// S_edge(p): product of edge plausibilities along the path.
inline double edge_confidence(const NpllModel& m, const GraphSnapshot& g, const Path& path) {
    double product = 1.0;
    for (TripleIndex t : path.triples) product *= score_edge(m, g, t);
    return product;
}

// Length-2 rule mining with support and standard confidence over distinct
// (X, Z) pairs, X != Z.
inline std::vector<Rule> mine_rules(const GraphSnapshot& g, const TrainConfig& cfg = {}) {
    const std::uint64_t n = g.num_entities();
    auto pair_key = [n](EntityIndex x, EntityIndex z) { return static_cast<std::uint64_t>(x) * n + z; };

    std::unordered_map<std::uint64_t, std::vector<RelationIndex>> direct;
    for (const auto& t : g.triples())
        if (t.subject != t.object) direct[pair_key(t.subject, t.object)].push_back(t.relation);

    std::map<std::pair<RelationIndex, RelationIndex>, std::unordered_set<std::uint64_t>> bodies;
    for (EntityIndex y = 0; y < n; ++y) {
        const auto in = g.in_neighbors(y);
        const auto out = g.neighbors(y);
        for (const auto& first : in) {
            for (const auto& second : out) {
                if (first.other == second.other) continue;
                bodies[{first.relation, second.relation}].insert(pair_key(first.other, second.other));
            }
        }
    }

    std::vector<Rule> rules;
    for (const auto& [body, pairs] : bodies) {
        std::map<RelationIndex, std::size_t> support;
        for (std::uint64_t key : pairs) {
            auto it = direct.find(key);
            if (it == direct.end()) continue;
            for (RelationIndex head : it->second) ++support[head];
        }
        for (const auto& [head, count] : support) {
            const double confidence = static_cast<double>(count) / static_cast<double>(pairs.size());
            if (count < cfg.min_support || confidence < cfg.min_confidence) continue;
            rules.push_back(Rule{body.first, body.second, head, count, confidence, 0.0});
        }
    }
    std::sort(rules.begin(), rules.end(), [](const Rule& a, const Rule& b) {
        if (a.confidence != b.confidence) return a.confidence > b.confidence;
        return std::tie(a.body_first, a.body_second, a.head) < std::tie(b.body_first, b.body_second, b.head);
    });
    if (rules.size() > cfg.max_rules) rules.resize(cfg.max_rules);
    return rules;
}

namespace detail {

struct TrainingSample {
    std::vector<double> label;
    std::vector<RelationIndex> relation;
    std::vector<double> offset;  // gamma * embedding compatibility
    std::vector<std::size_t> fired_offsets{0};
    std::vector<std::size_t> fired_rule;
    std::vector<std::size_t> fired_groundings;

    std::size_t size() const { return label.size(); }
};

inline TrainingSample build_sample(const GraphSnapshot& g, const NpllModel& model, const TrainConfig& cfg) {
    Rng rng(cfg.rng_seed ^ 0x9e3779b97f4a7c15ULL);
    std::vector<TripleIndex> positives(g.total_triples());
    for (TripleIndex i = 0; i < positives.size(); ++i) positives[i] = i;
    if (positives.size() > cfg.max_sample) {
        rng.shuffle(positives);
        positives.resize(cfg.max_sample);
        std::sort(positives.begin(), positives.end());
    }

    const auto by_head = model.rules_by_head(g.num_relations());
    const auto emb = model.embeddings(g);
    TrainingSample sample;
    auto add = [&](EntityIndex s, RelationIndex r, EntityIndex o, double label) {
        sample.label.push_back(label);
        sample.relation.push_back(r);
        sample.offset.push_back(model.embedding_weight * embedding_compatibility(*emb, s, r, o));
        for (std::size_t rule_index : by_head[r]) {
            const auto count = body_groundings(g, model.rules[rule_index], s, o);
            if (count == 0) continue;
            sample.fired_rule.push_back(rule_index);
            sample.fired_groundings.push_back(count);
        }
        sample.fired_offsets.push_back(sample.fired_rule.size());
    };

    const std::size_t n = g.num_entities();
    for (TripleIndex t : positives) {
        const auto& triple = g.triple(t);
        add(triple.subject, triple.relation, triple.object, 1.0);
        if (n < 2) continue;
        for (std::size_t k = 0; k < cfg.negative_ratio; ++k) {
            // Corrupt the object; retry a few times to avoid observed triples.
            for (int attempt = 0; attempt < 10; ++attempt) {
                const auto o = static_cast<EntityIndex>(rng.below(n));
                if (g.find_triple(triple.subject, triple.relation, o)) continue;
                add(triple.subject, triple.relation, o, 0.0);
                break;
            }
        }
    }
    return sample;
}

struct Objective {
    const TrainingSample& sample;
    double l2;

    double logit(std::size_t i, const std::vector<double>& w, const std::vector<double>& b) const {
        double z = b[sample.relation[i]] + sample.offset[i];
        for (std::size_t j = sample.fired_offsets[i]; j < sample.fired_offsets[i + 1]; ++j) z += w[sample.fired_rule[j]];
        return z;
    }

    double loss(const std::vector<double>& w, const std::vector<double>& b) const {
        double total = 0.0;
        for (std::size_t i = 0; i < sample.size(); ++i) {
            const double z = logit(i, w, b);
            total += softplus(z) - sample.label[i] * z;
        }
        double reg = 0.0;
        for (double x : w) reg += x * x;
        for (double x : b) reg += x * x;
        return total / static_cast<double>(sample.size()) + 0.5 * l2 * reg;
    }

    // Gradient of the loss (descent direction is its negative).
    void gradient(const std::vector<double>& w, const std::vector<double>& b, std::vector<double>& gw,
                  std::vector<double>& gb) const {
        std::fill(gw.begin(), gw.end(), 0.0);
        std::fill(gb.begin(), gb.end(), 0.0);
        for (std::size_t i = 0; i < sample.size(); ++i) {
            const double residual = sigmoid(logit(i, w, b)) - sample.label[i];
            gb[sample.relation[i]] += residual;
            for (std::size_t j = sample.fired_offsets[i]; j < sample.fired_offsets[i + 1]; ++j)
                gw[sample.fired_rule[j]] += residual;
        }
        const double inv = 1.0 / static_cast<double>(sample.size());
        for (std::size_t k = 0; k < gw.size(); ++k) gw[k] = gw[k] * inv + l2 * w[k];
        for (std::size_t k = 0; k < gb.size(); ++k) gb[k] = gb[k] * inv + l2 * b[k];
    }
};

inline void require_finite(double value, const char* what) {
    if (!std::isfinite(value)) throw Error(ErrorKind::training, std::string("non-finite ") + what);
}

}  // namespace detail

// EM training of rule weights and relation biases.
//
// E-step: for every positive example, responsibilities over the fired rules
// sharing its head relation, q(rule) ~ groundings * exp(weight). Summed per
// rule this is the expected number of facts each rule explains.
// M-step: preconditioned gradient steps on the log-likelihood of observed
// triples against corrupted negatives. Each parameter's step is scaled by the
// inverse of its exposure in the sample, and rule steps additionally by
// (0.5 + mean responsibility). Every step is backtracked until the loss does
// not increase, so the per-epoch loss is monotone.
//
// Throws Error(training) on an empty sample or non-finite loss.
inline NpllModel train_em(const GraphSnapshot& g, std::vector<Rule> rules, const TrainConfig& cfg = {}) {
    cfg.validate();
    NpllModel model;
    model.rules = std::move(rules);
    for (auto& rule : model.rules) rule.weight = 0.0;
    model.relation_bias.assign(g.num_relations(), 0.0);
    model.rng_seed = cfg.rng_seed;
    model.embedding_dim = cfg.embedding_dim;
    model.embedding_weight = cfg.embedding_weight;

    const auto sample = detail::build_sample(g, model, cfg);
    if (sample.size() == 0) throw Error(ErrorKind::training, "empty training sample");

    const detail::Objective objective{sample, cfg.l2};
    const std::size_t num_rules = model.rules.size();
    const std::size_t num_relations = g.num_relations();
    const double n = static_cast<double>(sample.size());

    std::vector<double> rule_exposure(num_rules, 0.0);
    std::vector<double> bias_exposure(num_relations, 0.0);
    std::vector<double> rule_positive_count(num_rules, 0.0);
    for (std::size_t i = 0; i < sample.size(); ++i) {
        bias_exposure[sample.relation[i]] += 1.0;
        for (std::size_t j = sample.fired_offsets[i]; j < sample.fired_offsets[i + 1]; ++j) {
            rule_exposure[sample.fired_rule[j]] += 1.0;
            if (sample.label[i] > 0.5) rule_positive_count[sample.fired_rule[j]] += 1.0;
        }
    }
    for (double& x : rule_exposure) x = std::max(x / n, 1.0 / n);
    for (double& x : bias_exposure) x = std::max(x / n, 1.0 / n);

    std::vector<double> w(num_rules, 0.0);
    std::vector<double>& b = model.relation_bias;
    std::vector<double> gw(num_rules), gb(num_relations);
    std::vector<double> trial_w(num_rules), trial_b(num_relations);
    std::vector<double> credit(num_rules, 1.0);

    double loss = objective.loss(w, b);
    detail::require_finite(loss, "initial loss");
    model.loss_history.push_back(loss);

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        // E-step.
        std::vector<double> responsibility(num_rules, 0.0);
        for (std::size_t i = 0; i < sample.size(); ++i) {
            if (sample.label[i] < 0.5) continue;
            const std::size_t lo = sample.fired_offsets[i];
            const std::size_t hi = sample.fired_offsets[i + 1];
            if (lo == hi) continue;
            double top = -std::numeric_limits<double>::infinity();
            for (std::size_t j = lo; j < hi; ++j) top = std::max(top, w[sample.fired_rule[j]]);
            double norm = 0.0;
            for (std::size_t j = lo; j < hi; ++j)
                norm += static_cast<double>(sample.fired_groundings[j]) * std::exp(w[sample.fired_rule[j]] - top);
            for (std::size_t j = lo; j < hi; ++j)
                responsibility[sample.fired_rule[j]] +=
                    static_cast<double>(sample.fired_groundings[j]) * std::exp(w[sample.fired_rule[j]] - top) / norm;
        }
        for (std::size_t k = 0; k < num_rules; ++k)
            credit[k] = 0.5 + (rule_positive_count[k] > 0.0 ? responsibility[k] / rule_positive_count[k] : 0.5);

        // M-step.
        for (std::size_t step = 0; step < cfg.inner_steps; ++step) {
            objective.gradient(w, b, gw, gb);
            double scale = 1.0;
            bool accepted = false;
            for (int attempt = 0; attempt < 40; ++attempt, scale *= 0.5) {
                for (std::size_t k = 0; k < num_rules; ++k)
                    trial_w[k] = w[k] - scale * cfg.learning_rate * credit[k] * gw[k] / rule_exposure[k];
                for (std::size_t k = 0; k < num_relations; ++k)
                    trial_b[k] = b[k] - scale * cfg.learning_rate * gb[k] / bias_exposure[k];
                const double trial_loss = objective.loss(trial_w, trial_b);
                detail::require_finite(trial_loss, "training loss");
                if (trial_loss <= loss) {
                    w.swap(trial_w);
                    b.swap(trial_b);
                    loss = trial_loss;
                    accepted = true;
                    break;
                }
            }
            if (!accepted) break;
        }
        model.loss_history.push_back(loss);
    }

    for (std::size_t k = 0; k < num_rules; ++k) {
        model.rules[k].weight = quantize_weight(w[k]);
        model.rules[k].confidence = quantize_weight(model.rules[k].confidence);
        detail::require_finite(model.rules[k].weight, "rule weight");
    }
    for (double& x : b) {
        x = quantize_weight(x);
        detail::require_finite(x, "relation bias");
    }
    model.trained = true;
    return model;
}

// Weights-only persistence.
inline std::string save_weights(const NpllModel& m, const GraphSnapshot& g) {
    if (!m.trained) throw Error(ErrorKind::invalid_argument, "cannot persist an untrained model");
    nlohmann::json bias = nlohmann::json::object();
    for (RelationIndex r = 0; r < m.relation_bias.size(); ++r) bias[g.relation_name(r)] = m.relation_bias[r];
    nlohmann::json rules = nlohmann::json::array();
    for (const auto& rule : m.rules) {
        rules.push_back({{"body", {g.relation_name(rule.body_first), g.relation_name(rule.body_second)}},
                         {"head", g.relation_name(rule.head)},
                         {"weight", rule.weight},
                         {"support", rule.support},
                         {"confidence", rule.confidence}});
    }
    nlohmann::json blob = {{"format", "odin-npll"},
                           {"version", 1},
                           {"rng_seed", m.rng_seed},
                           {"embedding_dim", m.embedding_dim},
                           {"relation_bias", bias},
                           {"rules", rules}};
    // Written only when it differs from the default, to keep the blob small.
    if (m.embedding_weight != TrainConfig{}.embedding_weight) blob["embedding_weight"] = m.embedding_weight;
    return blob.dump();
}

// Rules or biases naming relations absent from `g` are dropped: they can
// never fire on this graph.
inline NpllModel load_weights(std::string_view blob, const GraphSnapshot& g) {
    auto corrupt = [](const std::string& what) { return Error(ErrorKind::corrupt, "corrupt weight blob: " + what); };
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(blob);
    } catch (const nlohmann::json::parse_error&) {
        throw corrupt("invalid JSON");
    }
    try {
        if (!doc.is_object() || doc.value("format", "") != "odin-npll") throw corrupt("wrong format tag");
        if (doc.at("version").get<int>() != 1) throw corrupt("unsupported version");

        NpllModel m;
        m.trained = true;
        m.rng_seed = doc.at("rng_seed").get<std::uint64_t>();
        m.embedding_dim = doc.at("embedding_dim").get<std::size_t>();
        if (m.embedding_dim == 0) throw corrupt("embedding_dim must be positive");
        m.embedding_weight = doc.value("embedding_weight", TrainConfig{}.embedding_weight);
        if (!(m.embedding_weight >= 0.0) || !std::isfinite(m.embedding_weight)) throw corrupt("bad embedding_weight");
        m.relation_bias.assign(g.num_relations(), 0.0);
        const auto& bias = doc.at("relation_bias");
        if (!bias.is_object()) throw corrupt("relation_bias must be an object");
        for (const auto& [name, value] : bias.items()) {
            const double b = value.get<double>();
            if (!std::isfinite(b)) throw corrupt("non-finite bias");
            if (auto r = g.find_relation(name)) m.relation_bias[*r] = b;
        }
        const auto& rules = doc.at("rules");
        if (!rules.is_array()) throw corrupt("rules must be an array");
        for (const auto& item : rules) {
            const auto& body = item.at("body");
            if (!body.is_array() || body.size() != 2) throw corrupt("rule body must have two relations");
            Rule rule;
            rule.weight = item.at("weight").get<double>();
            rule.support = item.at("support").get<std::size_t>();
            rule.confidence = item.at("confidence").get<double>();
            if (!std::isfinite(rule.weight)) throw corrupt("non-finite rule weight");
            if (!(rule.confidence >= 0.0 && rule.confidence <= 1.0)) throw corrupt("rule confidence out of range");
            auto r1 = g.find_relation(body[0].get<std::string>());
            auto r2 = g.find_relation(body[1].get<std::string>());
            auto r3 = g.find_relation(item.at("head").get<std::string>());
            if (!r1 || !r2 || !r3) continue;
            rule.body_first = *r1;
            rule.body_second = *r2;
            rule.head = *r3;
            m.rules.push_back(rule);
        }
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw corrupt(e.what());
    }
}

// Key-value persistence for weight blobs.
class WeightStore {
public:
    virtual ~WeightStore() = default;
    virtual std::optional<std::string> get(const std::string& key) const = 0;
    virtual void put(const std::string& key, const std::string& blob) = 0;
};

class MemoryWeightStore : public WeightStore {
public:
    std::optional<std::string> get(const std::string& key) const override {
        auto it = blobs_.find(key);
        if (it == blobs_.end()) return std::nullopt;
        return it->second;
    }
    void put(const std::string& key, const std::string& blob) override { blobs_[key] = blob; }

private:
    std::map<std::string, std::string> blobs_;
};

// A single blob file; the key is ignored.
class FileWeightStore : public WeightStore {
public:
    explicit FileWeightStore(std::filesystem::path file) : file_(std::move(file)) {}

    std::optional<std::string> get(const std::string&) const override {
        std::ifstream in(file_, std::ios::binary);
        if (!in) return std::nullopt;
        std::ostringstream buffer;
        buffer << in.rdbuf();
        return buffer.str();
    }

    void put(const std::string&, const std::string& blob) override {
        if (file_.has_parent_path()) std::filesystem::create_directories(file_.parent_path());
        std::ofstream out(file_, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorKind::io, "cannot write weight blob: " + file_.string());
        out << blob;
    }

private:
    std::filesystem::path file_;
};

inline constexpr const char* kWeightKey = "npll_weights";

enum class ModelSource { loaded, trained, fallback };

struct LifecycleStats {
    ModelSource source = ModelSource::fallback;
    std::size_t training_runs = 0;
    std::size_t blob_bytes = 0;
    std::vector<std::string> warnings;
};

// Replaceable stages, so failures can be injected.
struct LifecycleHooks {
    std::function<std::vector<Rule>(const GraphSnapshot&, const TrainConfig&)> mine =
        [](const GraphSnapshot& g, const TrainConfig& cfg) { return mine_rules(g, cfg); };
    std::function<NpllModel(const GraphSnapshot&, std::vector<Rule>, const TrainConfig&)> train =
        [](const GraphSnapshot& g, std::vector<Rule> rules, const TrainConfig& cfg) {
            return train_em(g, std::move(rules), cfg);
        };
};

// Load if stored, else mine + train + persist; any failure yields the
// fallback model. Never throws. Callers must serialize calls per store key.
inline NpllModel ensure_model(WeightStore& store, const GraphSnapshot& g, const TrainConfig& cfg = {},
                              LifecycleStats* stats = nullptr, const LifecycleHooks& hooks = {}) {
    LifecycleStats local;
    LifecycleStats& st = stats ? *stats : local;
    st = LifecycleStats{};

    try {
        if (auto blob = store.get(kWeightKey)) {
            try {
                NpllModel m = load_weights(*blob, g);
                st.source = ModelSource::loaded;
                st.blob_bytes = blob->size();
                return m;
            } catch (const std::exception& e) {
                st.warnings.push_back(std::string("stored weights unusable, retraining: ") + e.what());
            }
        }
    } catch (const std::exception& e) {
        st.warnings.push_back(std::string("weight store read failed: ") + e.what());
    }

    try {
        auto rules = hooks.mine(g, cfg);
        ++st.training_runs;
        NpllModel m = hooks.train(g, std::move(rules), cfg);
        if (!m.trained) throw Error(ErrorKind::training, "trainer returned an untrained model");
        const std::string blob = save_weights(m, g);
        st.blob_bytes = blob.size();
        try {
            store.put(kWeightKey, blob);
        } catch (const std::exception& e) {
            st.warnings.push_back(std::string("could not persist weights: ") + e.what());
        }
        st.source = ModelSource::trained;
        return m;
    } catch (const std::exception& e) {
        st.warnings.push_back(std::string("training failed, using fallback: ") + e.what());
    }
    st.source = ModelSource::fallback;
    return NpllModel::fallback();
}

inline std::string_view to_string(ModelSource source) {
    switch (source) {
        case ModelSource::loaded: return "loaded";
        case ModelSource::trained: return "trained";
        case ModelSource::fallback: return "fallback";
    }
    return "unknown";
}

}  // namespace odin
