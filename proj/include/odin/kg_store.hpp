#pragma once
// GraphSnapshot: immutable, dictionary-encoded knowledge graph.
//
// Layout:
// - entity and relation dictionaries are sorted by id, so index order is
//   id order and every "ascending id" rule reduces to an integer compare
// - triples are stored sorted by (subject, relation, object); the out-edges
//   of an entity are therefore one contiguous range (CSR)
// - a second CSR indexes in-edges by object for undirected consumers
//
// Triples files are JSON lines: {"s":..,"r":..,"o":..,"t":int,"prov":[..]}.
// Snapshot files add a {"format":"odin-kg","version":1} header and
// {"entity":id} records for entities that appear in no triple.

#include "odin/common.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace odin {

struct TripleRecord {
    std::string subject;
    std::string relation;
    std::string object;
    std::optional<std::int64_t> timestamp;
    std::vector<std::string> provenance;
};

struct Triple {
    EntityIndex subject = 0;
    RelationIndex relation = 0;
    EntityIndex object = 0;
    std::optional<std::int64_t> timestamp;
    std::vector<std::string> provenance;  // sorted, unique
};

// One adjacency slot. For out-edges `other` is the object, for in-edges it is
// the subject.
struct Edge {
    RelationIndex relation = 0;
    EntityIndex other = 0;
    TripleIndex triple = 0;
};

class GraphSnapshot {
public:
    // Builds a snapshot from records in any order. Duplicate (s,r,o) records
    // collapse: the latest timestamp wins and provenance lists are unioned.
    static GraphSnapshot build(const std::vector<TripleRecord>& records,
                               const std::vector<std::string>& extra_entities = {}) {
        if (records.empty()) throw Error(ErrorKind::invalid_argument, "empty graph");

        std::set<std::string> entity_set(extra_entities.begin(), extra_entities.end());
        std::set<std::string> relation_set;
        for (const auto& rec : records) {
            if (rec.subject.empty() || rec.object.empty())
                throw Error(ErrorKind::invalid_argument, "triple with empty entity id");
            if (rec.relation.empty())
                throw Error(ErrorKind::invalid_argument, "triple with empty relation id");
            entity_set.insert(rec.subject);
            entity_set.insert(rec.object);
            relation_set.insert(rec.relation);
        }
        if (entity_set.count(std::string{}))
            throw Error(ErrorKind::invalid_argument, "empty entity id");

        GraphSnapshot g;
        g.entity_names_.assign(entity_set.begin(), entity_set.end());
        g.relation_names_.assign(relation_set.begin(), relation_set.end());
        for (std::size_t i = 0; i < g.entity_names_.size(); ++i)
            g.entity_lookup_.emplace(g.entity_names_[i], static_cast<EntityIndex>(i));
        for (std::size_t i = 0; i < g.relation_names_.size(); ++i)
            g.relation_lookup_.emplace(g.relation_names_[i], static_cast<RelationIndex>(i));

        struct Merged {
            std::optional<std::int64_t> timestamp;
            std::set<std::string> provenance;
        };
        std::map<std::tuple<EntityIndex, RelationIndex, EntityIndex>, Merged> merged;
        for (const auto& rec : records) {
            if (rec.timestamp && *rec.timestamp < 0)
                throw Error(ErrorKind::invalid_argument, "negative timestamp");
            auto key = std::make_tuple(g.entity_lookup_.at(rec.subject),
                                       g.relation_lookup_.at(rec.relation),
                                       g.entity_lookup_.at(rec.object));
            auto& slot = merged[key];
            if (rec.timestamp && (!slot.timestamp || *rec.timestamp > *slot.timestamp))
                slot.timestamp = rec.timestamp;
            slot.provenance.insert(rec.provenance.begin(), rec.provenance.end());
        }

        g.triples_.reserve(merged.size());
        for (auto& [key, m] : merged) {
            Triple t;
            t.subject = std::get<0>(key);
            t.relation = std::get<1>(key);
            t.object = std::get<2>(key);
            t.timestamp = m.timestamp;
            t.provenance.assign(m.provenance.begin(), m.provenance.end());
            g.triples_.push_back(std::move(t));
        }
        g.index();
        return g;
    }

    std::size_t num_entities() const { return entity_names_.size(); }
    std::size_t num_relations() const { return relation_names_.size(); }
    std::size_t total_triples() const { return triples_.size(); }

    const std::string& entity_name(EntityIndex e) const { return entity_names_.at(e); }
    const std::string& relation_name(RelationIndex r) const { return relation_names_.at(r); }
    const std::vector<std::string>& entity_names() const { return entity_names_; }
    const std::vector<std::string>& relation_names() const { return relation_names_; }

    std::optional<EntityIndex> find_entity(std::string_view id) const {
        auto it = entity_lookup_.find(std::string(id));
        if (it == entity_lookup_.end()) return std::nullopt;
        return it->second;
    }

    EntityIndex entity(std::string_view id) const {
        auto e = find_entity(id);
        if (!e) throw Error(ErrorKind::not_found, "entity not found: " + std::string(id));
        return *e;
    }

    std::optional<RelationIndex> find_relation(std::string_view id) const {
        auto it = relation_lookup_.find(std::string(id));
        if (it == relation_lookup_.end()) return std::nullopt;
        return it->second;
    }

    RelationIndex relation(std::string_view id) const {
        auto r = find_relation(id);
        if (!r) throw Error(ErrorKind::not_found, "relation not found: " + std::string(id));
        return *r;
    }

    const Triple& triple(TripleIndex t) const { return triples_.at(t); }
    const std::vector<Triple>& triples() const { return triples_; }

    // Out-edges in canonical order: relation id asc, then object id asc.
    std::span<const Edge> neighbors(EntityIndex e) const {
        check_entity(e);
        return {out_edges_.data() + out_offsets_[e], out_edges_.data() + out_offsets_[e + 1]};
    }

    std::span<const Edge> neighbors(std::string_view id) const { return neighbors(entity(id)); }

    // In-edges ordered by relation id asc, then subject id asc.
    std::span<const Edge> in_neighbors(EntityIndex e) const {
        check_entity(e);
        return {in_edges_.data() + in_offsets_[e], in_edges_.data() + in_offsets_[e + 1]};
    }

    std::size_t out_degree(EntityIndex e) const { return neighbors(e).size(); }
    std::size_t in_degree(EntityIndex e) const { return in_neighbors(e).size(); }
    std::size_t max_out_degree() const { return max_out_degree_; }

    double avg_out_degree() const {
        return static_cast<double>(triples_.size()) / static_cast<double>(entity_names_.size());
    }

    std::optional<std::int64_t> max_timestamp() const { return max_timestamp_; }

    std::size_t relation_count(RelationIndex r) const { return relation_counts_.at(r); }
    const std::vector<std::size_t>& relation_counts() const { return relation_counts_; }

    double relation_frequency(RelationIndex r) const {
        if (r >= relation_counts_.size())
            throw Error(ErrorKind::not_found, "relation not observed in graph");
        return static_cast<double>(relation_counts_[r]) / static_cast<double>(triples_.size());
    }

    double relation_frequency(std::string_view id) const { return relation_frequency(relation(id)); }

    std::optional<TripleIndex> find_triple(EntityIndex s, RelationIndex r, EntityIndex o) const {
        if (s >= num_entities()) return std::nullopt;
        auto out = neighbors(s);
        auto it = std::lower_bound(out.begin(), out.end(), std::make_pair(r, o),
                                   [](const Edge& edge, const std::pair<RelationIndex, EntityIndex>& key) {
                                       return std::tie(edge.relation, edge.other) < std::tie(key.first, key.second);
                                   });
        if (it == out.end() || it->relation != r || it->other != o) return std::nullopt;
        return it->triple;
    }

    // Out-edges of `s` carrying relation `r`.
    std::span<const Edge> neighbors_by_relation(EntityIndex s, RelationIndex r) const {
        auto out = neighbors(s);
        auto lo = std::partition_point(out.begin(), out.end(), [r](const Edge& e) { return e.relation < r; });
        auto hi = std::partition_point(lo, out.end(), [r](const Edge& e) { return e.relation <= r; });
        return {lo, hi};
    }

    // Undirected neighbor set (both directions, no self, sorted, unique).
    std::vector<EntityIndex> undirected_neighbors(EntityIndex e) const {
        std::vector<EntityIndex> result;
        for (const auto& edge : neighbors(e))
            if (edge.other != e) result.push_back(edge.other);
        for (const auto& edge : in_neighbors(e))
            if (edge.other != e) result.push_back(edge.other);
        std::sort(result.begin(), result.end());
        result.erase(std::unique(result.begin(), result.end()), result.end());
        return result;
    }

    // Entities that appear in no triple; serialized explicitly.
    std::vector<EntityIndex> isolated_entities() const {
        std::vector<EntityIndex> result;
        for (EntityIndex e = 0; e < num_entities(); ++e)
            if (out_degree(e) == 0 && in_degree(e) == 0) result.push_back(e);
        return result;
    }

private:
    void check_entity(EntityIndex e) const {
        if (e >= entity_names_.size()) throw Error(ErrorKind::not_found, "entity not found");
    }

    void index() {
        const std::size_t n = entity_names_.size();
        out_offsets_.assign(n + 1, 0);
        in_offsets_.assign(n + 1, 0);
        relation_counts_.assign(relation_names_.size(), 0);
        for (const auto& t : triples_) {
            ++out_offsets_[t.subject + 1];
            ++in_offsets_[t.object + 1];
            ++relation_counts_[t.relation];
            if (t.timestamp && (!max_timestamp_ || *t.timestamp > *max_timestamp_))
                max_timestamp_ = t.timestamp;
        }
        for (std::size_t i = 0; i < n; ++i) {
            max_out_degree_ = std::max<std::size_t>(max_out_degree_, out_offsets_[i + 1]);
            out_offsets_[i + 1] += out_offsets_[i];
            in_offsets_[i + 1] += in_offsets_[i];
        }

        // triples_ is sorted by (s, r, o): out-edges come out canonical.
        out_edges_.resize(triples_.size());
        in_edges_.resize(triples_.size());
        std::vector<std::size_t> in_cursor(in_offsets_.begin(), in_offsets_.end() - 1);
        for (TripleIndex i = 0; i < triples_.size(); ++i) {
            const auto& t = triples_[i];
            out_edges_[i] = Edge{t.relation, t.object, i};
            in_edges_[in_cursor[t.object]++] = Edge{t.relation, t.subject, i};
        }
        for (std::size_t e = 0; e < n; ++e) {
            std::sort(in_edges_.begin() + static_cast<std::ptrdiff_t>(in_offsets_[e]),
                      in_edges_.begin() + static_cast<std::ptrdiff_t>(in_offsets_[e + 1]),
                      [](const Edge& a, const Edge& b) {
                          return std::tie(a.relation, a.other) < std::tie(b.relation, b.other);
                      });
        }
    }

    std::vector<std::string> entity_names_;
    std::vector<std::string> relation_names_;
    std::unordered_map<std::string, EntityIndex> entity_lookup_;
    std::unordered_map<std::string, RelationIndex> relation_lookup_;
    std::vector<Triple> triples_;
    std::vector<std::size_t> out_offsets_;
    std::vector<Edge> out_edges_;
    std::vector<std::size_t> in_offsets_;
    std::vector<Edge> in_edges_;
    std::vector<std::size_t> relation_counts_;
    std::size_t max_out_degree_ = 0;
    std::optional<std::int64_t> max_timestamp_;
};

namespace detail {

inline Error line_error(std::size_t line, const std::string& what) {
    return Error(ErrorKind::parse, "line " + std::to_string(line) + ": " + what);
}

inline std::string required_string(const nlohmann::json& obj, const char* key, std::size_t line) {
    auto it = obj.find(key);
    if (it == obj.end()) throw line_error(line, std::string("missing field \"") + key + "\"");
    if (!it->is_string()) throw line_error(line, std::string("field \"") + key + "\" must be a string");
    auto value = it->get<std::string>();
    if (value.empty()) throw line_error(line, std::string("field \"") + key + "\" is empty");
    return value;
}

}  // namespace detail

// Parses one triples/snapshot stream. Blank lines are skipped.
inline GraphSnapshot ingest(std::istream& in, const std::vector<std::string>& extra_entities = {}) {
    std::vector<TripleRecord> records;
    std::vector<std::string> entities = extra_entities;
    std::string line;
    std::size_t line_no = 0;
    bool seen_record = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;

        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error&) {
            throw detail::line_error(line_no, "invalid JSON");
        }
        if (!obj.is_object()) throw detail::line_error(line_no, "record is not an object");

        if (obj.contains("format")) {
            if (seen_record) throw detail::line_error(line_no, "header must be the first record");
            if (obj["format"] != "odin-kg" || obj.value("version", 0) != 1)
                throw detail::line_error(line_no, "unsupported snapshot header");
            seen_record = true;
            continue;
        }
        seen_record = true;
        if (obj.contains("entity")) {
            entities.push_back(detail::required_string(obj, "entity", line_no));
            continue;
        }

        TripleRecord rec;
        rec.subject = detail::required_string(obj, "s", line_no);
        rec.relation = detail::required_string(obj, "r", line_no);
        rec.object = detail::required_string(obj, "o", line_no);
        if (auto it = obj.find("t"); it != obj.end() && !it->is_null()) {
            if (!it->is_number_integer()) throw detail::line_error(line_no, "field \"t\" must be an integer");
            const auto t = it->get<std::int64_t>();
            if (t < 0) throw detail::line_error(line_no, "field \"t\" must be non-negative");
            rec.timestamp = t;
        }
        if (auto it = obj.find("prov"); it != obj.end() && !it->is_null()) {
            if (!it->is_array()) throw detail::line_error(line_no, "field \"prov\" must be an array");
            for (const auto& doc : *it) {
                if (!doc.is_string()) throw detail::line_error(line_no, "provenance ids must be strings");
                rec.provenance.push_back(doc.get<std::string>());
            }
        }
        records.push_back(std::move(rec));
    }
    if (records.empty()) throw Error(ErrorKind::invalid_argument, "empty graph");
    return GraphSnapshot::build(records, entities);
}

inline GraphSnapshot ingest_file(const std::string& path, const std::vector<std::string>& extra_entities = {}) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::io, "cannot open triples file: " + path);
    return ingest(in, extra_entities);
}

// One id per line; blank lines skipped.
inline std::vector<std::string> read_entity_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::io, "cannot open entity file: " + path);
    std::vector<std::string> ids;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) ids.push_back(line);
    }
    return ids;
}

inline nlohmann::json triple_to_json(const GraphSnapshot& g, const Triple& t) {
    nlohmann::json obj;
    obj["s"] = g.entity_name(t.subject);
    obj["r"] = g.relation_name(t.relation);
    obj["o"] = g.entity_name(t.object);
    if (t.timestamp) obj["t"] = *t.timestamp;
    if (!t.provenance.empty()) obj["prov"] = t.provenance;
    return obj;
}

// Canonical snapshot serialization; output depends only on snapshot content.
inline void serialize(const GraphSnapshot& g, std::ostream& out) {
    out << nlohmann::json{{"format", "odin-kg"}, {"version", 1}}.dump() << '\n';
    for (EntityIndex e : g.isolated_entities())
        out << nlohmann::json{{"entity", g.entity_name(e)}}.dump() << '\n';
    for (const auto& t : g.triples()) out << triple_to_json(g, t).dump() << '\n';
}

inline std::string serialize(const GraphSnapshot& g) {
    std::ostringstream out;
    serialize(g, out);
    return out.str();
}

}  // namespace odin
