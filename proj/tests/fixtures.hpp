#pragma once
// Small graph builders shared by the unit tests.

#include "odin/odin.hpp"

#include <initializer_list>
#include <string>
#include <vector>

namespace odin::testing {

struct T {
    std::string s, r, o;
    std::optional<std::int64_t> t = std::nullopt;
    std::vector<std::string> prov = {};
};

inline GraphSnapshot graph_of(std::initializer_list<T> triples, std::vector<std::string> extra = {}) {
    std::vector<TripleRecord> records;
    for (const auto& t : triples) records.push_back({t.s, t.r, t.o, t.t, t.prov});
    return GraphSnapshot::build(records, extra);
}

inline GraphSnapshot graph_of(const std::vector<T>& triples, std::vector<std::string> extra = {}) {
    std::vector<TripleRecord> records;
    for (const auto& t : triples) records.push_back({t.s, t.r, t.o, t.t, t.prov});
    return GraphSnapshot::build(records, extra);
}

// Path following the named entities; each hop takes the first matching edge.
inline Path path_of(const GraphSnapshot& g, std::initializer_list<std::string> entities) {
    auto it = entities.begin();
    Path p = Path::from_seed(g.entity(*it));
    for (++it; it != entities.end(); ++it) {
        const EntityIndex next = g.entity(*it);
        bool found = false;
        for (const auto& e : g.neighbors(p.terminal())) {
            if (e.other == next) {
                p = p.extended(e);
                found = true;
                break;
            }
        }
        if (!found) throw Error(ErrorKind::not_found, "no edge to " + *it);
    }
    return p;
}

// Constant edge scorer.
inline EdgeScorer constant_edges(double value) {
    return [value](TripleIndex) { return value; };
}

}  // namespace odin::testing
