#pragma once
// Path: a seed entity followed by a chain of connected triples.

#include "odin/kg_store.hpp"

#include <algorithm>
#include <vector>

namespace odin {

struct Path {
    std::vector<TripleIndex> triples;
    std::vector<EntityIndex> entities;  // e0 (seed) .. eh; size == triples.size() + 1

    static Path from_seed(EntityIndex seed) { return Path{{}, {seed}}; }

    std::size_t hops() const { return triples.size(); }
    bool empty() const { return triples.empty(); }
    EntityIndex seed() const { return entities.front(); }
    EntityIndex terminal() const { return entities.back(); }

    bool contains(EntityIndex e) const {
        return std::find(entities.begin(), entities.end(), e) != entities.end();
    }

    Path extended(const Edge& edge) const {
        Path next = *this;
        next.triples.push_back(edge.triple);
        next.entities.push_back(edge.other);
        return next;
    }

    friend bool operator==(const Path&, const Path&) = default;
};

// Throws unless the path is a chain of observed triples starting at its seed.
inline void validate_path(const GraphSnapshot& g, const Path& path) {
    if (path.entities.size() != path.triples.size() + 1)
        throw Error(ErrorKind::invalid_argument, "path entity/triple count mismatch");
    for (std::size_t i = 0; i < path.triples.size(); ++i) {
        if (path.triples[i] >= g.total_triples())
            throw Error(ErrorKind::invalid_argument, "path references unknown triple");
        const auto& t = g.triple(path.triples[i]);
        if (t.subject != path.entities[i] || t.object != path.entities[i + 1])
            throw Error(ErrorKind::invalid_argument, "path triples are not connected");
    }
}

inline std::vector<EntityIndex> distinct_entities(const Path& path) {
    std::vector<EntityIndex> result = path.entities;
    std::sort(result.begin(), result.end());
    result.erase(std::unique(result.begin(), result.end()), result.end());
    return result;
}

}  // namespace odin
