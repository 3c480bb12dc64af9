#pragma once

// Local and global semantic maps and the rule-based fusion that merges local
// observations into one world-frame map: cross-map clustering, removal of
// unconfirmed singletons, majority labeling, and proximity conflicts.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "aerogrid/errors.hpp"
#include "aerogrid/geometry.hpp"

namespace aerogrid {

enum class Category { unlabeled, main, target, landmark, obstacle };
enum class Direction { front, back, left, right };
// What an observation refers to. Only physical objects are fused; the robot
// and the zero point are per-frame annotations.
enum class Entity { object, robot, zero_point };
enum class MapFrame { grid, world };

inline const char* to_string(Category c) {
    switch (c) {
        case Category::unlabeled: return "unlabeled";
        case Category::main: return "main";
        case Category::target: return "target";
        case Category::landmark: return "landmark";
        case Category::obstacle: return "obstacle";
    }
    return "?";
}

inline const char* to_string(Direction d) {
    switch (d) {
        case Direction::front: return "front";
        case Direction::back: return "back";
        case Direction::left: return "left";
        case Direction::right: return "right";
    }
    return "?";
}

inline const char* to_string(Entity e) {
    switch (e) {
        case Entity::object: return "object";
        case Entity::robot: return "robot";
        case Entity::zero_point: return "zero_point";
    }
    return "?";
}

inline const char* to_string(MapFrame f) { return f == MapFrame::grid ? "grid" : "world"; }

inline std::optional<Direction> parse_direction(const std::string& s) {
    if (s == "front") return Direction::front;
    if (s == "back") return Direction::back;
    if (s == "left") return Direction::left;
    if (s == "right") return Direction::right;
    return std::nullopt;
}

inline std::optional<Category> parse_category(const std::string& s) {
    for (Category c : {Category::unlabeled, Category::main, Category::target, Category::landmark, Category::obstacle})
        if (s == to_string(c)) return c;
    return std::nullopt;
}

inline std::optional<Entity> parse_entity(const std::string& s) {
    for (Entity e : {Entity::object, Entity::robot, Entity::zero_point})
        if (s == to_string(e)) return e;
    return std::nullopt;
}

struct SemanticObject {
    std::string id;
    std::string name;
    Category category = Category::unlabeled;
    std::optional<Direction> direction;  // set iff category == landmark
    bool is_obstacle_too = false;
    Vec2 coordinate;                     // frame given by the owning map
    std::optional<double> orientation;
    Entity entity = Entity::object;

    void validate() const {
        if ((category == Category::landmark) != direction.has_value())
            throw InvalidArgument("SemanticObject '" + id + "': direction must be set iff category is landmark");
    }

    friend bool operator==(const SemanticObject&, const SemanticObject&) = default;
};

struct LocalSemanticMap {
    MapFrame frame = MapFrame::grid;
    Vec2 observer;               // drone ground position, meters
    double altitude = 0.0;       // meters
    double meters_per_cell = 0.0;
    Rect footprint;              // world frame, meters
    std::vector<SemanticObject> objects;
    std::optional<RobotParts> parts;
    int step_index = 0;

    void validate() const {
        if (!(meters_per_cell > 0.0)) throw InvalidArgument("LocalSemanticMap: meters_per_cell must be > 0");
        for (const auto& o : objects) o.validate();
    }

    friend bool operator==(const LocalSemanticMap&, const LocalSemanticMap&) = default;
};

// Converts a grid-frame map (cells relative to the image center) to meters.
inline LocalSemanticMap to_world(const LocalSemanticMap& map) {
    if (map.frame == MapFrame::world) return map;
    map.validate();
    LocalSemanticMap out = map;
    out.frame = MapFrame::world;
    const auto w = [&](Vec2 g) { return map.observer + map.meters_per_cell * g; };
    for (auto& o : out.objects) o.coordinate = w(o.coordinate);
    if (out.parts) *out.parts = {w(out.parts->head), w(out.parts->body), w(out.parts->tail)};
    return out;
}

enum class Confidence { confirmed, uncertain };

inline const char* to_string(Confidence c) { return c == Confidence::confirmed ? "confirmed" : "uncertain"; }

struct GlobalEntry {
    std::string name;
    Vec2 position;  // world frame, meters
    int support_count = 1;
    Confidence confidence = Confidence::uncertain;
    std::optional<double> orientation;
    int last_seen = 0;  // newest step_index among members
};

struct GlobalSemanticMap {
    std::vector<GlobalEntry> entries;  // sorted by name
    int revision = 0;
    std::vector<LocalSemanticMap> pool;  // world-frame observations retained for re-fusion

    const GlobalEntry* find(const std::string& name) const {
        for (const auto& e : entries)
            if (e.name == name) return &e;
        return nullptr;
    }
};

struct FusionParams {
    double merge_radius = 0.1;      // meters
    double conflict_radius = 0.18;  // meters; below the closest legal spacing of two objects
    double footprint_inset = 0.1;   // meters; a singleton must be this far inside a footprint to be removed

    void validate() const {
        if (!(merge_radius > 0.0)) throw InvalidArgument("FusionParams: merge_radius must be > 0");
        if (!(conflict_radius >= 0.0)) throw InvalidArgument("FusionParams: conflict_radius must be >= 0");
        if (!(footprint_inset >= 0.0)) throw InvalidArgument("FusionParams: footprint_inset must be >= 0");
    }
};

struct ObservationRef {
    std::size_t map = 0;     // index into the input map list
    std::size_t object = 0;  // index into that map's objects

    friend bool operator==(const ObservationRef&, const ObservationRef&) = default;
};

using Cluster = std::vector<ObservationRef>;

namespace detail {

inline bool fusable(const SemanticObject& o) {
    // Carried objects are in motion; their observations would smear into a trail.
    return o.entity == Entity::object && o.category != Category::main;
}

// Canonical processing order: (step_index, observer, id), then content so that
// fully duplicated keys still sort the same way under any input permutation.
inline std::vector<ObservationRef> ordered_observations(const std::vector<LocalSemanticMap>& maps) {
    std::vector<ObservationRef> refs;
    for (std::size_t m = 0; m < maps.size(); ++m)
        for (std::size_t i = 0; i < maps[m].objects.size(); ++i)
            if (fusable(maps[m].objects[i])) refs.push_back({m, i});
    const auto key = [&](const ObservationRef& r) {
        const auto& map = maps[r.map];
        const auto& o = map.objects[r.object];
        return std::make_tuple(map.step_index, map.observer.x, map.observer.y, o.id, o.name, o.coordinate.x,
                               o.coordinate.y);
    };
    std::stable_sort(refs.begin(), refs.end(),
                     [&](const ObservationRef& a, const ObservationRef& b) { return key(a) < key(b); });
    return refs;
}

inline double circular_mean(const std::vector<double>& angles) {
    double s = 0.0;
    double c = 0.0;
    for (double a : angles) {
        s += std::sin(a);
        c += std::cos(a);
    }
    return std::atan2(s, c);
}

}  // namespace detail

// Connected components of the "within merge_radius" graph. Clusters are
// listed by their first member in canonical order; members keep that order.
inline std::vector<Cluster> match_objects(const std::vector<LocalSemanticMap>& maps, double merge_radius) {
    if (!(merge_radius > 0.0)) throw InvalidArgument("match_objects: merge_radius must be > 0");
    for (const auto& m : maps)
        if (m.frame != MapFrame::world) throw InvalidArgument("match_objects: maps must be in world frame");

    const std::vector<ObservationRef> refs = detail::ordered_observations(maps);
    const auto pos = [&](std::size_t k) { return maps[refs[k].map].objects[refs[k].object].coordinate; };

    using CellKey = std::pair<std::int64_t, std::int64_t>;
    std::map<CellKey, std::vector<std::size_t>> grid;
    const auto cell_of = [&](Vec2 p) {
        return CellKey{static_cast<std::int64_t>(std::floor(p.x / merge_radius)),
                       static_cast<std::int64_t>(std::floor(p.y / merge_radius))};
    };
    for (std::size_t k = 0; k < refs.size(); ++k) grid[cell_of(pos(k))].push_back(k);

    std::vector<int> label(refs.size(), -1);
    std::vector<std::vector<std::size_t>> components;
    for (std::size_t seed = 0; seed < refs.size(); ++seed) {
        if (label[seed] >= 0) continue;
        const int id = static_cast<int>(components.size());
        components.emplace_back();
        std::vector<std::size_t> stack{seed};
        label[seed] = id;
        while (!stack.empty()) {
            const std::size_t k = stack.back();
            stack.pop_back();
            components.back().push_back(k);
            const auto [cx, cy] = cell_of(pos(k));
            for (std::int64_t dx = -1; dx <= 1; ++dx) {
                for (std::int64_t dy = -1; dy <= 1; ++dy) {
                    const auto it = grid.find({cx + dx, cy + dy});
                    if (it == grid.end()) continue;
                    for (std::size_t j : it->second) {
                        if (label[j] >= 0 || distance(pos(k), pos(j)) > merge_radius) continue;
                        label[j] = id;
                        stack.push_back(j);
                    }
                }
            }
        }
    }

    std::vector<Cluster> out;
    out.reserve(components.size());
    for (auto& comp : components) {
        std::sort(comp.begin(), comp.end());
        Cluster c;
        for (std::size_t k : comp) c.push_back(refs[k]);
        out.push_back(std::move(c));
    }
    return out;
}

inline GlobalSemanticMap fuse(const std::vector<LocalSemanticMap>& maps, const FusionParams& params = {}) {
    if (maps.empty()) throw InvalidArgument("fuse: at least one local map is required");
    params.validate();

    std::vector<LocalSemanticMap> world;
    world.reserve(maps.size());
    for (const auto& m : maps) world.push_back(to_world(m));

    const std::vector<Cluster> clusters = match_objects(world, params.merge_radius);

    struct Candidate {
        GlobalEntry entry;
        bool tie = false;
        bool removed = false;
        std::size_t order = 0;
    };
    std::vector<Candidate> cands;

    for (std::size_t ci = 0; ci < clusters.size(); ++ci) {
        const Cluster& cl = clusters[ci];
        std::set<std::size_t> support_maps;
        std::map<std::string, int> votes;
        Vec2 sum;
        std::vector<double> yaws;
        int newest = 0;
        bool first = true;
        for (const auto& r : cl) {
            const auto& o = world[r.map].objects[r.object];
            support_maps.insert(r.map);
            ++votes[o.name];
            sum += o.coordinate;
            if (o.orientation) yaws.push_back(*o.orientation);
            newest = first ? world[r.map].step_index : std::max(newest, world[r.map].step_index);
            first = false;
        }
        Candidate c;
        c.order = ci;
        c.entry.position = sum / static_cast<double>(cl.size());
        c.entry.support_count = static_cast<int>(support_maps.size());
        c.entry.last_seen = newest;
        if (!yaws.empty()) c.entry.orientation = detail::circular_mean(yaws);

        int best_votes = 0;
        for (const auto& [name, n] : votes) {  // std::map iterates names lexicographically
            if (n > best_votes) {
                best_votes = n;
                c.entry.name = name;
                c.tie = false;
            } else if (n == best_votes) {
                c.tie = true;
            }
        }

        if (c.entry.support_count == 1) {
            bool covered = false;
            for (std::size_t m = 0; m < world.size() && !covered; ++m)
                if (!support_maps.count(m) && world[m].footprint.contains(c.entry.position, params.footprint_inset))
                    covered = true;
            if (covered) continue;
        }
        cands.push_back(std::move(c));
    }

    // Proximity conflicts, decided from the pre-deletion supports.
    std::vector<bool> flag(cands.size(), false);
    for (std::size_t a = 0; a < cands.size(); ++a) {
        for (std::size_t b = a + 1; b < cands.size(); ++b) {
            const auto& ea = cands[a].entry;
            const auto& eb = cands[b].entry;
            if (ea.name == eb.name || distance(ea.position, eb.position) >= params.conflict_radius) continue;
            if (ea.support_count > eb.support_count) {
                cands[b].removed = true;
            } else if (eb.support_count > ea.support_count) {
                cands[a].removed = true;
            } else {
                flag[a] = flag[b] = true;
            }
        }
    }
    for (std::size_t i = 0; i < cands.size(); ++i) {
        auto& c = cands[i];
        const bool ok = c.entry.support_count >= 2 && !c.tie && !flag[i];
        c.entry.confidence = ok ? Confidence::confirmed : Confidence::uncertain;
    }

    // One entry per name: confirmed first, then most recently seen, then
    // larger support, then cluster order.
    std::map<std::string, const Candidate*> by_name;
    const auto better = [](const Candidate& x, const Candidate& y) {
        const auto rank = [](const Candidate& c) {
            return std::make_tuple(c.entry.confidence == Confidence::confirmed ? 1 : 0, c.entry.last_seen,
                                   c.entry.support_count);
        };
        if (rank(x) != rank(y)) return rank(x) > rank(y);
        return x.order < y.order;
    };
    for (const auto& c : cands) {
        if (c.removed) continue;
        auto [it, inserted] = by_name.try_emplace(c.entry.name, &c);
        if (!inserted && better(c, *it->second)) it->second = &c;
    }

    GlobalSemanticMap out;
    for (const auto& [name, c] : by_name) out.entries.push_back(c->entry);
    out.revision = 0;
    out.pool = std::move(world);
    return out;
}

// Re-fuses the retained pool plus the new map. A map identical to one already
// pooled adds no evidence.
inline GlobalSemanticMap update(const GlobalSemanticMap& global, const LocalSemanticMap& new_map,
                                const FusionParams& params = {}) {
    std::vector<LocalSemanticMap> pool = global.pool;
    const LocalSemanticMap w = to_world(new_map);
    if (std::find(pool.begin(), pool.end(), w) == pool.end()) pool.push_back(w);
    GlobalSemanticMap out;
    if (pool.empty()) {
        out = global;
    } else {
        out = fuse(pool, params);
    }
    out.revision = global.revision + 1;
    return out;
}

}  // namespace aerogrid
