#pragma once

// Stand-in for the aerial vision model: orthographic projection of ground
// truth into the drone's image frame (grid cells, image-center origin), role
// labeling conditioned on the current task, and reproducible noise drawn from
// a counter-based generator keyed by (seed, step, object id, channel).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <boost/math/special_functions/erf.hpp>

#include "aerogrid/errors.hpp"
#include "aerogrid/geometry.hpp"
#include "aerogrid/gridmask.hpp"
#include "aerogrid/semantic_map.hpp"
#include "aerogrid/world.hpp"

namespace aerogrid {

struct NoiseModel {
    double position_sigma = 0.0;     // cells, per axis
    double misclassify_prob = 0.0;
    double orientation_sigma = 0.0;  // radians
    std::uint64_t seed = 0;

    void validate() const {
        if (!(position_sigma >= 0.0) || !(orientation_sigma >= 0.0))
            throw InvalidArgument("NoiseModel: sigmas must be >= 0");
        if (!(misclassify_prob >= 0.0 && misclassify_prob <= 1.0))
            throw InvalidArgument("NoiseModel: misclassify_prob must lie in [0, 1]");
    }
};

enum class TaskKind { map_construction, move_to_coordinate, move_to_object, carry_to_relation };

inline const char* to_string(TaskKind k) {
    switch (k) {
        case TaskKind::map_construction: return "map_construction";
        case TaskKind::move_to_coordinate: return "move_to_coordinate";
        case TaskKind::move_to_object: return "move_to_object";
        case TaskKind::carry_to_relation: return "carry_to_relation";
    }
    return "?";
}

struct TaskContext {
    TaskKind kind = TaskKind::map_construction;
    // move_to_object: the goal object; carry_to_relation: the reference landmark.
    std::optional<std::string> target_name;
    std::optional<Direction> relation;       // set iff kind == carry_to_relation
    std::optional<std::string> carried_object;  // object id held by the robot

    void validate() const {
        if ((kind == TaskKind::carry_to_relation) != relation.has_value())
            throw InvalidArgument("TaskContext: relation must be set iff kind is carry_to_relation");
    }
};

namespace noise {

inline std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

enum Channel : std::uint64_t { pos_x = 1, pos_y = 2, yaw = 3, label = 4, label_pick = 5 };

// Uniform on the open interval (0, 1).
inline double uniform(std::uint64_t seed, std::uint64_t step, std::string_view id, std::uint64_t channel) {
    std::uint64_t h = mix(seed);
    h = mix(h ^ step);
    h = mix(h ^ fnv1a(id));
    h = mix(h ^ channel);
    return (static_cast<double>(h >> 11) + 0.5) * 0x1.0p-53;
}

inline double gaussian(std::uint64_t seed, std::uint64_t step, std::string_view id, std::uint64_t channel) {
    const double u = uniform(seed, step, id, channel);
    return -std::sqrt(2.0) * boost::math::erfc_inv(2.0 * u);
}

}  // namespace noise

// Assigns task roles in place. Landmarks always block, so they double as
// obstacles. For map construction no roles are given at all.
inline std::vector<SemanticObject> classify_roles(std::vector<SemanticObject> objects, const TaskContext& task) {
    task.validate();
    for (auto& o : objects) {
        o.direction.reset();
        o.is_obstacle_too = false;
        if (task.kind == TaskKind::map_construction) {
            o.category = Category::unlabeled;
            continue;
        }
        if (o.entity == Entity::robot || (task.carried_object && o.id == *task.carried_object)) {
            o.category = Category::main;
        } else if (o.entity == Entity::zero_point) {
            o.category = task.kind == TaskKind::move_to_coordinate ? Category::target : Category::unlabeled;
        } else if (task.kind == TaskKind::move_to_object && task.target_name && o.name == *task.target_name) {
            o.category = Category::target;
        } else if (task.kind == TaskKind::carry_to_relation && task.target_name && o.name == *task.target_name) {
            o.category = Category::landmark;
            o.direction = task.relation;
            o.is_obstacle_too = true;
        } else {
            o.category = Category::obstacle;
        }
    }
    return objects;
}

inline double meters_per_cell_at(const CameraModel& camera, double altitude) {
    CameraModel c = camera;
    c.altitude = altitude;
    const GroundScale g = ground_scale(c);
    if (g.degenerate) throw InvalidArgument("observe: degenerate ground scale");
    return g.meters_per_cell;
}

// One aerial frame at the drone's current pose. Objects whose true center lies
// in the footprint are reported; coordinates are cells from the image center.
inline LocalSemanticMap observe(const WorldState& world, const CameraModel& camera, const TaskContext& task,
                                const NoiseModel& noise) {
    if (!(world.drone.altitude > 0.0)) throw InvalidArgument("observe: drone altitude must be > 0");
    noise.validate();
    CameraModel cam = camera;
    cam.altitude = world.drone.altitude;
    const double mpc = meters_per_cell_at(camera, world.drone.altitude);
    const Vec2 center = world.drone.position;
    const auto step = static_cast<std::uint64_t>(world.step);

    LocalSemanticMap map;
    map.frame = MapFrame::grid;
    map.observer = center;
    map.altitude = world.drone.altitude;
    map.meters_per_cell = mpc;
    map.footprint = camera_footprint(cam, center);
    map.step_index = static_cast<int>(world.step);

    std::set<std::string> names;
    for (const auto& o : world.objects) names.insert(o.name);
    const std::vector<std::string> alphabet(names.begin(), names.end());

    const auto to_grid = [&](Vec2 p, std::string_view id) {
        Vec2 g = (p - center) / mpc;
        if (noise.position_sigma > 0.0) {
            g.x += noise.position_sigma * noise::gaussian(noise.seed, step, id, noise::pos_x);
            g.y += noise.position_sigma * noise::gaussian(noise.seed, step, id, noise::pos_y);
        }
        return g;
    };
    const auto noisy_yaw = [&](double yaw, std::string_view id) {
        if (noise.orientation_sigma > 0.0)
            yaw += noise.orientation_sigma * noise::gaussian(noise.seed, step, id, noise::yaw);
        return wrap_angle(yaw);
    };

    std::vector<SemanticObject> seen;
    for (const auto& o : world.objects) {
        if (!map.footprint.contains(o.position)) continue;
        SemanticObject s;
        s.id = o.id;
        s.name = o.name;
        s.coordinate = to_grid(o.position, o.id);
        s.orientation = noisy_yaw(o.yaw, o.id);
        if (noise.misclassify_prob > 0.0 && alphabet.size() > 1 &&
            noise::uniform(noise.seed, step, o.id, noise::label) < noise.misclassify_prob) {
            const double u = noise::uniform(noise.seed, step, o.id, noise::label_pick);
            auto pick = static_cast<std::size_t>(u * static_cast<double>(alphabet.size() - 1));
            pick = std::min(pick, alphabet.size() - 2);
            std::vector<std::string> others;
            for (const auto& n : alphabet)
                if (n != o.name) others.push_back(n);
            s.name = others[pick];
        }
        seen.push_back(std::move(s));
    }

    const GroundRobot& r = world.ground_robot;
    if (map.footprint.contains(r.position)) {
        const Vec2 body = to_grid(r.position, "robot");
        const double heading = noisy_yaw(r.heading, "robot");
        const Vec2 off = (r.head_offset / mpc) * unit_vector(heading);
        map.parts = RobotParts{body + off, body, body - off};
        SemanticObject s;
        s.id = "robot";
        s.name = "robot";
        s.entity = Entity::robot;
        s.coordinate = body;
        s.orientation = heading;
        seen.push_back(std::move(s));
    }
    if (task.kind == TaskKind::move_to_coordinate) {
        SemanticObject z;
        z.id = "zero";
        z.name = "zero";
        z.entity = Entity::zero_point;
        seen.push_back(std::move(z));
    }
    map.objects = classify_roles(std::move(seen), task);
    return map;
}

}  // namespace aerogrid
