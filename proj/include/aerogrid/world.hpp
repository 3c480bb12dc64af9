#pragma once

// Ground-truth simulator state and per-tick kinematics for the drone and the
// ground robot, plus the magnetic attach/detach mechanism, carry monitoring
// and debounced collision events. Units are meters, radians and ticks.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "aerogrid/errors.hpp"
#include "aerogrid/geometry.hpp"
#include "aerogrid/local_planner.hpp"
#include "aerogrid/semantic_map.hpp"

namespace aerogrid {

struct WorldObject {
    std::string id;
    std::string name;
    Vec2 position;
    double yaw = 0.0;
    double radius = 0.1;
    bool movable = true;

    friend bool operator==(const WorldObject&, const WorldObject&) = default;
};

struct DroneState {
    Vec2 position;
    double altitude = 2.0;
    std::size_t waypoint_index = 0;

    friend bool operator==(const DroneState&, const DroneState&) = default;
};

struct GroundRobot {
    Vec2 position;
    double heading = 0.0;
    double radius = 0.18;
    double head_offset = 0.2;  // body center to the magnet face
    // Sense chosen for the turn in progress and the heading it was chosen for.
    std::optional<std::pair<double, int>> turn;

    Vec2 head() const { return position + head_offset * unit_vector(heading); }
    Vec2 tail() const { return position - head_offset * unit_vector(heading); }
    RobotParts parts() const { return {head(), position, tail()}; }
    // Where an object of radius r sits when held by the magnet.
    Vec2 carry_point(double object_radius) const {
        return position + (head_offset + object_radius) * unit_vector(heading);
    }

    friend bool operator==(const GroundRobot&, const GroundRobot&) = default;
};

struct WorldState {
    std::vector<WorldObject> objects;
    DroneState drone;
    GroundRobot ground_robot;
    std::optional<std::string> attachment;  // id of the held object
    double attachment_yaw_offset = 0.0;     // object yaw minus robot heading at attach time
    long step = 0;

    WorldObject* find(const std::string& id) {
        for (auto& o : objects)
            if (o.id == id) return &o;
        return nullptr;
    }
    const WorldObject* find(const std::string& id) const {
        for (const auto& o : objects)
            if (o.id == id) return &o;
        return nullptr;
    }
    const WorldObject* find_by_name(const std::string& name) const {
        for (const auto& o : objects)
            if (o.name == name) return &o;
        return nullptr;
    }

    friend bool operator==(const WorldState&, const WorldState&) = default;
};

struct SimParams {
    double dt = 1.0;
    double drone_speed = 0.08;           // m/tick
    double ground_step = 0.05;           // m/tick
    double rotate_rate = 0.15;           // rad/tick
    double follow_radius = 1.0;          // m
    double attach_range = 0.25;          // m, head to object center
    double attach_angle_tol = 0.2;       // rad
    double carry_radius = 0.2;           // m, observed head to observed carried object
    double rotate_safe_clearance = 0.1;  // m; below this the clearance rule overrides the shorter turn

    void validate() const {
        for (double v : {dt, drone_speed, ground_step, rotate_rate, follow_radius, attach_range, attach_angle_tol,
                         carry_radius, rotate_safe_clearance})
            if (!(v > 0.0) || !std::isfinite(v)) throw InvalidArgument("SimParams: all parameters must be > 0");
    }
};

// Advances the drone along the polyline by drone_speed, carrying leftover
// distance past reached waypoints. Holds while the ground robot trails more
// than follow_radius behind; a robot that is ahead along the current leg does
// not make the drone wait. Returns true when the drone moved.
inline bool step_drone(WorldState& s, const std::vector<Vec2>& path, const SimParams& p) {
    if (path.empty()) throw InvalidArgument("step_drone: path must be non-empty");
    DroneState& d = s.drone;
    if (d.waypoint_index >= path.size()) return false;

    const Vec2 offset = s.ground_robot.position - d.position;
    if (norm(offset) > p.follow_radius) {
        const Vec2 leg = path[d.waypoint_index] - d.position;
        if (dot(offset, leg) <= 0.0) return false;
    }

    double budget = p.drone_speed * p.dt;
    while (budget > 0.0 && d.waypoint_index < path.size()) {
        const Vec2 wp = path[d.waypoint_index];
        const double dist = distance(d.position, wp);
        if (dist <= budget) {
            d.position = wp;
            budget -= dist;
            ++d.waypoint_index;
        } else {
            d.position += (budget / dist) * (wp - d.position);
            budget = 0.0;
        }
    }
    return true;
}

inline bool drone_finished(const WorldState& s, const std::vector<Vec2>& path) {
    return s.drone.waypoint_index >= path.size();
}

namespace detail {

// Smallest clearance met while turning by `angle` radians in direction `sign`
// (+1 is counterclockwise). The swept body is the held object, or the head
// point.
inline double swept_clearance(const WorldState& s, const std::vector<Circle>& obstacles, double sign, double angle) {
    const GroundRobot& r = s.ground_robot;
    double radius = 0.0;
    double arm = r.head_offset;
    if (s.attachment) {
        if (const WorldObject* o = s.find(*s.attachment)) {
            radius = o->radius;
            arm = r.head_offset + o->radius;
        }
    }
    double best = std::numeric_limits<double>::infinity();
    constexpr double kSampleStep = 0.05;  // rad
    const int samples = std::max(1, static_cast<int>(std::ceil(angle / kSampleStep)));
    for (int i = 1; i <= samples; ++i) {
        const double a = r.heading + sign * angle * i / samples;
        const Vec2 c = r.position + arm * unit_vector(a);
        for (const Circle& ob : obstacles) best = std::min(best, distance(c, ob.center) - ob.radius - radius);
    }
    return best;
}

inline void slave_attached(WorldState& s) {
    if (!s.attachment) return;
    WorldObject* o = s.find(*s.attachment);
    if (!o) return;
    o->position = s.ground_robot.carry_point(o->radius);
    o->yaw = wrap_angle(s.ground_robot.heading + s.attachment_yaw_offset);
}

}  // namespace detail

// Rotation sense for a turn toward `target_heading`: the shorter arc when it
// keeps rotate_safe_clearance, else the longer arc when that one does, else
// whichever arc has more clearance. Exact ties turn counterclockwise.
// Returns +1 or -1.
inline int rotation_sign(const WorldState& s, double target_heading, const std::vector<Circle>& obstacles,
                         const SimParams& p) {
    double ccw_arc = std::fmod(target_heading - s.ground_robot.heading, 2.0 * kPi);
    if (ccw_arc < 0.0) ccw_arc += 2.0 * kPi;
    const double cw_arc = 2.0 * kPi - ccw_arc;
    const double ccw = detail::swept_clearance(s, obstacles, +1.0, ccw_arc);
    const double cw = detail::swept_clearance(s, obstacles, -1.0, cw_arc);
    const int shorter = ccw_arc <= cw_arc ? +1 : -1;
    const double short_clear = shorter > 0 ? ccw : cw;
    const double long_clear = shorter > 0 ? cw : ccw;
    if (short_clear >= p.rotate_safe_clearance) return shorter;
    if (long_clear >= p.rotate_safe_clearance) return -shorter;
    if (ccw == cw) return +1;
    return ccw > cw ? +1 : -1;
}

// Applies one motion primitive. Forward/backward travel ground_step meters;
// a rotation turns by at most rotate_rate toward the commanded heading.
inline void step_ground(WorldState& s, const MotionCommand& cmd, const std::vector<Circle>& obstacles_in_view,
                        const SimParams& p) {
    GroundRobot& r = s.ground_robot;
    switch (cmd.kind) {
        case MotionCommand::Kind::stop:
            r.turn.reset();
            break;
        case MotionCommand::Kind::rotate: {
            if (!std::isfinite(cmd.target_heading)) throw InvalidArgument("step_ground: non-finite heading");
            // Keep the sense while the commanded heading stays put, otherwise the
            // clearance rule can flip it every tick.
            constexpr double kSameTarget = 0.2;
            if (!r.turn || std::abs(wrap_angle(cmd.target_heading - r.turn->first)) > kSameTarget)
                r.turn = std::pair{cmd.target_heading, rotation_sign(s, cmd.target_heading, obstacles_in_view, p)};
            const int sign = r.turn->second;
            double remaining = std::fmod(sign * (cmd.target_heading - r.heading), 2.0 * kPi);
            if (remaining < 0.0) remaining += 2.0 * kPi;
            const double turn = std::min(p.rotate_rate * p.dt, remaining);
            r.heading = wrap_angle(r.heading + sign * turn);
            break;
        }
        case MotionCommand::Kind::forward:
            r.turn.reset();
            r.position += p.ground_step * p.dt * unit_vector(r.heading);
            break;
        case MotionCommand::Kind::backward:
            r.turn.reset();
            r.position -= p.ground_step * p.dt * unit_vector(r.heading);
            break;
    }
    detail::slave_attached(s);
}

struct Outcome {
    bool ok = false;
    std::string reason;
};

inline Outcome attach(WorldState& s, const std::string& object_id, const SimParams& p) {
    if (s.attachment) return {false, "already holding " + *s.attachment};
    WorldObject* o = s.find(object_id);
    if (!o) return {false, "unknown object " + object_id};
    if (!o->movable) return {false, "object " + object_id + " is immovable"};
    const GroundRobot& r = s.ground_robot;
    const double range = distance(r.head(), o->position);
    if (range > p.attach_range) return {false, "out of range"};
    if (std::abs(wrap_angle(bearing(r.position, o->position) - r.heading)) > p.attach_angle_tol)
        return {false, "misaligned"};
    s.attachment = object_id;
    s.attachment_yaw_offset = wrap_angle(o->yaw - r.heading);
    detail::slave_attached(s);
    return {true, ""};
}

inline Outcome detach(WorldState& s) {
    if (!s.attachment) return {false, "nothing attached"};
    s.attachment.reset();
    s.attachment_yaw_offset = 0.0;
    return {true, ""};
}

// Compares the observed held object (category main, entity object) with the
// observed head. Missing either counts as a dropped object.
inline Outcome carry_check(const LocalSemanticMap& observed, const SimParams& p) {
    const LocalSemanticMap w = to_world(observed);
    if (!w.parts) return {false, "robot not visible"};
    const SemanticObject* held = nullptr;
    for (const auto& o : w.objects)
        if (o.entity == Entity::object && o.category == Category::main) held = &o;
    if (!held) return {false, "carried object not visible"};
    if (distance(held->coordinate, w.parts->head) > p.carry_radius) return {false, "carried object away from head"};
    return {true, ""};
}

struct CollisionKey {
    std::string part;  // "robot" or "carried"
    std::string object;

    friend auto operator<=>(const CollisionKey&, const CollisionKey&) = default;
};

using OverlapSet = std::set<CollisionKey>;

struct CollisionEvent {
    std::string part;
    std::string object;
    long step = 0;
};

// Robot footprint and held object against every other object. Only the
// transition into contact produces an event. `overlaps` is replaced by the
// current overlap set.
inline std::vector<CollisionEvent> detect_collisions(const WorldState& s, OverlapSet& overlaps) {
    OverlapSet now;
    const GroundRobot& r = s.ground_robot;
    const WorldObject* held = s.attachment ? s.find(*s.attachment) : nullptr;
    for (const auto& o : s.objects) {
        if (held && o.id == held->id) continue;
        if (distance(r.position, o.position) < r.radius + o.radius) now.insert({"robot", o.id});
        if (held && distance(held->position, o.position) < held->radius + o.radius) now.insert({"carried", o.id});
    }
    std::vector<CollisionEvent> events;
    for (const auto& k : now)
        if (!overlaps.count(k)) events.push_back({k.part, k.object, s.step});
    overlaps = std::move(now);
    return events;
}

}  // namespace aerogrid
