#pragma once

// Ground-robot local planner. A fixed fan of candidate headings is scored by
// target alignment (biased by distance), pull toward the zero point (the
// drone's ground projection), obstacle proximity along a finite look-ahead
// segment, and a hard window barrier. Everything is in grid cells of the
// current aerial image, centered on the zero point.

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "aerogrid/errors.hpp"
#include "aerogrid/geometry.hpp"
#include "aerogrid/global_planner.hpp"

namespace aerogrid {

struct LocalCostWeights {
    double q_align = 1.0;
    double q_zero = 0.5;
    double q_obstacle = 2.0;
    double q_window = 1.0;
    double beta = 5.0;
    double d_safe = 1.5;              // cells
    double epsilon = 1e-6;            // cells
    double lookahead = 5.0;           // cells
    double window_half_extent = 7.5;  // cells
    int candidate_count = 36;

    void validate() const {
        if (q_align < 0 || q_zero < 0 || q_obstacle < 0 || q_window < 0 || beta < 0)
            throw InvalidArgument("LocalCostWeights: weights must be >= 0");
        if (!(epsilon > 0.0)) throw InvalidArgument("LocalCostWeights: epsilon must be > 0");
        if (!(d_safe > 0.0)) throw InvalidArgument("LocalCostWeights: d_safe must be > 0");
        if (!(lookahead > 0.0)) throw InvalidArgument("LocalCostWeights: lookahead must be > 0");
        if (!(window_half_extent > 0.0)) throw InvalidArgument("LocalCostWeights: window_half_extent must be > 0");
        if (candidate_count < 4) throw InvalidArgument("LocalCostWeights: candidate_count must be >= 4");
    }
};

struct LocalObservation {
    Vec2 main;                      // M: the robot body
    std::optional<Vec2> target;     // T
    Vec2 zero{};                    // Z: always the image center
    ObstacleSet obstacles;
    RobotParts parts;
    // Point whose distance to the goal decides arrival: the carried object,
    // or where an object would sit once attached. Defaults to main.
    std::optional<Vec2> effector;

    double heading() const { return bearing(parts.tail, parts.head); }
    Vec2 goal() const { return target ? *target : zero; }
    Vec2 reference() const { return effector ? *effector : main; }

    void validate() const {
        if (!(zero == Vec2{})) throw InvalidArgument("LocalObservation: zero point must be (0, 0)");
        if (parts.head == parts.tail) throw InvalidArgument("LocalObservation: head and tail coincide");
        if (!std::isfinite(heading())) throw InvalidArgument("LocalObservation: heading is not finite");
    }
};

struct LocalCost {
    double align = 0.0;     // A
    double zero = 0.0;      // A_zero
    double obstacle = 0.0;  // O_local
    double window = 0.0;    // W: 0 or +inf
    double total = 0.0;
};

// Length of the look-ahead segment: capped at the goal distance so that
// obstacles beyond the goal do not repel the final approach.
inline double segment_length(const LocalObservation& obs, const LocalCostWeights& w) {
    return std::min(w.lookahead, distance(obs.goal(), obs.main));
}

inline LocalCost cost_local(double theta, const LocalObservation& obs, const LocalCostWeights& w) {
    const Vec2 d = unit_vector(theta);
    const Vec2 M = obs.main;
    LocalCost c;

    if (obs.target) {
        const double dist = distance(*obs.target, M);
        if (dist > 0.0) c.align = (w.beta / dist) * angle_between_units(d, (*obs.target - M) / dist);
    }
    const double dz = distance(obs.zero, M);
    if (dz > 0.0) c.zero = angle_between_units(d, (obs.zero - M) / dz);

    const double len = segment_length(obs, w);
    for (const Circle& o : obs.obstacles) {
        const Vec2 v = o.center - M;
        const double along = dot(v, d);
        if (along < 0.0 || along > len) continue;
        const double d_perp = std::max(0.0, std::abs(cross(d, v)) - o.radius);
        if (d_perp < w.d_safe) c.obstacle += 1.0 / (d_perp + w.epsilon);
    }

    const Vec2 end = M + len * d;
    const bool outside = std::abs(end.x - obs.zero.x) > w.window_half_extent ||
                         std::abs(end.y - obs.zero.y) > w.window_half_extent;
    c.window = outside ? std::numeric_limits<double>::infinity() : 0.0;

    if (outside) {
        c.total = std::numeric_limits<double>::infinity();
    } else {
        c.total = w.q_align * c.align + w.q_zero * c.zero + w.q_obstacle * c.obstacle;
    }
    return c;
}

inline double candidate_angle(int i, int count) { return 2.0 * kPi * i / count; }

struct CandidateCost {
    double theta = 0.0;
    LocalCost cost;
};

struct DirectionChoice {
    double theta = 0.0;
    int index = 0;
    std::vector<CandidateCost> table;
};

// Angular distance from a candidate to the goal bearing; used for tie-breaks.
inline double goal_deviation(double theta, const LocalObservation& obs) {
    const Vec2 to_goal = obs.goal() - obs.main;
    const double n = norm(to_goal);
    if (n == 0.0) return 0.0;
    return angle_between_units(unit_vector(theta), to_goal / n);
}

inline DirectionChoice select_direction(const LocalObservation& obs, const LocalCostWeights& w) {
    w.validate();
    DirectionChoice out;
    out.table.reserve(static_cast<std::size_t>(w.candidate_count));
    int best = -1;
    for (int i = 0; i < w.candidate_count; ++i) {
        const double theta = candidate_angle(i, w.candidate_count);
        out.table.push_back({theta, cost_local(theta, obs, w)});
        const double J = out.table.back().cost.total;
        if (!std::isfinite(J)) continue;
        if (best < 0) {
            best = i;
            continue;
        }
        const double Jb = out.table[static_cast<std::size_t>(best)].cost.total;
        if (J < Jb || (J == Jb && goal_deviation(theta, obs) <
                                      goal_deviation(out.table[static_cast<std::size_t>(best)].theta, obs)))
            best = i;
    }
    if (best < 0) throw BlockedError("select_direction: every candidate direction leaves the window");
    out.index = best;
    out.theta = out.table[static_cast<std::size_t>(best)].theta;
    return out;
}

struct StepThresholds {
    double dist_stop = 0.5;   // cells
    double angle_tol = 0.1;   // radians
    double step = 0.25;       // cells per forward/backward move
};

struct MotionCommand {
    enum class Kind { stop, rotate, forward, backward };
    Kind kind = Kind::stop;
    double target_heading = 0.0;  // rotate: heading to turn to (radians)
    double distance = 0.0;        // forward/backward: travel length

    friend bool operator==(const MotionCommand&, const MotionCommand&) = default;
};

inline const char* to_string(MotionCommand::Kind k) {
    switch (k) {
        case MotionCommand::Kind::stop: return "stop";
        case MotionCommand::Kind::rotate: return "rotate";
        case MotionCommand::Kind::forward: return "forward";
        case MotionCommand::Kind::backward: return "backward";
    }
    return "?";
}

// Turns the selected direction into one motion primitive. Arrival needs both
// the distance criterion and, when a goal orientation is given, the heading
// criterion; inside the stop radius the robot turns toward that orientation
// instead of toward theta*.
inline MotionCommand step_decision(const LocalObservation& obs, double theta_star, const StepThresholds& th,
                                   std::optional<double> goal_orientation = std::nullopt) {
    using K = MotionCommand::Kind;
    if (!std::isfinite(theta_star)) throw InvalidArgument("step_decision: theta* must be finite");
    const double heading = obs.heading();
    const Vec2 goal = obs.goal();
    const Vec2 ref = obs.reference();

    if (distance(goal, ref) < th.dist_stop) {
        if (!goal_orientation || std::abs(wrap_angle(heading - *goal_orientation)) < th.angle_tol)
            return {K::stop, heading, 0.0};
        return {K::rotate, *goal_orientation, 0.0};
    }
    if (std::abs(wrap_angle(heading - theta_star)) > th.angle_tol) return {K::rotate, theta_star, 0.0};
    const double along = dot(goal - ref, unit_vector(heading));
    return {along >= 0.0 ? K::forward : K::backward, heading, th.step};
}

}  // namespace aerogrid
