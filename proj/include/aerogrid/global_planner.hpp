#pragma once

// Aerial global path: straight control polygon from main to target, a
// length + curvature + obstacle-penalty cost over uniformly sampled spline
// points, and a deterministic descent over the interior control points.
// All quantities are in grid cells.

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "aerogrid/errors.hpp"
#include "aerogrid/geometry.hpp"
#include "aerogrid/spline.hpp"

namespace aerogrid {

struct GlobalCostWeights {
    double q_length = 1.0;
    double q_curvature = 5.0;
    double q_obstacle = 50.0;
    double d_safe = 1.5;    // cells
    int sample_count = 64;  // m

    void validate() const {
        if (q_length < 0.0 || q_curvature < 0.0 || q_obstacle < 0.0)
            throw InvalidArgument("GlobalCostWeights: weights must be >= 0");
        if (!(d_safe > 0.0)) throw InvalidArgument("GlobalCostWeights: d_safe must be > 0");
        if (sample_count < 2) throw InvalidArgument("GlobalCostWeights: sample_count must be >= 2");
    }
};

using ObstacleSet = std::vector<Circle>;

struct ControlPolygon {
    std::vector<Vec2> points;
    bool at_goal = false;  // main == target; points holds the single shared point
};

inline ControlPolygon straight_line_init(Vec2 main, Vec2 target, int n_controls, int degree = 3) {
    if (n_controls < degree + 1)
        throw InvalidArgument("straight_line_init: n_controls must be >= degree + 1");
    if (main == target) return {{main}, true};
    ControlPolygon poly;
    poly.points.reserve(static_cast<std::size_t>(n_controls));
    for (int i = 0; i < n_controls; ++i) {
        const double f = static_cast<double>(i) / (n_controls - 1);
        poly.points.push_back(main + f * (target - main));
    }
    poly.points.back() = target;
    return poly;
}

struct GlobalCost {
    double length = 0.0;
    double curvature = 0.0;
    double obstacle = 0.0;
    double total = 0.0;
};

// Clearance of a point to an obstacle surface (center distance minus radius).
inline double obstacle_clearance(Vec2 p, const Circle& o) { return distance(p, o.center) - o.radius; }

inline GlobalCost cost_of_samples(const std::vector<Vec2>& s, const GlobalCostWeights& w,
                                  const ObstacleSet& obstacles) {
    const std::size_t m = s.size() - 1;
    GlobalCost c;
    for (std::size_t i = 1; i <= m; ++i) c.length += distance(s[i], s[i - 1]);
    for (std::size_t i = 2; i + 1 <= m; ++i) c.curvature += norm(s[i + 1] - 2.0 * s[i] + s[i - 1]);
    for (const Circle& o : obstacles) {
        for (std::size_t i = 1; i <= m; ++i) {
            const double v = w.d_safe - obstacle_clearance(s[i], o);
            if (!(v <= 0.0)) c.obstacle += v * v;  // NaN passes through
        }
    }
    c.total = w.q_length * c.length + w.q_curvature * c.curvature + w.q_obstacle * c.obstacle;
    return c;
}

inline GlobalCost cost_global(const SplinePath& path, const GlobalCostWeights& weights,
                              const ObstacleSet& obstacles) {
    weights.validate();
    return cost_of_samples(sample(path, weights.sample_count), weights, obstacles);
}

struct OptimizeOptions {
    int max_iters = 500;
    double step = 1.0;                  // initial and maximum line-search step, cells
    double tolerance = 1e-8;            // relative cost change that ends the descent
    double fd_step = 1e-4;              // central-difference step, cells
    double armijo = 1e-4;
    double gradient_tolerance = 1e-9;   // relative to the current cost
    bool detour_seeds = true;           // also descend from left/right bent polygons
};

struct OptimizeResult {
    SplinePath path;
    GlobalCost cost;
    GlobalCost initial_cost;            // cost of the caller's polygon
    std::vector<double> history;        // cost after each accepted step; [0] is the start cost
    int iterations = 0;
    bool converged = false;
    bool at_goal = false;
    std::string seed = "straight";
};

namespace detail {

class InteriorDescent {
public:
    InteriorDescent(std::vector<Vec2> controls, int degree, const GlobalCostWeights& w,
                    const ObstacleSet& obstacles, const OptimizeOptions& options)
        : controls_(std::move(controls)), degree_(degree), w_(w), obstacles_(obstacles), opt_(options) {}

    OptimizeResult run() {
        std::vector<double> x = flatten();
        double J = cost_at(x);
        OptimizeResult r;
        r.history.push_back(J);
        double t = opt_.step;
        const double min_step = opt_.step * 1e-12;

        for (int iter = 0; iter < opt_.max_iters; ++iter) {
            const std::vector<double> g = gradient(x);
            double gn = 0.0;
            for (double v : g) gn += v * v;
            gn = std::sqrt(gn);
            if (x.empty() || gn <= opt_.gradient_tolerance * std::max(J, 1e-300)) {
                r.converged = true;
                break;
            }
            bool accepted = false;
            std::vector<double> trial(x.size());
            double J_trial = J;
            while (t >= min_step) {
                for (std::size_t i = 0; i < x.size(); ++i) trial[i] = x[i] - t * g[i] / gn;
                J_trial = cost_at(trial);
                if (J_trial <= J - opt_.armijo * t * gn) {
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
            if (!accepted) {
                r.converged = true;
                break;
            }
            const double rel = (J - J_trial) / std::max(std::abs(J), 1e-300);
            x = trial;
            J = J_trial;
            r.history.push_back(J);
            r.iterations = iter + 1;
            if (rel < opt_.tolerance) {
                r.converged = true;
                break;
            }
            t = std::min(2.0 * t, opt_.step);
        }
        r.path = make_clamped_uniform(unflatten(x), degree_);
        r.cost = cost_global(r.path, w_, obstacles_);
        return r;
    }

private:
    std::vector<double> flatten() const {
        std::vector<double> x;
        for (std::size_t i = 1; i + 1 < controls_.size(); ++i) {
            x.push_back(controls_[i].x);
            x.push_back(controls_[i].y);
        }
        return x;
    }

    std::vector<Vec2> unflatten(const std::vector<double>& x) const {
        std::vector<Vec2> c = controls_;
        for (std::size_t i = 1; i + 1 < c.size(); ++i) c[i] = {x[2 * (i - 1)], x[2 * (i - 1) + 1]};
        return c;
    }

    double cost_at(const std::vector<double>& x) const {
        const double J = cost_global(make_clamped_uniform(unflatten(x), degree_), w_, obstacles_).total;
        if (!std::isfinite(J)) throw NumericalError("optimize: non-finite global cost encountered");
        return J;
    }

    std::vector<double> gradient(std::vector<double> x) const {
        std::vector<double> g(x.size());
        const double h = opt_.fd_step;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double x0 = x[i];
            x[i] = x0 + h;
            const double up = cost_at(x);
            x[i] = x0 - h;
            const double down = cost_at(x);
            x[i] = x0;
            g[i] = (up - down) / (2.0 * h);
        }
        return g;
    }

    std::vector<Vec2> controls_;
    int degree_;
    const GlobalCostWeights& w_;
    const ObstacleSet& obstacles_;
    const OptimizeOptions& opt_;
};

// Interior points pushed sideways along a half-sine profile.
inline std::vector<Vec2> bent_polygon(const std::vector<Vec2>& controls, double offset) {
    const Vec2 along = controls.back() - controls.front();
    const Vec2 normal = Vec2{-along.y, along.x} / norm(along);
    std::vector<Vec2> out = controls;
    const auto n = static_cast<double>(controls.size() - 1);
    for (std::size_t i = 1; i + 1 < out.size(); ++i)
        out[i] += offset * std::sin(kPi * static_cast<double>(i) / n) * normal;
    return out;
}

}  // namespace detail

// Minimizes the global cost over interior control points; the endpoints
// (main and target) never move. When the start polygon violates d_safe and
// detour seeds are enabled, descents from polygons bent to either side are
// also run and the lowest final cost wins, so a path that starts exactly
// through an obstacle center is not stuck on the symmetric saddle.
inline OptimizeResult optimize(const std::vector<Vec2>& init, int degree, const GlobalCostWeights& weights,
                               const ObstacleSet& obstacles, const OptimizeOptions& options = {}) {
    weights.validate();
    if (options.max_iters < 0 || !(options.step > 0.0) || !(options.fd_step > 0.0))
        throw InvalidArgument("optimize: invalid options");

    if (init.size() == 1) {
        OptimizeResult r;
        r.at_goal = true;
        r.converged = true;
        r.path = make_clamped_uniform(std::vector<Vec2>(static_cast<std::size_t>(degree) + 1, init.front()), degree);
        r.cost = r.initial_cost = cost_global(r.path, weights, obstacles);
        r.history = {r.cost.total};
        return r;
    }

    const SplinePath init_path = make_clamped_uniform(init, degree);
    const GlobalCost init_cost = cost_global(init_path, weights, obstacles);
    if (!std::isfinite(init_cost.total)) throw NumericalError("optimize: initial cost is not finite");

    OptimizeResult best = detail::InteriorDescent(init, degree, weights, obstacles, options).run();

    double worst_violation = 0.0;
    double max_radius = 0.0;
    for (const Vec2& p : sample(init_path, weights.sample_count)) {
        for (const Circle& o : obstacles) {
            worst_violation = std::max(worst_violation, weights.d_safe - obstacle_clearance(p, o));
            max_radius = std::max(max_radius, o.radius);
        }
    }
    if (options.detour_seeds && worst_violation > 0.0 && init.size() > 2 && !(init.front() == init.back())) {
        const double offset = 2.0 * (weights.d_safe + max_radius);
        const char* names[] = {"detour_left", "detour_right"};
        const double signs[] = {1.0, -1.0};
        for (int s = 0; s < 2; ++s) {
            OptimizeResult r = detail::InteriorDescent(detail::bent_polygon(init, signs[s] * offset), degree,
                                                       weights, obstacles, options)
                                   .run();
            if (r.cost.total < best.cost.total) {
                best = std::move(r);
                best.seed = names[s];
            }
        }
    }
    best.initial_cost = init_cost;
    return best;
}

// Shortest clearance of a densely resampled path to any obstacle surface.
inline double min_clearance(const SplinePath& path, const ObstacleSet& obstacles, int m = 512) {
    double best = std::numeric_limits<double>::infinity();
    for (const Vec2& p : sample(path, m))
        for (const Circle& o : obstacles) best = std::min(best, obstacle_clearance(p, o));
    return best;
}

}  // namespace aerogrid
