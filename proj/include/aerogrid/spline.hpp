#pragma once

// Clamped B-spline curves over planar control points.

#include <cstddef>
#include <vector>

#include "aerogrid/errors.hpp"
#include "aerogrid/geometry.hpp"

namespace aerogrid {

struct SplinePath {
    std::vector<Vec2> control_points;
    int degree = 3;
    std::vector<double> knots;

    // Highest control point index (n); there are n+1 control points.
    int last_index() const { return static_cast<int>(control_points.size()) - 1; }

    void validate() const {
        if (degree < 1) throw InvalidArgument("SplinePath: degree must be >= 1");
        if (last_index() < degree)
            throw InvalidArgument("SplinePath: need at least degree+1 control points");
        if (knots.size() != control_points.size() + static_cast<std::size_t>(degree) + 1)
            throw InvalidArgument("SplinePath: knot count must equal n + k + 2");
        for (std::size_t i = 1; i < knots.size(); ++i)
            if (knots[i] < knots[i - 1]) throw InvalidArgument("SplinePath: knots must be non-decreasing");
    }
};

inline SplinePath make_clamped_uniform(std::vector<Vec2> control_points, int degree = 3) {
    if (degree < 1) throw InvalidArgument("make_clamped_uniform: degree must be >= 1");
    const int n = static_cast<int>(control_points.size()) - 1;
    if (n < degree)
        throw InvalidArgument("make_clamped_uniform: need at least degree+1 control points");

    SplinePath path{std::move(control_points), degree, {}};
    path.knots.reserve(static_cast<std::size_t>(n + degree + 2));
    for (int i = 0; i <= degree; ++i) path.knots.push_back(0.0);
    const int interior = n - degree;
    for (int j = 1; j <= interior; ++j) path.knots.push_back(static_cast<double>(j) / (interior + 1));
    for (int i = 0; i <= degree; ++i) path.knots.push_back(1.0);
    return path;
}

// All n+1 basis values N_{i,k}(u), by the Cox-de Boor recursion with 0/0 := 0.
// The right end u = t_last is assigned to the last non-empty knot span so the
// clamped curve interpolates its final control point.
inline std::vector<double> basis_functions(const SplinePath& path, double u) {
    const auto& t = path.knots;
    const int k = path.degree;
    const int span_count = static_cast<int>(t.size()) - 1;

    int last_span = span_count - 1;
    while (last_span > 0 && !(t[static_cast<std::size_t>(last_span)] < t[static_cast<std::size_t>(last_span) + 1]))
        --last_span;

    std::vector<double> N(static_cast<std::size_t>(span_count), 0.0);
    for (int i = 0; i < span_count; ++i) {
        const double lo = t[static_cast<std::size_t>(i)];
        const double hi = t[static_cast<std::size_t>(i) + 1];
        const bool inside = (lo <= u && u < hi) || (i == last_span && u == hi);
        N[static_cast<std::size_t>(i)] = inside ? 1.0 : 0.0;
    }
    for (int p = 1; p <= k; ++p) {
        for (int i = 0; i + p < span_count; ++i) {
            const auto ui = static_cast<std::size_t>(i);
            const auto up = static_cast<std::size_t>(p);
            double left = 0.0;
            const double dl = t[ui + up] - t[ui];
            if (dl != 0.0) left = (u - t[ui]) / dl * N[ui];
            double right = 0.0;
            const double dr = t[ui + up + 1] - t[ui + 1];
            if (dr != 0.0) right = (t[ui + up + 1] - u) / dr * N[ui + 1];
            N[ui] = left + right;
        }
    }
    N.resize(path.control_points.size());
    return N;
}

inline Vec2 evaluate(const SplinePath& path, double u) {
    if (!(u >= 0.0 && u <= 1.0)) throw InvalidArgument("evaluate: u must lie in [0, 1]");
    const std::vector<double> N = basis_functions(path, u);
    Vec2 p;
    for (std::size_t i = 0; i < N.size(); ++i) p += N[i] * path.control_points[i];
    return p;
}

// m+1 points at u_i = i/m.
inline std::vector<Vec2> sample(const SplinePath& path, int m) {
    if (m < 2) throw InvalidArgument("sample: m must be >= 2");
    std::vector<Vec2> out;
    out.reserve(static_cast<std::size_t>(m) + 1);
    for (int i = 0; i <= m; ++i) out.push_back(evaluate(path, static_cast<double>(i) / m));
    return out;
}

}  // namespace aerogrid
