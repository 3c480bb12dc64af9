#pragma once

// Planar vector math shared by every module, plus tagged point types for the
// three coordinate frames (pixels, grid cells, meters).

#include <algorithm>
#include <cmath>
#include <numbers>

namespace aerogrid {

inline constexpr double kPi = std::numbers::pi;

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    constexpr Vec2& operator+=(Vec2 o) { x += o.x; y += o.y; return *this; }
    constexpr Vec2& operator-=(Vec2 o) { x -= o.x; y -= o.y; return *this; }
    constexpr Vec2& operator*=(double s) { x *= s; y *= s; return *this; }

    friend constexpr bool operator==(Vec2, Vec2) = default;
};

constexpr Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
constexpr Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
constexpr Vec2 operator-(Vec2 a) { return {-a.x, -a.y}; }
constexpr Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
constexpr Vec2 operator*(Vec2 a, double s) { return {s * a.x, s * a.y}; }
constexpr Vec2 operator/(Vec2 a, double s) { return {a.x / s, a.y / s}; }

constexpr double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
inline double distance(Vec2 a, Vec2 b) { return norm(a - b); }

inline Vec2 unit_vector(double angle) { return {std::cos(angle), std::sin(angle)}; }
inline double bearing(Vec2 from, Vec2 to) { return std::atan2(to.y - from.y, to.x - from.x); }

// Wraps to (-pi, pi].
inline double wrap_angle(double a) {
    a = std::remainder(a, 2.0 * kPi);
    if (a <= -kPi) a += 2.0 * kPi;
    return a;
}

// arccos of the dot product of two unit vectors, clamped against rounding.
inline double angle_between_units(Vec2 a, Vec2 b) {
    return std::acos(std::clamp(dot(a, b), -1.0, 1.0));
}

struct PixelFrame {};
struct GridFrame {};
struct WorldFrame {};

// A point tagged with its coordinate frame so pixels, cells and meters cannot
// be mixed by accident. Conversions live in gridmask.hpp.
template <class Frame>
struct Point {
    double x = 0.0;
    double y = 0.0;

    constexpr Vec2 vec() const { return {x, y}; }
    static constexpr Point from(Vec2 v) { return {v.x, v.y}; }

    friend constexpr bool operator==(const Point&, const Point&) = default;
};

using PixelPoint = Point<PixelFrame>;
using GridPoint = Point<GridFrame>;
using WorldPoint = Point<WorldFrame>;

// Axis-aligned rectangle, used for camera footprints and arenas.
struct Rect {
    Vec2 min;
    Vec2 max;

    bool contains(Vec2 p, double inset = 0.0) const {
        return p.x >= min.x + inset && p.x <= max.x - inset && p.y >= min.y + inset &&
               p.y <= max.y - inset;
    }
    Vec2 center() const { return 0.5 * (min + max); }
    double width() const { return max.x - min.x; }
    double height() const { return max.y - min.y; }

    friend bool operator==(const Rect&, const Rect&) = default;
};

// Keypoints of the ground robot as seen from above.
struct RobotParts {
    Vec2 head;
    Vec2 body;
    Vec2 tail;

    friend bool operator==(const RobotParts&, const RobotParts&) = default;
};

struct Circle {
    Vec2 center;
    double radius = 0.0;

    friend bool operator==(const Circle&, const Circle&) = default;
};

}  // namespace aerogrid
