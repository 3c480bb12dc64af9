#pragma once

// Pixel-grid geometry: lattice lines of the coordinate overlay, the
// altitude/FOV-derived ground scale, and conversions between pixel, grid and
// world coordinates. The grid frame is centered on the image midpoint with x
// to the right and y up; pixel rows grow downward.

#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "aerogrid/errors.hpp"
#include "aerogrid/geometry.hpp"

namespace aerogrid {

struct GridSpec {
    int image_width = 0;
    int image_height = 0;
    int cell_size = 0;

    void validate() const {
        if (image_width <= 0 || image_height <= 0)
            throw InvalidArgument("GridSpec: image dimensions must be positive");
        if (cell_size <= 0) throw InvalidArgument("GridSpec: cell_size must be positive");
        if (cell_size > std::min(image_width, image_height))
            throw InvalidArgument("GridSpec: cell_size exceeds the smaller image dimension");
    }
};

struct CameraModel {
    double altitude = 2.0;                  // meters above ground
    double horizontal_fov = kPi / 2.0;      // radians
    int image_width = 1600;                 // pixels
    int image_height = 1200;                // pixels
    int grid_interval = 80;                 // pixels per grid division

    void validate() const {
        if (!(altitude > 0.0)) throw InvalidArgument("CameraModel: altitude must be > 0");
        if (!(horizontal_fov >= 0.0)) throw InvalidArgument("CameraModel: horizontal_fov must be >= 0");
        if (!(horizontal_fov < kPi))
            throw InvalidArgument("CameraModel: horizontal_fov must be < pi (tangent singularity)");
        if (image_width <= 0 || image_height <= 0)
            throw InvalidArgument("CameraModel: image dimensions must be positive");
        if (grid_interval <= 0) throw InvalidArgument("CameraModel: grid_interval must be > 0");
    }
};

// One lattice line family: pixel positions (ascending) and the integer grid
// index of each line.
struct LatticeLines {
    std::vector<double> positions;
    std::vector<int> indices;
};

struct GridLattice {
    LatticeLines x_lines;  // vertical lines, x_i = w/2 + i*s
    LatticeLines y_lines;  // horizontal lines, y_j = h/2 - j*s
};

inline GridLattice grid_vertices(const GridSpec& spec) {
    spec.validate();
    const double w = spec.image_width;
    const double h = spec.image_height;
    const double s = spec.cell_size;
    GridLattice out;

    const int ix_lo = static_cast<int>(std::floor(-w / (2.0 * s))) - 1;
    const int ix_hi = static_cast<int>(std::ceil(w / (2.0 * s))) + 1;
    for (int i = ix_lo; i <= ix_hi; ++i) {
        const double x = w / 2.0 + i * s;
        if (x >= 0.0 && x < w) {
            out.x_lines.positions.push_back(x);
            out.x_lines.indices.push_back(i);
        }
    }
    // Ascending pixel y means descending j.
    const int jy_hi = static_cast<int>(std::ceil(h / (2.0 * s))) + 1;
    const int jy_lo = static_cast<int>(std::floor(-h / (2.0 * s))) - 1;
    for (int j = jy_hi; j >= jy_lo; --j) {
        const double y = h / 2.0 - j * s;
        if (y >= 0.0 && y < h) {
            out.y_lines.positions.push_back(y);
            out.y_lines.indices.push_back(j);
        }
    }
    return out;
}

struct GroundScale {
    int n_grid = 0;                 // grid divisions across the image width
    double ground_width = 0.0;      // meters covered by the image width
    double meters_per_cell = 0.0;
    bool truncated = false;         // w/r was fractional and got truncated
    bool degenerate = false;        // zero ground width (FOV -> 0)
};

inline GroundScale ground_scale(const CameraModel& camera) {
    camera.validate();
    GroundScale g;
    g.n_grid = camera.image_width / camera.grid_interval;
    g.truncated = camera.image_width % camera.grid_interval != 0;
    if (g.n_grid == 0) throw InvalidArgument("ground_scale: grid_interval wider than the image (N_grid = 0)");
    g.ground_width = 2.0 * camera.altitude * std::tan(camera.horizontal_fov / 2.0);
    g.meters_per_cell = g.ground_width / g.n_grid;
    g.degenerate = !(g.meters_per_cell > 0.0);
    return g;
}

// World-frame rectangle seen by a nadir camera hovering at `center`.
// Vertical extent follows from the image aspect ratio.
inline Rect camera_footprint(const CameraModel& camera, Vec2 center) {
    const GroundScale g = ground_scale(camera);
    const double half_w = g.ground_width / 2.0;
    const double half_h = half_w * static_cast<double>(camera.image_height) / camera.image_width;
    return {{center.x - half_w, center.y - half_h}, {center.x + half_w, center.y + half_h}};
}

inline WorldPoint grid_to_world(double meters_per_cell, GridPoint p, WorldPoint origin = {}) {
    if (!(meters_per_cell > 0.0)) throw InvalidArgument("grid_to_world: meters_per_cell must be > 0");
    return {origin.x + meters_per_cell * p.x, origin.y + meters_per_cell * p.y};
}

inline GridPoint world_to_grid(double meters_per_cell, WorldPoint p, WorldPoint origin = {}) {
    if (!(meters_per_cell > 0.0)) throw InvalidArgument("world_to_grid: meters_per_cell must be > 0");
    return {(p.x - origin.x) / meters_per_cell, (p.y - origin.y) / meters_per_cell};
}

inline GridPoint pixel_to_grid(const GridSpec& spec, PixelPoint p) {
    const double s = spec.cell_size;
    return {(p.x - spec.image_width / 2.0) / s, (spec.image_height / 2.0 - p.y) / s};
}

inline PixelPoint grid_to_pixel(const GridSpec& spec, GridPoint g) {
    const double s = spec.cell_size;
    return {spec.image_width / 2.0 + g.x * s, spec.image_height / 2.0 - g.y * s};
}

namespace detail {

inline std::string num(double v) {
    if (v == 0.0) v = 0.0;  // no "-0"
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

}  // namespace detail

// SVG 1.1 overlay: one <line> per lattice line plus the grid index of every
// line written along the central axes.
inline std::string render_gridmask_svg(const GridSpec& spec) {
    const GridLattice lattice = grid_vertices(spec);
    const double w = spec.image_width;
    const double h = spec.image_height;
    using detail::num;

    std::ostringstream svg;
    svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << spec.image_width
        << "\" height=\"" << spec.image_height << "\" viewBox=\"0 0 " << spec.image_width << ' '
        << spec.image_height << "\">\n"
        << "<g id=\"lines\" stroke=\"#ff0000\" stroke-width=\"1\">\n";
    for (double x : lattice.x_lines.positions)
        svg << "<line x1=\"" << num(x) << "\" y1=\"0\" x2=\"" << num(x) << "\" y2=\"" << num(h) << "\"/>\n";
    for (double y : lattice.y_lines.positions)
        svg << "<line x1=\"0\" y1=\"" << num(y) << "\" x2=\"" << num(w) << "\" y2=\"" << num(y) << "\"/>\n";
    svg << "</g>\n<g id=\"labels\" font-family=\"monospace\" font-size=\"12\" fill=\"#ff0000\">\n";
    for (std::size_t k = 0; k < lattice.x_lines.positions.size(); ++k)
        svg << "<text class=\"x\" x=\"" << num(lattice.x_lines.positions[k] + 2) << "\" y=\""
            << num(h / 2.0 - 2) << "\">" << lattice.x_lines.indices[k] << "</text>\n";
    for (std::size_t k = 0; k < lattice.y_lines.positions.size(); ++k)
        svg << "<text class=\"y\" x=\"" << num(w / 2.0 + 2) << "\" y=\""
            << num(lattice.y_lines.positions[k] - 2) << "\">" << lattice.y_lines.indices[k] << "</text>\n";
    svg << "</g>\n</svg>\n";
    return svg.str();
}

}  // namespace aerogrid
