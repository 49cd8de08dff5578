#pragma once

// Shared fixtures and test-side oracles. The oracles are deliberately naive
// and share no code with the library beyond the data types.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "ptexplore/ptexplore.hpp"

namespace ptexplore::testing {

/// Map from ASCII rows, top row = highest y. '#' obstacle, '.' free, ' ' empty.
inline WorldMap ascii_map(const std::vector<std::string>& rows, double res = 1.0, std::string name = "ascii") {
    std::vector<Vec2> free_pts, obst;
    const std::size_t h = rows.size();
    std::size_t w = 0;
    for (std::size_t r = 0; r < h; ++r) {
        w = std::max(w, rows[r].size());
        for (std::size_t c = 0; c < rows[r].size(); ++c) {
            const Vec2 p{(static_cast<double>(c) + 0.5) * res, (static_cast<double>(h - 1 - r) + 0.5) * res};
            if (rows[r][c] == '#') obst.push_back(p);
            if (rows[r][c] == '.') free_pts.push_back(p);
        }
    }
    return WorldMap(std::move(name), res, Bounds{0, 0, static_cast<double>(w) * res, static_cast<double>(h) * res},
                    std::move(free_pts), std::move(obst));
}

/// Obstacle-free w x h lattice of free points at cell centres.
inline WorldMap open_map(std::size_t w, std::size_t h, double res = 1.0) {
    std::vector<Vec2> pts;
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            pts.push_back({(static_cast<double>(x) + 0.5) * res, (static_cast<double>(y) + 0.5) * res});
        }
    }
    return WorldMap("open", res, Bounds{0, 0, static_cast<double>(w) * res, static_cast<double>(h) * res},
                    std::move(pts), {});
}

/// Free lattice with a one-point-thick obstacle border.
inline WorldMap walled_map(std::size_t w, std::size_t h) {
    std::vector<std::string> rows(h, std::string(w, '.'));
    for (std::size_t x = 0; x < w; ++x) rows.front()[x] = rows.back()[x] = '#';
    for (auto& r : rows) r.front() = r.back() = '#';
    return ascii_map(rows);
}

inline std::vector<PointIndex> brute_range(std::span<const Vec2> pts, Vec2 c, double r) {
    std::vector<PointIndex> out;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const double dx = pts[i].x - c.x;
        const double dy = pts[i].y - c.y;
        if (dx * dx + dy * dy <= r * r) out.push_back(static_cast<PointIndex>(i));
    }
    return out;
}

/// All-pairs occlusion: every candidate against every obstacle.
inline std::vector<PointIndex> naive_occlusion(Vec2 robot, std::span<const Vec2> free_pts,
                                               std::span<const PointIndex> candidates,
                                               std::span<const Vec2> obstacle_pts, std::span<const PointIndex> obstacles,
                                               double alpha1, double alpha2, bool literal = false) {
    std::vector<PointIndex> out;
    for (PointIndex f : candidates) {
        const double fx = free_pts[f].x - robot.x;
        const double fy = free_pts[f].y - robot.y;
        const double nf = std::sqrt(fx * fx + fy * fy);
        bool removed = false;
        for (PointIndex o : obstacles) {
            const double ox = obstacle_pts[o].x - robot.x;
            const double oy = obstacle_pts[o].y - robot.y;
            const double no = std::sqrt(ox * ox + oy * oy);
            const double cosine = (fx * ox + fy * oy) / (nf * no);
            const bool nearer = literal ? (nf - no < alpha2) : (nf - no > alpha2);
            if (cosine > 1.0 - alpha1 && nearer) {
                removed = true;
                break;
            }
        }
        if (!removed) out.push_back(f);
    }
    std::sort(out.begin(), out.end());
    return out;
}

inline std::vector<PointIndex> iota_indices(std::size_t n) {
    std::vector<PointIndex> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = static_cast<PointIndex>(i);
    return v;
}

/// Small, fast environment on an open walled room.
inline EnvConfig small_config(std::size_t agents = 3) {
    EnvConfig cfg;
    ScenarioSpec spec;
    spec.size = 40.0;
    spec.obstacle_density = 0.1;
    spec.seed = 3;
    cfg.map.scenario = spec;
    cfg.n_agents = agents;
    cfg.horizon = 60;
    return cfg;
}

} // namespace ptexplore::testing
