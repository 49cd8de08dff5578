#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "ptexplore/exploration.hpp"
#include "ptexplore/world_map.hpp"

namespace ptexplore {

enum GridChannel : std::size_t { kExplored = 0, kObstacles = 1, kAgentPosition = 2, kTrajectory = 3 };

/// Four W x H planes, row-major with row index = y cell.
struct GridProjection {
    static constexpr std::size_t kChannels = 4;

    std::size_t width = 0;
    std::size_t height = 0;
    Bounds bounds{};
    std::array<std::vector<float>, kChannels> channels;

    GridProjection() = default;
    GridProjection(std::size_t w, std::size_t h, const Bounds& b) : width(w), height(h), bounds(b) {
        for (auto& c : channels) c.assign(w * h, 0.0f);
    }

    double cell_width() const { return bounds.width() / static_cast<double>(width); }
    double cell_height() const { return bounds.height() / static_cast<double>(height); }

    float at(std::size_t channel, std::size_t cx, std::size_t cy) const { return channels[channel][cy * width + cx]; }

    /// Cell containing `p`, clamped so the max edges belong to the last cell.
    std::size_t cell_of(Vec2 p) const {
        auto axis = [](double v, double lo, double size, std::size_t n) -> std::size_t {
            const double f = std::floor((v - lo) / size);
            if (!(f > 0.0)) return 0;
            if (f >= static_cast<double>(n - 1)) return n - 1;
            return static_cast<std::size_t>(f);
        };
        return axis(p.y, bounds.ymin, cell_height(), height) * width + axis(p.x, bounds.xmin, cell_width(), width);
    }

    Vec2 cell_center(std::size_t cell) const {
        const double cx = static_cast<double>(cell % width) + 0.5;
        const double cy = static_cast<double>(cell / width) + 0.5;
        return {bounds.xmin + cx * cell_width(), bounds.ymin + cy * cell_height()};
    }

    std::size_t nonzero(std::size_t channel) const {
        std::size_t n = 0;
        for (float v : channels[channel]) n += v != 0.0f;
        return n;
    }

    friend bool operator==(const GridProjection&, const GridProjection&) = default;
};

/// Team-level planes (explored, obstacles) shared by every agent's projection.
inline void project_static_channels(const WorldMap& map, const ExplorationMask& mask, GridProjection& grid) {
    auto& explored = grid.channels[kExplored];
    auto& obstacles = grid.channels[kObstacles];
    std::fill(explored.begin(), explored.end(), 0.0f);
    std::fill(obstacles.begin(), obstacles.end(), 0.0f);
    const auto free_pts = map.free_points();
    const auto& team = mask.team();
    for (std::size_t i = 0; i < free_pts.size(); ++i) {
        if (team.test(i)) explored[grid.cell_of(free_pts[i])] = 1.0f;
    }
    for (const auto& p : map.obstacle_points()) obstacles[grid.cell_of(p)] = 1.0f;
}

/// Builds the four-plane feature grid for `agent`. `trajectories[agent]`
/// holds every position the agent has occupied this episode.
inline GridProjection project_to_grid(const WorldMap& map, const ExplorationMask& mask, std::span<const Vec2> positions,
                                      std::span<const std::vector<Vec2>> trajectories, std::size_t agent,
                                      std::size_t width = 125, std::size_t height = 125) {
    if (width == 0 || height == 0) throw std::invalid_argument("grid dimensions must be >= 1");
    if (agent >= positions.size() || agent >= trajectories.size()) {
        throw std::out_of_range("project_to_grid: agent index out of range");
    }
    GridProjection grid(width, height, map.bounds());
    project_static_channels(map, mask, grid);
    grid.channels[kAgentPosition][grid.cell_of(positions[agent])] = 1.0f;
    for (const auto& p : trajectories[agent]) grid.channels[kTrajectory][grid.cell_of(p)] = 1.0f;
    return grid;
}

} // namespace ptexplore
