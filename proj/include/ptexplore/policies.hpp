#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <limits>
#include <vector>

#include "ptexplore/env.hpp"
#include "ptexplore/rng.hpp"

namespace ptexplore {

struct FrontierParams {
    double claim_radius = 10.0; // frontier cells this close to a claimed target are taken
    double lookahead = 6.0;     // max straight-line distance to the emitted waypoint
    double clearance = 0.0;     // min distance from the waypoint segment to obstacle cell centres
};

/// Nearest-frontier baseline on the grid projection. Each agent, in index
/// order, runs a BFS from its cell over cells containing free space to the
/// nearest explored cell bordering unexplored free space, skipping cells
/// claimed by lower-indexed agents. The emitted goal is the farthest cell of
/// that path within the lookahead that the agent can see in a straight line.
class FrontierPolicy {
public:
    FrontierPolicy(const WorldMap& map, std::size_t grid_size, std::size_t region_grid, FrontierParams params = {})
        : bounds_(map.bounds()), region_grid_(region_grid), params_(params), layout_(grid_size, grid_size, map.bounds()) {
        free_cell_.assign(grid_size * grid_size, 0);
        for (const auto& p : map.free_points()) free_cell_[layout_.cell_of(p)] = 1;
    }

    std::vector<Goal> operator()(const StepOutcome& obs) {
        const std::size_t n = obs.states.size();
        std::vector<Goal> goals;
        goals.reserve(n);
        claimed_.clear();
        for (std::size_t a = 0; a < n; ++a) {
            Goal g = encode_target(choose(obs, a), bounds_, region_grid_);
            g.agent = a;
            goals.push_back(g);
        }
        return goals;
    }

private:
    bool is_frontier(const std::vector<float>& explored, std::size_t c) const {
        if (!free_cell_[c] || explored[c] == 0.0f) return false;
        const std::size_t w = layout_.width;
        const std::size_t x = c % w;
        const std::size_t y = c / w;
        auto open = [&](std::size_t k) { return free_cell_[k] && explored[k] == 0.0f; };
        return (x > 0 && open(c - 1)) || (x + 1 < w && open(c + 1)) || (y > 0 && open(c - w)) ||
               (y + 1 < layout_.height && open(c + w));
    }

    bool claimed(std::size_t c) const {
        const Vec2 p = layout_.cell_center(c);
        for (const auto& q : claimed_) {
            if (distance_sq(p, q) <= params_.claim_radius * params_.claim_radius) return true;
        }
        return false;
    }

    bool near_obstacle(const std::vector<float>& obstacles, Vec2 p) const {
        const double cw = layout_.cell_width();
        const double ch = layout_.cell_height();
        const auto rx = static_cast<long>(std::ceil(params_.clearance / cw));
        const auto ry = static_cast<long>(std::ceil(params_.clearance / ch));
        const std::size_t c = layout_.cell_of(p);
        const auto cx = static_cast<long>(c % layout_.width);
        const auto cy = static_cast<long>(c / layout_.width);
        const double r2 = params_.clearance * params_.clearance;
        for (long y = std::max(0L, cy - ry); y <= std::min<long>(layout_.height - 1, cy + ry); ++y) {
            for (long x = std::max(0L, cx - rx); x <= std::min<long>(layout_.width - 1, cx + rx); ++x) {
                const std::size_t k = static_cast<std::size_t>(y) * layout_.width + static_cast<std::size_t>(x);
                if (obstacles[k] != 0.0f && distance_sq(layout_.cell_center(k), p) <= r2) return true;
            }
        }
        return false;
    }

    bool line_of_sight(const std::vector<float>& obstacles, Vec2 from, Vec2 to) const {
        const double len = distance(from, to);
        const double step = 0.25 * std::min(layout_.cell_width(), layout_.cell_height());
        const auto samples = static_cast<std::size_t>(std::ceil(len / step));
        const std::size_t origin = layout_.cell_of(from);
        for (std::size_t k = 1; k <= samples; ++k) {
            const double t = static_cast<double>(k) / static_cast<double>(samples);
            const Vec2 p = from + (to - from) * t;
            const std::size_t c = layout_.cell_of(p);
            if (c != origin && obstacles[c] != 0.0f) return false;
            if (params_.clearance > 0.0 && near_obstacle(obstacles, p)) return false;
        }
        return true;
    }

    Vec2 choose(const StepOutcome& obs, std::size_t a) {
        const Vec2 here = obs.states[a].position();
        const auto& grid = obs.agents[a].grid;
        const auto& explored = grid.channels[kExplored];
        const auto& obstacles = grid.channels[kObstacles];
        const std::size_t w = layout_.width;
        const std::size_t cells = free_cell_.size();
        const std::size_t start = layout_.cell_of(here);

        constexpr std::size_t none = std::numeric_limits<std::size_t>::max();
        parent_.assign(cells, none);
        std::deque<std::size_t> queue{start};
        parent_[start] = start;
        std::size_t target = none;
        while (!queue.empty()) {
            const std::size_t c = queue.front();
            queue.pop_front();
            if (is_frontier(explored, c) && !claimed(c)) {
                target = c;
                break;
            }
            const std::size_t x = c % w;
            const std::size_t y = c / w;
            const std::size_t nbrs[4] = {x + 1 < w ? c + 1 : none, x > 0 ? c - 1 : none,
                                         y + 1 < layout_.height ? c + w : none, y > 0 ? c - w : none};
            for (std::size_t nb : nbrs) {
                if (nb == none || parent_[nb] != none || !free_cell_[nb]) continue;
                parent_[nb] = c;
                queue.push_back(nb);
            }
        }
        if (target == none) return here;
        claimed_.push_back(layout_.cell_center(target));

        path_.clear();
        for (std::size_t c = target; c != start; c = parent_[c]) path_.push_back(c);
        path_.push_back(start);
        std::reverse(path_.begin(), path_.end());
        if (path_.size() == 1) return layout_.cell_center(target);

        std::size_t best = 1;
        for (std::size_t k = 1; k < path_.size(); ++k) {
            const Vec2 p = layout_.cell_center(path_[k]);
            if (distance(here, p) > params_.lookahead) break;
            if (line_of_sight(obstacles, here, p)) best = k;
        }
        return layout_.cell_center(path_[best]);
    }

    Bounds bounds_;
    std::size_t region_grid_;
    FrontierParams params_;
    GridProjection layout_; // geometry only; channels unused
    std::vector<char> free_cell_;
    std::vector<Vec2> claimed_;
    std::vector<std::size_t> parent_;
    std::vector<std::size_t> path_;
};

/// Uniformly random region and offset for every agent.
class RandomPolicy {
public:
    RandomPolicy(const Bounds& bounds, std::size_t region_grid, std::uint64_t seed)
        : bounds_(bounds), region_grid_(region_grid), rng_(mix_seed(seed, 0x72616e64)) {}

    std::vector<Goal> operator()(const StepOutcome& obs) {
        std::vector<Goal> goals(obs.states.size());
        for (std::size_t a = 0; a < goals.size(); ++a) {
            auto& g = goals[a];
            g.agent = a;
            g.region_index = rng_.below(region_grid_ * region_grid_);
            g.u = rng_.uniform();
            g.v = rng_.uniform();
            g.world = decode_target(g.region_index, g.u, g.v, bounds_, region_grid_);
        }
        return goals;
    }

private:
    Bounds bounds_;
    std::size_t region_grid_;
    Rng rng_;
};

} // namespace ptexplore
