#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "ptexplore/dynamics.hpp"
#include "ptexplore/world_map.hpp"

namespace ptexplore {

struct DwaParams {
    std::size_t accel_samples = 7;
    std::size_t steer_samples = 11;
    double horizon = 1.5; // seconds
    double goal_heading_w = 0.5;
    double clearance_w = 0.3;
    double velocity_w = 0.2;
    double clearance_cap = 2.0;
    double goal_tolerance = 0.5;

    bool valid(double dt) const {
        return accel_samples >= 3 && steer_samples >= 3 && horizon > dt && goal_heading_w >= 0 && clearance_w >= 0 &&
               velocity_w >= 0 && (goal_heading_w + clearance_w + velocity_w) > 0 && clearance_cap > 0 &&
               goal_tolerance >= 0;
    }
};

/// Closed tolerance: distance == goal_tolerance counts as reached.
inline bool goal_reached(const AgentState& s, Vec2 goal, const DwaParams& p) {
    return distance_sq(s.position(), goal) <= p.goal_tolerance * p.goal_tolerance;
}

struct PlanResult {
    ControlAction action;
    double score = -std::numeric_limits<double>::infinity();
    bool all_colliding = false;
    std::size_t accel_index = 0;
    std::size_t steer_index = 0;
    /// Poses of the selected rollout (empty when all rollouts collide).
    std::vector<AgentState> rollout;
};

/// Dynamic Window Approach over (acceleration, steering target) pairs
/// reachable within one control step. Rollouts hold the sampled action for
/// the whole horizon and stop early once inside the goal tolerance.
class DwaPlanner {
public:
    DwaPlanner(const VehicleParams& vehicle, const DwaParams& params) : vp_(vehicle), dp_(params) {}

    const DwaParams& params() const { return dp_; }
    const VehicleParams& vehicle() const { return vp_; }

    /// `bounds`, when given, is known free-space extent: leaving it counts as a collision.
    PlanResult plan(const AgentState& state, Vec2 goal, std::span<const Vec2> obstacles,
                    const std::optional<Bounds>& bounds = std::nullopt) {
        const std::size_t steps =
            std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(dp_.horizon / vp_.dt - 1e-9)));
        const double reach = std::max(dp_.clearance_cap, vp_.footprint_radius);
        build_index(state, obstacles, reach, steps);
        const double foot2 = vp_.footprint_radius * vp_.footprint_radius;
        const double tol2 = dp_.goal_tolerance * dp_.goal_tolerance;

        const double slew = vp_.steer_rate_max * vp_.dt;
        const double steer_hi = std::min(state.steering + slew, vp_.steer_max);
        const double steer_lo = std::max(state.steering - slew, -vp_.steer_max);

        // Exact ties (e.g. stationary rollouts differing only in steering) go to
        // the lowest accel index, then to the steering closest to a pure-pursuit
        // target, then to the lowest steer index (left first).
        const double desired = pursuit_steering(state, goal);

        // Rollouts that end where they started only win when nothing moves
        // collision-free; otherwise a goal outside every moving rollout's
        // heading could park the agent indefinitely.
        PlanResult best;
        best.all_colliding = true;
        PlanResult parked;
        parked.all_colliding = true;
        std::vector<AgentState> poses;
        poses.reserve(steps);
        for (std::size_t ai = 0; ai < dp_.accel_samples; ++ai) {
            const double accel = lerp(-vp_.a_max, vp_.a_max, ai, dp_.accel_samples);
            for (std::size_t si = 0; si < dp_.steer_samples; ++si) {
                // Index 0 is the leftmost (most positive) steering target.
                const double steer = lerp(steer_hi, steer_lo, si, dp_.steer_samples);
                const ControlAction action{accel, steer};
                poses.clear();
                AgentState s = state;
                double min_clear2 = std::numeric_limits<double>::infinity();
                bool collided = false;
                bool arrived = false;
                for (std::size_t k = 0; k < steps; ++k) {
                    s = integrate(s, action, vp_);
                    poses.push_back(s);
                    const double d2 = nearest_sq(s.position(), reach);
                    if (d2 <= foot2 || (bounds && !bounds->contains(s.position()))) {
                        collided = true;
                        break;
                    }
                    min_clear2 = std::min(min_clear2, d2);
                    if (distance_sq(s.position(), goal) <= tol2) {
                        arrived = true;
                        break;
                    }
                }
                if (collided) continue;
                double bearing_error = 0.0;
                if (!arrived) {
                    const Vec2 to_goal = goal - s.position();
                    bearing_error = std::abs(normalize_angle(std::atan2(to_goal.y, to_goal.x) - s.heading));
                }
                const double clearance = std::min(std::sqrt(min_clear2), dp_.clearance_cap);
                const double score = dp_.goal_heading_w * (std::numbers::pi - bearing_error) / std::numbers::pi +
                                     dp_.clearance_w * clearance / dp_.clearance_cap +
                                     dp_.velocity_w * s.speed / vp_.v_max; // reverse speed counts against
                PlanResult& slot = distance_sq(s.position(), state.position()) > 1e-12 ? best : parked;
                const bool tie_wins = !slot.all_colliding && score == slot.score && ai == slot.accel_index &&
                                      std::abs(steer - desired) < std::abs(slot.action.steering_target - desired);
                if (score > slot.score || tie_wins) {
                    slot.score = score;
                    slot.action = action;
                    slot.all_colliding = false;
                    slot.accel_index = ai;
                    slot.steer_index = si;
                    slot.rollout = poses;
                }
            }
        }
        if (best.all_colliding) best = std::move(parked);
        if (best.all_colliding) {
            best.action.acceleration = state.speed > 0.0 ? -vp_.a_max : (state.speed < 0.0 ? vp_.a_max : 0.0);
            best.action.steering_target = state.steering;
            best.rollout.clear();
        }
        return best;
    }

private:
    double pursuit_steering(const AgentState& state, Vec2 goal) const {
        const Vec2 d = goal - state.position();
        const double alpha = normalize_angle(std::atan2(d.y, d.x) - state.heading);
        if (std::abs(alpha) > std::numbers::pi / 2) return alpha < 0.0 ? -vp_.steer_max : vp_.steer_max;
        const double delta = std::atan2(2.0 * vp_.wheelbase * std::sin(alpha), std::max(norm(d), 1e-9));
        return std::clamp(delta, -vp_.steer_max, vp_.steer_max);
    }

    static double lerp(double a, double b, std::size_t i, std::size_t n) {
        if (i + 1 == n) return b;
        return a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
    }

    // Only obstacles a rollout can come within `reach` of are indexed.
    void build_index(const AgentState& state, std::span<const Vec2> obstacles, double reach, std::size_t steps) {
        const double travel = static_cast<double>(steps) * vp_.dt * std::max(vp_.v_max, -vp_.v_min);
        const double crop = travel + reach + 1e-6;
        local_.clear();
        for (const auto& p : obstacles) {
            if (distance_sq(p, state.position()) <= crop * crop) local_.push_back(p);
        }
        if (local_.size() > kBruteForceLimit) {
            const Bounds b{state.x - crop, state.y - crop, state.x + crop, state.y + crop};
            index_ = SpatialIndex(local_, b, 0.5 * reach);
        }
    }

    double nearest_sq(Vec2 p, double reach) const {
        if (local_.size() > kBruteForceLimit) return index_.nearest_sq_within(p, reach);
        const double r2 = reach * reach;
        double best = std::numeric_limits<double>::infinity();
        for (const auto& q : local_) {
            const double d2 = distance_sq(q, p);
            if (d2 <= r2 && d2 < best) best = d2;
        }
        return best;
    }

    static constexpr std::size_t kBruteForceLimit = 64;

    VehicleParams vp_;
    DwaParams dp_;
    std::vector<Vec2> local_;
    SpatialIndex index_;
};

inline ControlAction plan(const AgentState& state, Vec2 goal, std::span<const Vec2> obstacles,
                          const VehicleParams& vparams, const DwaParams& dparams,
                          const std::optional<Bounds>& bounds = std::nullopt) {
    DwaPlanner planner(vparams, dparams);
    return planner.plan(state, goal, obstacles, bounds).action;
}

} // namespace ptexplore
