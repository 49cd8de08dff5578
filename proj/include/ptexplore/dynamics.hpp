#pragma once

#include <algorithm>
#include <cmath>

#include "ptexplore/geometry.hpp"
#include "ptexplore/world_map.hpp"

namespace ptexplore {

struct AgentState {
    double x = 0.0;
    double y = 0.0;
    double heading = 0.0;  // (-pi, pi]
    double speed = 0.0;    // m/s, signed
    double steering = 0.0; // front wheel angle, rad

    Vec2 position() const { return {x, y}; }
    friend bool operator==(const AgentState&, const AgentState&) = default;
};

struct ControlAction {
    double acceleration = 0.0;
    double steering_target = 0.0;
    friend bool operator==(const ControlAction&, const ControlAction&) = default;
};

struct VehicleParams {
    double wheelbase = 0.5;
    double footprint_radius = 0.5;
    double v_max = 2.0;
    double v_min = -2.0; // most negative (reverse) speed
    double a_max = 2.0;
    double steer_max = 0.6;
    double steer_rate_max = 2.0;
    double dt = 0.1;

    bool valid() const {
        return wheelbase > 0 && footprint_radius > 0 && v_max > 0 && v_min <= 0 && v_min >= -v_max && a_max > 0 &&
               steer_max > 0 && steer_rate_max > 0 && dt > 0;
    }
};

/// One kinematic bicycle step. Out-of-range actions are clamped.
inline AgentState integrate(const AgentState& s, const ControlAction& a, const VehicleParams& p) {
    const double accel = std::clamp(a.acceleration, -p.a_max, p.a_max);
    const double target = std::clamp(a.steering_target, -p.steer_max, p.steer_max);
    const double max_slew = p.steer_rate_max * p.dt;

    AgentState n;
    n.steering = std::clamp(s.steering + std::clamp(target - s.steering, -max_slew, max_slew), -p.steer_max, p.steer_max);
    n.speed = std::clamp(s.speed + accel * p.dt, p.v_min, p.v_max);
    if (n.speed == 0.0) {
        n.x = s.x;
        n.y = s.y;
        n.heading = normalize_angle(s.heading);
        return n;
    }
    n.x = s.x + n.speed * std::cos(s.heading) * p.dt;
    n.y = s.y + n.speed * std::sin(s.heading) * p.dt;
    n.heading = normalize_angle(s.heading + n.speed * std::tan(n.steering) / p.wheelbase * p.dt);
    return n;
}

inline bool collides_at(Vec2 position, const WorldMap& map, double footprint_radius) {
    if (!map.bounds().contains(position)) return true;
    return map.index(PointKind::obstacle).any_within(position, footprint_radius);
}

/// True iff an obstacle point lies within the footprint or the pose is out of bounds.
inline bool check_collision(const AgentState& s, const WorldMap& map, const VehicleParams& p) {
    return collides_at(s.position(), map, p.footprint_radius);
}

} // namespace ptexplore
