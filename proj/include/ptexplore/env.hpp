#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ptexplore/dynamics.hpp"
#include "ptexplore/exploration.hpp"
#include "ptexplore/grid.hpp"
#include "ptexplore/map_io.hpp"
#include "ptexplore/planner.hpp"
#include "ptexplore/rng.hpp"
#include "ptexplore/scenario.hpp"
#include "ptexplore/sensing.hpp"

namespace ptexplore {

class EnvError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct RewardWeights {
    double success = 1.0;
    double explore = 1.0;
    double overlap = 0.5;
    double collision = 1.0;
    double time = 0.1;
};

/// Where an environment's map comes from: a procedural spec or a .mxm file.
struct MapSource {
    std::optional<ScenarioSpec> scenario = ScenarioSpec{};
    std::filesystem::path path;
};

struct EnvConfig {
    std::size_t n_agents = 3;
    std::size_t horizon = 600;     // macro steps
    std::size_t micro_steps = 15;  // control steps per macro step
    MapSource map;
    RadarConfig radar;
    VehicleParams vehicle;
    DwaParams dwa;
    RewardWeights weights;
    double success_threshold = 0.95;
    double success_bonus = 100.0;
    double collision_penalty = 200.0;
    std::size_t region_grid = 8;
    std::size_t grid_size = 125;
    std::uint64_t seed = 0;

    void check() const {
        if (n_agents < 1) throw EnvError("n_agents must be >= 1");
        if (horizon < 1) throw EnvError("horizon must be >= 1");
        if (micro_steps < 1) throw EnvError("micro_steps must be >= 1");
        if (!(success_threshold > 0.0 && success_threshold <= 1.0)) throw EnvError("success_threshold must be in (0,1]");
        if (region_grid < 1) throw EnvError("region_grid must be >= 1");
        if (grid_size < 1) throw EnvError("grid_size must be >= 1");
        if (!radar.valid()) throw EnvError("invalid radar configuration");
        if (!vehicle.valid()) throw EnvError("invalid vehicle parameters");
        if (!dwa.valid(vehicle.dt)) throw EnvError("invalid DWA parameters");
        if (!map.scenario && map.path.empty()) throw EnvError("config has no map source");
    }
};

// ---------------------------------------------------------------------------
// Target space: region index in an L x L partition plus offset inside it.

struct Goal {
    std::size_t agent = 0;
    std::size_t region_index = 0;
    double u = 0.0;
    double v = 0.0;
    Vec2 world{};
    friend bool operator==(const Goal&, const Goal&) = default;
};

inline Vec2 decode_target(std::size_t region_index, double u, double v, const Bounds& b, std::size_t L) {
    if (L == 0 || region_index >= L * L) throw EnvError("region index out of range");
    u = std::clamp(std::isnan(u) ? 0.0 : u, 0.0, 1.0);
    v = std::clamp(std::isnan(v) ? 0.0 : v, 0.0, 1.0);
    const double row = static_cast<double>(region_index / L);
    const double col = static_cast<double>(region_index % L);
    const double l = static_cast<double>(L);
    auto axis = [l](double lo, double hi, double cell, double off) {
        const double t = cell + off;
        if (t >= l) return hi;
        return std::clamp(lo + t * (hi - lo) / l, lo, hi);
    };
    return {axis(b.xmin, b.xmax, col, u), axis(b.ymin, b.ymax, row, v)};
}

/// Inverse of decode_target (up to rounding) for points inside `b`.
inline Goal encode_target(Vec2 p, const Bounds& b, std::size_t L) {
    const double l = static_cast<double>(L);
    auto axis = [l, L](double x, double lo, double hi, std::size_t& cell, double& off) {
        const double t = std::clamp((x - lo) / (hi - lo) * l, 0.0, l);
        cell = std::min(L - 1, static_cast<std::size_t>(std::floor(t)));
        off = std::clamp(t - static_cast<double>(cell), 0.0, 1.0);
    };
    std::size_t col = 0, row = 0;
    Goal g;
    axis(p.x, b.xmin, b.xmax, col, g.u);
    axis(p.y, b.ymin, b.ymax, row, g.v);
    g.region_index = row * L + col;
    g.world = decode_target(g.region_index, g.u, g.v, b, L);
    return g;
}

// ---------------------------------------------------------------------------
// Rewards

struct RewardBreakdown {
    double success = 0.0;
    double exploration = 0.0;
    double overlap = 0.0;
    double collision = 0.0;
    double time = 0.0;

    double total() const { return success + exploration + overlap + collision + time; }
    friend bool operator==(const RewardBreakdown&, const RewardBreakdown&) = default;
};

/// What one macro step produced for one agent, before weighting.
struct AgentStepData {
    std::size_t newly_explored = 0; // points this agent added to the team map
    std::size_t overlap_points = 0; // points it sensed that a teammate also sensed
    bool collided = false;
};

struct RewardContext {
    std::size_t free_points = 1;
    double coverage = 0.0;
    bool success = false;
};

inline std::vector<RewardBreakdown> compute_rewards(std::span<const AgentStepData> agents, const RewardContext& ctx,
                                                    const EnvConfig& cfg) {
    const double per_point = 1000.0 / static_cast<double>(std::max<std::size_t>(ctx.free_points, 1));
    std::vector<RewardBreakdown> out(agents.size());
    for (std::size_t i = 0; i < agents.size(); ++i) {
        auto& r = out[i];
        r.success = ctx.success ? cfg.weights.success * cfg.success_bonus : 0.0;
        r.exploration = cfg.weights.explore * static_cast<double>(agents[i].newly_explored) * per_point;
        r.overlap = -cfg.weights.overlap * static_cast<double>(agents[i].overlap_points) * per_point;
        r.collision = agents[i].collided ? -cfg.weights.collision * cfg.collision_penalty : 0.0;
        r.time = -cfg.weights.time * ctx.coverage;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Step outcome

struct AgentOutcome {
    SensedPoints sensed;
    GridProjection grid;
    RewardBreakdown breakdown;
    double reward = 0.0;
    bool collided = false;
    std::size_t newly_explored = 0;
};

/// One sample of the team transition. `states` and `goals` are shared by
/// every agent's observation (full communication).
struct StepOutcome {
    std::vector<AgentOutcome> agents;
    std::vector<AgentState> states;
    std::vector<Goal> goals;
    double coverage = 0.0;
    std::size_t tick = 0;
    std::size_t explored = 0;
    std::size_t shared = 0; // points explored by >= 2 agents
    bool done = false;
    bool success = false;
};

// ---------------------------------------------------------------------------

/// Loads or generates the configured map, indexes it for the radar range and
/// checks it is usable for the configured vehicle.
inline std::shared_ptr<const WorldMap> prepare_map(const EnvConfig& cfg) {
    WorldMap base = cfg.map.scenario ? generate(*cfg.map.scenario) : load_map(cfg.map.path);
    auto map = std::make_shared<const WorldMap>(
        base.with_index_cell(std::max(base.resolution(), cfg.radar.detection_range / 16.0)));
    const auto rep = validate_map(*map, cfg.vehicle.footprint_radius);
    if (!rep.valid) throw EnvError("map '" + map->name() + "' fails validation:\n" + rep.to_text());
    return map;
}

class Env {
public:
    Env(EnvConfig cfg, std::shared_ptr<const WorldMap> map) : cfg_(std::move(cfg)), map_(std::move(map)) {
        cfg_.check();
        if (!map_) throw EnvError("null map");
        for (std::size_t i = 0; i < cfg_.n_agents; ++i) {
            radars_.emplace_back(cfg_.radar);
            planners_.emplace_back(cfg_.vehicle, cfg_.dwa);
        }
        mask_ = ExplorationMask(cfg_.n_agents, map_->free_points().size());
        macro_sensed_.assign(cfg_.n_agents, PointBitset(map_->free_points().size()));
        static_grid_ = GridProjection(cfg_.grid_size, cfg_.grid_size, map_->bounds());
    }

    explicit Env(EnvConfig cfg) : Env(cfg, prepare_map(cfg)) {}

    const EnvConfig& config() const { return cfg_; }
    const WorldMap& map() const { return *map_; }
    std::shared_ptr<const WorldMap> shared_map() const { return map_; }
    const ExplorationMask& mask() const { return mask_; }
    std::span<const AgentState> states() const { return states_; }
    std::span<const std::vector<Vec2>> trajectories() const { return trajectories_; }
    std::span<const SensedPoints> sensed() const { return sensed_; }
    std::size_t tick() const { return tick_; }
    bool done() const { return done_; }
    double coverage() const { return mask_.coverage(); }

    StepOutcome reset(std::uint64_t seed) {
        Rng rng(mix_seed(seed, 0x7265736574));
        const auto free_pts = map_->free_points();
        const double min_sep2 = std::pow(4.0 * cfg_.vehicle.footprint_radius, 2);
        states_.clear();
        for (std::size_t a = 0; a < cfg_.n_agents; ++a) {
            bool placed = false;
            for (int attempt = 0; attempt < 10000 && !placed; ++attempt) {
                const Vec2 p = free_pts[rng.below(free_pts.size())];
                AgentState s;
                s.x = p.x;
                s.y = p.y;
                s.heading = normalize_angle(std::numbers::pi - 2.0 * std::numbers::pi * rng.uniform());
                if (check_collision(s, *map_, cfg_.vehicle)) continue;
                const bool apart = std::all_of(states_.begin(), states_.end(), [&](const AgentState& o) {
                    return distance_sq(o.position(), p) >= min_sep2;
                });
                if (!apart) continue;
                states_.push_back(s);
                placed = true;
            }
            if (!placed) {
                throw EnvError("cannot place agent " + std::to_string(a) + " of " + std::to_string(cfg_.n_agents) +
                               " collision-free and separated");
            }
        }
        mask_.reset();
        tick_ = 0;
        done_ = false;
        success_fired_ = false;
        trajectories_.assign(cfg_.n_agents, {});
        trajectory_cells_.assign(cfg_.n_agents, std::vector<float>(cfg_.grid_size * cfg_.grid_size, 0.0f));
        goals_.clear();
        sensed_.assign(cfg_.n_agents, {});
        for (std::size_t a = 0; a < cfg_.n_agents; ++a) {
            Goal g = encode_target(states_[a].position(), map_->bounds(), cfg_.region_grid);
            g.agent = a;
            goals_.push_back(g);
            record_position(a);
            sensed_[a].agent = a;
            radars_[a].sense(states_[a], *map_, sensed_[a]);
        }
        std::vector<AgentStepData> none(cfg_.n_agents);
        return make_outcome(none, std::vector<RewardBreakdown>(cfg_.n_agents));
    }

    /// Decodes (region_index, u, v) per agent and runs one macro step.
    StepOutcome step(std::span<const Goal> goals) {
        if (states_.empty()) throw EnvError("step before reset");
        if (done_) throw EnvError("step after episode is done");
        if (goals.size() != cfg_.n_agents) throw EnvError("expected one goal per agent");
        for (std::size_t a = 0; a < goals.size(); ++a) {
            Goal g = goals[a];
            g.agent = a;
            g.u = std::clamp(std::isnan(g.u) ? 0.0 : g.u, 0.0, 1.0);
            g.v = std::clamp(std::isnan(g.v) ? 0.0 : g.v, 0.0, 1.0);
            g.world = decode_target(g.region_index, g.u, g.v, map_->bounds(), cfg_.region_grid);
            goals_[a] = g;
        }
        return run_macro();
    }

private:
    void record_position(std::size_t a) {
        const Vec2 p = states_[a].position();
        trajectories_[a].push_back(p);
        trajectory_cells_[a][static_grid_.cell_of(p)] = 1.0f;
    }

    StepOutcome run_macro() {
        const std::size_t n = cfg_.n_agents;
        std::vector<AgentStepData> data(n);
        std::vector<char> arrived(n, 0);
        for (auto& m : macro_sensed_) m.clear();
        for (std::size_t a = 0; a < n; ++a) arrived[a] = goal_reached(states_[a], goals_[a].world, cfg_.dwa);

        const auto obstacle_pts = map_->obstacle_points();
        for (std::size_t k = 0; k < cfg_.micro_steps; ++k) {
            for (std::size_t a = 0; a < n; ++a) {
                AgentState& s = states_[a];
                ControlAction action;
                if (arrived[a]) {
                    action.acceleration = std::clamp(-s.speed / cfg_.vehicle.dt, -cfg_.vehicle.a_max, cfg_.vehicle.a_max);
                    action.steering_target = s.steering;
                } else {
                    local_obstacles_.clear();
                    for (PointIndex o : sensed_[a].in_range_obstacles) local_obstacles_.push_back(obstacle_pts[o]);
                    action = planners_[a].plan(s, goals_[a].world, local_obstacles_, map_->bounds()).action;
                }
                AgentState next = integrate(s, action, cfg_.vehicle);
                if (check_collision(next, *map_, cfg_.vehicle)) {
                    next.x = s.x;
                    next.y = s.y;
                    next.heading = s.heading;
                    next.speed = 0.0;
                    data[a].collided = true;
                }
                s = next;
                record_position(a);
                radars_[a].sense(s, *map_, sensed_[a]);
                sensed_[a].tick = tick_ + 1;
                data[a].newly_explored += mask_.mark(a, sensed_[a].visible_free).newly_global;
                for (PointIndex p : sensed_[a].visible_free) macro_sensed_[a].set(p);
                if (!arrived[a] && goal_reached(s, goals_[a].world, cfg_.dwa)) arrived[a] = 1;
            }
        }
        count_overlaps(data);
        ++tick_;
        RewardContext ctx{map_->free_points().size(), mask_.coverage(), false};
        if (!success_fired_ && ctx.coverage >= cfg_.success_threshold) {
            success_fired_ = true;
            ctx.success = true;
        }
        done_ = ctx.success || tick_ >= cfg_.horizon;
        auto rewards = compute_rewards(data, ctx, cfg_);
        auto out = make_outcome(data, rewards);
        out.success = ctx.success;
        return out;
    }

    void count_overlaps(std::vector<AgentStepData>& data) const {
        const std::size_t n = data.size();
        const std::size_t words = macro_sensed_.empty() ? 0 : macro_sensed_[0].words().size();
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t count = 0;
            for (std::size_t w = 0; w < words; ++w) {
                std::uint64_t others = 0;
                for (std::size_t j = 0; j < n; ++j) {
                    if (j != i) others |= macro_sensed_[j].words()[w];
                }
                count += static_cast<std::size_t>(std::popcount(macro_sensed_[i].words()[w] & others));
            }
            data[i].overlap_points = count;
        }
    }

    StepOutcome make_outcome(const std::vector<AgentStepData>& data, const std::vector<RewardBreakdown>& rewards) {
        StepOutcome out;
        out.states = states_;
        out.goals = goals_;
        out.coverage = mask_.coverage();
        out.tick = tick_;
        out.explored = mask_.explored_count();
        out.shared = mask_.shared_count();
        out.done = done_;
        project_static_channels(*map_, mask_, static_grid_);
        out.agents.resize(cfg_.n_agents);
        for (std::size_t a = 0; a < cfg_.n_agents; ++a) {
            auto& ag = out.agents[a];
            ag.sensed = sensed_[a];
            ag.grid = static_grid_;
            ag.grid.channels[kAgentPosition][static_grid_.cell_of(states_[a].position())] = 1.0f;
            ag.grid.channels[kTrajectory] = trajectory_cells_[a];
            ag.breakdown = rewards[a];
            ag.reward = rewards[a].total();
            ag.collided = data[a].collided;
            ag.newly_explored = data[a].newly_explored;
        }
        return out;
    }

    EnvConfig cfg_;
    std::shared_ptr<const WorldMap> map_;
    std::vector<Radar> radars_;
    std::vector<DwaPlanner> planners_;
    ExplorationMask mask_;
    std::vector<PointBitset> macro_sensed_;
    std::vector<AgentState> states_;
    std::vector<Goal> goals_;
    std::vector<SensedPoints> sensed_;
    std::vector<std::vector<Vec2>> trajectories_;
    std::vector<std::vector<float>> trajectory_cells_;
    GridProjection static_grid_;
    std::vector<Vec2> local_obstacles_;
    std::size_t tick_ = 0;
    bool done_ = false;
    bool success_fired_ = false;
};

} // namespace ptexplore
