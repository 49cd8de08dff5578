#pragma once

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "ptexplore/env.hpp"

namespace ptexplore {

// Environment configuration file: one JSON document with sections
// map / radar / vehicle / dwa / reward / run. Missing keys keep defaults;
// unknown keys are rejected.

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

class Section {
public:
    Section(const nlohmann::json& j, std::string name) : j_(j), name_(std::move(name)) {
        if (!j_.is_object()) throw ConfigError("section '" + name_ + "' must be an object");
    }

    template <typename T>
    void get(const char* key, T& out) {
        seen_.insert(key);
        auto it = j_.find(key);
        if (it == j_.end()) return;
        try {
            out = it->template get<T>();
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(name_ + "." + key + ": " + e.what());
        }
    }

    void done() const {
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            if (!seen_.count(it.key())) throw ConfigError("unknown key '" + name_ + "." + it.key() + "'");
        }
    }

private:
    const nlohmann::json& j_;
    std::string name_;
    std::set<std::string> seen_;
};

inline ScenarioKind parse_kind(const std::string& s) {
    if (s == "random_obstacle" || s == "random-obstacle") return ScenarioKind::random_obstacle;
    if (s == "maze") return ScenarioKind::maze;
    throw ConfigError("unknown map kind '" + s + "'");
}

inline std::string kind_name(ScenarioKind k) {
    switch (k) {
    case ScenarioKind::random_obstacle:
        return "random_obstacle";
    case ScenarioKind::maze:
        return "maze";
    case ScenarioKind::ingested:
        return "ingested";
    }
    return "unknown";
}

} // namespace detail

/// Applies a (possibly partial) JSON document on top of `cfg`.
inline void apply_config(EnvConfig& cfg, const nlohmann::json& doc, const std::filesystem::path& base_dir = {}) {
    using detail::Section;
    if (!doc.is_object()) throw ConfigError("configuration must be a JSON object");
    static const std::set<std::string> sections{"map", "radar", "vehicle", "dwa", "reward", "run"};
    for (auto it = doc.begin(); it != doc.end(); ++it) {
        if (!sections.count(it.key())) throw ConfigError("unknown section '" + it.key() + "'");
    }
    if (auto it = doc.find("map"); it != doc.end()) {
        Section s(*it, "map");
        std::string path;
        s.get("path", path);
        if (!path.empty()) {
            std::filesystem::path p(path);
            if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
            cfg.map.path = p;
            cfg.map.scenario.reset();
        }
        if (it->contains("kind")) {
            ScenarioSpec spec = cfg.map.scenario.value_or(ScenarioSpec{});
            std::string kind;
            s.get("kind", kind);
            spec.kind = detail::parse_kind(kind);
            cfg.map.scenario = spec;
            cfg.map.path.clear();
        }
        if (cfg.map.scenario) {
            auto& spec = *cfg.map.scenario;
            s.get("seed", spec.seed);
            s.get("size", spec.size);
            s.get("resolution", spec.resolution);
            s.get("density", spec.obstacle_density);
            s.get("cells", spec.cell_count);
            s.get("corridor_width", spec.corridor_width);
        }
        s.done();
    }
    if (auto it = doc.find("radar"); it != doc.end()) {
        Section s(*it, "radar");
        s.get("detection_range", cfg.radar.detection_range);
        s.get("alpha1", cfg.radar.alpha1);
        s.get("alpha2", cfg.radar.alpha2);
        s.get("max_returns", cfg.radar.max_returns);
        s.get("paper_literal_inequality", cfg.radar.paper_literal_inequality);
        s.done();
    }
    if (auto it = doc.find("vehicle"); it != doc.end()) {
        Section s(*it, "vehicle");
        s.get("wheelbase", cfg.vehicle.wheelbase);
        s.get("footprint_radius", cfg.vehicle.footprint_radius);
        s.get("v_max", cfg.vehicle.v_max);
        s.get("v_min", cfg.vehicle.v_min);
        s.get("a_max", cfg.vehicle.a_max);
        s.get("steer_max", cfg.vehicle.steer_max);
        s.get("steer_rate_max", cfg.vehicle.steer_rate_max);
        s.get("dt", cfg.vehicle.dt);
        s.done();
    }
    if (auto it = doc.find("dwa"); it != doc.end()) {
        Section s(*it, "dwa");
        s.get("accel_samples", cfg.dwa.accel_samples);
        s.get("steer_samples", cfg.dwa.steer_samples);
        s.get("horizon", cfg.dwa.horizon);
        s.get("goal_heading_w", cfg.dwa.goal_heading_w);
        s.get("clearance_w", cfg.dwa.clearance_w);
        s.get("velocity_w", cfg.dwa.velocity_w);
        s.get("clearance_cap", cfg.dwa.clearance_cap);
        s.get("goal_tolerance", cfg.dwa.goal_tolerance);
        s.done();
    }
    if (auto it = doc.find("reward"); it != doc.end()) {
        Section s(*it, "reward");
        s.get("w_success", cfg.weights.success);
        s.get("w_explore", cfg.weights.explore);
        s.get("w_overlap", cfg.weights.overlap);
        s.get("w_collision", cfg.weights.collision);
        s.get("w_time", cfg.weights.time);
        s.get("success_threshold", cfg.success_threshold);
        s.get("success_bonus", cfg.success_bonus);
        s.get("collision_penalty", cfg.collision_penalty);
        s.done();
    }
    if (auto it = doc.find("run"); it != doc.end()) {
        Section s(*it, "run");
        s.get("n_agents", cfg.n_agents);
        s.get("horizon", cfg.horizon);
        s.get("micro_steps", cfg.micro_steps);
        s.get("region_grid", cfg.region_grid);
        s.get("grid_size", cfg.grid_size);
        s.get("seed", cfg.seed);
        s.done();
    }
    if (cfg.map.scenario) cfg.map.scenario->footprint_radius = cfg.vehicle.footprint_radius;
    try {
        cfg.check();
    } catch (const EnvError& e) {
        throw ConfigError(e.what());
    }
}

inline EnvConfig config_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir = {}) {
    EnvConfig cfg;
    apply_config(cfg, doc, base_dir);
    return cfg;
}

inline EnvConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return config_from_json(doc, path.parent_path());
}

inline nlohmann::json config_to_json(const EnvConfig& cfg) {
    nlohmann::json j;
    if (cfg.map.scenario) {
        const auto& s = *cfg.map.scenario;
        j["map"] = {{"kind", detail::kind_name(s.kind)}, {"seed", s.seed},      {"size", s.size},
                    {"resolution", s.resolution},       {"density", s.obstacle_density}, {"cells", s.cell_count},
                    {"corridor_width", s.corridor_width}};
    } else {
        j["map"] = {{"path", cfg.map.path.string()}};
    }
    j["radar"] = {{"detection_range", cfg.radar.detection_range},
                  {"alpha1", cfg.radar.alpha1},
                  {"alpha2", cfg.radar.alpha2},
                  {"max_returns", cfg.radar.max_returns},
                  {"paper_literal_inequality", cfg.radar.paper_literal_inequality}};
    j["vehicle"] = {{"wheelbase", cfg.vehicle.wheelbase}, {"footprint_radius", cfg.vehicle.footprint_radius},
                    {"v_max", cfg.vehicle.v_max},         {"v_min", cfg.vehicle.v_min},
                    {"a_max", cfg.vehicle.a_max},
                    {"steer_max", cfg.vehicle.steer_max}, {"steer_rate_max", cfg.vehicle.steer_rate_max},
                    {"dt", cfg.vehicle.dt}};
    j["dwa"] = {{"accel_samples", cfg.dwa.accel_samples}, {"steer_samples", cfg.dwa.steer_samples},
                {"horizon", cfg.dwa.horizon},             {"goal_heading_w", cfg.dwa.goal_heading_w},
                {"clearance_w", cfg.dwa.clearance_w},     {"velocity_w", cfg.dwa.velocity_w},
                {"clearance_cap", cfg.dwa.clearance_cap}, {"goal_tolerance", cfg.dwa.goal_tolerance}};
    j["reward"] = {{"w_success", cfg.weights.success},
                   {"w_explore", cfg.weights.explore},
                   {"w_overlap", cfg.weights.overlap},
                   {"w_collision", cfg.weights.collision},
                   {"w_time", cfg.weights.time},
                   {"success_threshold", cfg.success_threshold},
                   {"success_bonus", cfg.success_bonus},
                   {"collision_penalty", cfg.collision_penalty}};
    j["run"] = {{"n_agents", cfg.n_agents},       {"horizon", cfg.horizon},
                {"micro_steps", cfg.micro_steps}, {"region_grid", cfg.region_grid},
                {"grid_size", cfg.grid_size},     {"seed", cfg.seed}};
    return j;
}

} // namespace ptexplore
