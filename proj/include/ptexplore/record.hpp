#pragma once

#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ptexplore/env.hpp"
#include "ptexplore/metrics.hpp"

namespace ptexplore {

// Episode record: one JSON object per line, one line per macro step.

inline nlohmann::json breakdown_to_json(const RewardBreakdown& b) {
    return {{"success", b.success}, {"exploration", b.exploration}, {"overlap", b.overlap},
            {"collision", b.collision}, {"time", b.time}};
}

inline RewardBreakdown breakdown_from_json(const nlohmann::json& j) {
    RewardBreakdown b;
    b.success = j.at("success").get<double>();
    b.exploration = j.at("exploration").get<double>();
    b.overlap = j.at("overlap").get<double>();
    b.collision = j.at("collision").get<double>();
    b.time = j.at("time").get<double>();
    return b;
}

inline nlohmann::json state_to_json(const AgentState& s) {
    return {{"x", s.x}, {"y", s.y}, {"heading", s.heading}, {"speed", s.speed}, {"steering", s.steering}};
}

inline AgentState state_from_json(const nlohmann::json& j) {
    return {j.at("x").get<double>(), j.at("y").get<double>(), j.at("heading").get<double>(),
            j.at("speed").get<double>(), j.at("steering").get<double>()};
}

inline nlohmann::json record_line(const StepOutcome& o) {
    nlohmann::json agents = nlohmann::json::array();
    for (std::size_t a = 0; a < o.agents.size(); ++a) {
        const auto& ag = o.agents[a];
        nlohmann::json j = state_to_json(o.states[a]);
        j["goal"] = {o.goals[a].region_index, o.goals[a].u, o.goals[a].v};
        j["reward"] = ag.reward;
        j["breakdown"] = breakdown_to_json(ag.breakdown);
        j["collided"] = ag.collided;
        agents.push_back(std::move(j));
    }
    return {{"tick", o.tick},         {"coverage", o.coverage}, {"explored", o.explored}, {"shared", o.shared},
            {"done", o.done},         {"success", o.success},   {"agents", std::move(agents)}};
}

inline void write_record_line(std::ostream& out, const StepOutcome& o) { out << record_line(o).dump() << '\n'; }

inline void update_metrics(MetricsTracker& tracker, const StepOutcome& o) {
    std::vector<double> rewards;
    rewards.reserve(o.agents.size());
    for (const auto& a : o.agents) rewards.push_back(a.reward);
    tracker.update(o.tick, o.coverage, o.shared, o.explored, rewards);
}

/// Recomputes episode metrics from a record stream.
inline EpisodeMetrics replay_metrics(std::istream& in, OverlapDefinition def = OverlapDefinition::shared) {
    std::string line;
    std::optional<MetricsTracker> tracker;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto j = nlohmann::json::parse(line);
        const auto& agents = j.at("agents");
        if (!tracker) tracker.emplace(agents.size(), def);
        std::vector<double> rewards;
        for (const auto& a : agents) rewards.push_back(a.at("reward").get<double>());
        tracker->update(j.at("tick").get<std::size_t>(), j.at("coverage").get<double>(),
                        j.at("shared").get<std::size_t>(), j.at("explored").get<std::size_t>(), rewards);
    }
    if (!tracker) throw MetricsError("empty episode record");
    return tracker->finish();
}

} // namespace ptexplore
