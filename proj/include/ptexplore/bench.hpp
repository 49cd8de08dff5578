#pragma once

#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <tbb/parallel_for.h>

#include "ptexplore/env.hpp"
#include "ptexplore/metrics.hpp"
#include "ptexplore/policies.hpp"
#include "ptexplore/record.hpp"
#include "ptexplore/vector_env.hpp"

namespace ptexplore {

enum class PolicyKind { frontier, random };

inline PolicyKind parse_policy(const std::string& s) {
    if (s == "frontier") return PolicyKind::frontier;
    if (s == "random") return PolicyKind::random;
    throw std::invalid_argument("unknown policy '" + s + "'");
}

using GoalPolicy = std::function<std::vector<Goal>(const StepOutcome&)>;

inline GoalPolicy make_policy(PolicyKind kind, const Env& env, std::uint64_t seed) {
    const auto& cfg = env.config();
    if (kind == PolicyKind::frontier) {
        return FrontierPolicy(env.map(), cfg.grid_size, cfg.region_grid);
    }
    return RandomPolicy(env.map().bounds(), cfg.region_grid, seed);
}

struct EpisodeResult {
    EpisodeMetrics metrics;
    std::vector<std::string> record; // one JSON line per macro step
    double step_seconds = 0.0;       // summed wall-clock inside Env::step
};

/// Runs one episode to completion with `policy` choosing goals each macro step.
inline EpisodeResult run_episode(Env& env, std::uint64_t seed, const GoalPolicy& policy, bool keep_record = false,
                                 OverlapDefinition def = OverlapDefinition::shared) {
    EpisodeResult res;
    MetricsTracker tracker(env.config().n_agents, def);
    StepOutcome obs = env.reset(seed);
    while (!obs.done) {
        const auto goals = policy(obs);
        const auto t0 = std::chrono::steady_clock::now();
        obs = env.step(goals);
        res.step_seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        update_metrics(tracker, obs);
        if (keep_record) res.record.push_back(record_line(obs).dump());
    }
    res.metrics = tracker.finish();
    return res;
}

struct Aggregate {
    double mean = 0.0;
    double stddev = 0.0;
    std::size_t count = 0;
};

inline Aggregate aggregate(const std::vector<double>& xs) {
    Aggregate a;
    a.count = xs.size();
    if (xs.empty()) return a;
    for (double x : xs) a.mean += x;
    a.mean /= static_cast<double>(xs.size());
    for (double x : xs) a.stddev += (x - a.mean) * (x - a.mean);
    a.stddev = std::sqrt(a.stddev / static_cast<double>(xs.size()));
    return a;
}

struct MapReport {
    std::string map_name;
    std::size_t episodes = 0;
    std::size_t agents = 0;
    Aggregate er, cs85, cs95, mo85, mo95, rv;
    double seconds_per_step = 0.0;
    std::vector<EpisodeMetrics> per_episode;
};

struct BenchReport {
    std::vector<MapReport> maps;
    bool complete = true;
    std::string error;

    std::string to_text() const {
        std::ostringstream os;
        auto fmt = [](double v) { return detail::format_double(v); };
        auto agg = [&](const char* name, const Aggregate& a) {
            os << name << ' ' << fmt(a.mean) << " (" << fmt(a.stddev) << ") n=" << a.count << '\n';
        };
        os << "complete " << (complete ? "true" : "false") << '\n';
        if (!complete) os << "error " << error << '\n';
        for (const auto& m : maps) {
            os << "map " << m.map_name << '\n';
            os << "episodes " << m.episodes << '\n';
            os << "agents " << m.agents << '\n';
            agg("er", m.er);
            agg("cs85", m.cs85);
            agg("cs95", m.cs95);
            agg("mo85", m.mo85);
            agg("mo95", m.mo95);
            agg("rv", m.rv);
            os << "seconds_per_step " << fmt(m.seconds_per_step) << '\n';
        }
        std::vector<double> means;
        for (const auto& m : maps) means.push_back(m.er.mean);
        agg("overall_er", aggregate(means));
        return os.str();
    }
};

/// Runs `episodes` episodes per config (seeds cfg.seed + k) and aggregates
/// metrics as mean (population std). Episodes run in parallel; the reduction
/// is in episode order. `include_timing` adds wall-clock, which is the only
/// non-deterministic field.
inline BenchReport run_benchmark(const std::vector<EnvConfig>& configs, std::size_t episodes, PolicyKind policy,
                                 bool include_timing = true) {
    BenchReport report;
    if (episodes == 0) throw std::invalid_argument("episode count must be positive");
    for (const auto& cfg : configs) {
        MapReport mr;
        std::shared_ptr<const WorldMap> map;
        try {
            map = prepare_map(cfg);
        } catch (const std::exception& e) {
            report.complete = false;
            report.error = e.what();
            return report;
        }
        mr.map_name = map->name();
        mr.agents = cfg.n_agents;
        std::vector<std::optional<EpisodeResult>> results(episodes);
        std::vector<std::string> errors(episodes);
        tbb::parallel_for(std::size_t{0}, episodes, [&](std::size_t k) {
            try {
                Env env(cfg, map);
                const std::uint64_t seed = cfg.seed + k;
                results[k] = run_episode(env, seed, make_policy(policy, env, seed));
            } catch (const std::exception& e) {
                errors[k] = e.what();
            }
        });
        std::vector<double> er, cs85, cs95, mo85, mo95, rv;
        double secs = 0.0;
        std::size_t steps = 0;
        for (std::size_t k = 0; k < episodes; ++k) {
            if (!results[k]) {
                report.complete = false;
                report.error = "episode " + std::to_string(k) + ": " + errors[k];
                continue;
            }
            const auto& m = results[k]->metrics;
            mr.per_episode.push_back(m);
            er.push_back(m.er);
            rv.push_back(m.rv);
            if (m.cs85) cs85.push_back(static_cast<double>(*m.cs85));
            if (m.cs95) cs95.push_back(static_cast<double>(*m.cs95));
            if (m.mo85) mo85.push_back(*m.mo85);
            if (m.mo95) mo95.push_back(*m.mo95);
            secs += results[k]->step_seconds;
            steps += m.steps;
        }
        mr.episodes = mr.per_episode.size();
        mr.er = aggregate(er);
        mr.cs85 = aggregate(cs85);
        mr.cs95 = aggregate(cs95);
        mr.mo85 = aggregate(mo85);
        mr.mo95 = aggregate(mo95);
        mr.rv = aggregate(rv);
        mr.seconds_per_step = include_timing && steps ? secs / static_cast<double>(steps) : 0.0;
        report.maps.push_back(std::move(mr));
        if (!report.complete) break;
    }
    return report;
}

struct TimingRow {
    std::size_t agents = 0;
    std::size_t envs = 0;
    std::size_t steps = 0;
    double seconds_per_step = 0.0;
};

/// Mean wall-clock per vector step for each team size on a fixed map.
/// Goals come from the frontier baseline; only the step itself is timed.
inline std::vector<TimingRow> measure_timing(EnvConfig cfg, std::shared_ptr<const WorldMap> map,
                                             const std::vector<std::size_t>& team_sizes, std::size_t envs,
                                             std::size_t steps, bool parallel = true) {
    std::vector<TimingRow> rows;
    for (std::size_t n : team_sizes) {
        cfg.n_agents = n;
        cfg.horizon = std::max(cfg.horizon, steps + 1);
        VectorEnv venv(cfg, map, envs, parallel);
        std::vector<std::uint64_t> seeds(envs);
        for (std::size_t i = 0; i < envs; ++i) seeds[i] = cfg.seed + i;
        auto obs = venv.reset(seeds);
        std::vector<FrontierPolicy> policies;
        for (std::size_t i = 0; i < envs; ++i) policies.emplace_back(*map, cfg.grid_size, cfg.region_grid);
        double secs = 0.0;
        std::size_t done_steps = 0;
        for (std::size_t s = 0; s < steps; ++s) {
            std::vector<std::vector<Goal>> goals(envs);
            for (std::size_t i = 0; i < envs; ++i) goals[i] = policies[i](obs[i]);
            const auto t0 = std::chrono::steady_clock::now();
            obs = venv.step(goals);
            secs += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            ++done_steps;
            bool any_done = false;
            for (const auto& o : obs) any_done = any_done || o.done;
            if (any_done) break;
        }
        rows.push_back({n, envs, done_steps, done_steps ? secs / static_cast<double>(done_steps) : 0.0});
    }
    return rows;
}

inline std::string timing_to_text(const std::vector<TimingRow>& rows) {
    std::ostringstream os;
    for (const auto& r : rows) {
        os << "agents " << r.agents << " envs " << r.envs << " steps " << r.steps << " seconds_per_step "
           << detail::format_double(r.seconds_per_step) << '\n';
    }
    return os.str();
}

} // namespace ptexplore
