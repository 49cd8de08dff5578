#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <thread>
#include <vector>

#include "ptexplore/bench.hpp"
#include "ptexplore/server.hpp"

namespace ptexplore {

/// Client-side view of a served environment batch. Observations are decoded
/// back into StepOutcome so in-process policies run unchanged.
class RemoteEnv {
public:
    explicit RemoteEnv(Client& client) : client_(client) {}

    nlohmann::json hello() { return client_.call("hello", {{"version", kProtocolVersion}}).payload; }

    void configure(nlohmann::json payload) {
        const auto r = client_.call("configure", std::move(payload)).payload;
        map_ = std::make_shared<const WorldMap>(wire::map_from_json(r.at("map")));
        config_ = config_from_json(r.at("config"));
        envs_ = r.at("envs").get<std::size_t>();
    }

    const WorldMap& map() const { return *map_; }
    const EnvConfig& config() const { return config_; }
    std::size_t envs() const { return envs_; }

    std::vector<StepOutcome> reset(const std::vector<std::uint64_t>& seeds) {
        return decode(client_.call("reset", {{"seeds", seeds}}));
    }

    std::vector<StepOutcome> step(const std::vector<std::vector<Goal>>& goals) {
        nlohmann::json list = nlohmann::json::array();
        for (const auto& per_env : goals) {
            nlohmann::json g = nlohmann::json::array();
            for (const auto& goal : per_env) g.push_back(wire::goal_to_json(goal));
            list.push_back(std::move(g));
        }
        return decode(client_.call("step", {{"goals", std::move(list)}}));
    }

    std::vector<EpisodeMetrics> metrics() {
        std::vector<EpisodeMetrics> out;
        const auto r = client_.call("metrics");
        for (const auto& e : r.payload.at("envs")) out.push_back(wire::metrics_from_json(e.at("metrics")));
        return out;
    }

    void close() { client_.call("close"); }

private:
    std::vector<StepOutcome> decode(const ProtocolMessage& r) const {
        std::vector<StepOutcome> out;
        for (const auto& o : r.payload.at("observations")) {
            out.push_back(wire::observation_from_json(o, map_->bounds(), config_.region_grid));
        }
        return out;
    }

    Client& client_;
    std::shared_ptr<const WorldMap> map_;
    EnvConfig config_;
    std::size_t envs_ = 0;
};

struct RemoteEpisodeResult {
    EpisodeMetrics client_metrics; // recomputed from received observations
    EpisodeMetrics server_metrics; // reported by the metrics verb
    std::vector<std::string> record;
};

/// Drives env 0 of a configured RemoteEnv for one episode.
inline RemoteEpisodeResult run_remote_episode(RemoteEnv& env, std::uint64_t seed, const GoalPolicy& policy,
                                              OverlapDefinition def = OverlapDefinition::shared) {
    if (env.envs() != 1) throw std::invalid_argument("run_remote_episode expects a single-env session");
    RemoteEpisodeResult res;
    MetricsTracker tracker(env.config().n_agents, def);
    StepOutcome obs = env.reset({seed}).front();
    while (!obs.done) {
        obs = env.step({policy(obs)}).front();
        update_metrics(tracker, obs);
        res.record.push_back(record_line(obs).dump());
    }
    res.client_metrics = tracker.finish();
    res.server_metrics = env.metrics().front();
    return res;
}

inline GoalPolicy make_remote_policy(PolicyKind kind, const RemoteEnv& env, std::uint64_t seed) {
    const auto& cfg = env.config();
    if (kind == PolicyKind::frontier) return FrontierPolicy(env.map(), cfg.grid_size, cfg.region_grid);
    return RandomPolicy(env.map().bounds(), cfg.region_grid, seed);
}

struct WireOverhead {
    std::size_t agents = 0;
    std::size_t steps = 0;
    double in_process_seconds = 0.0; // per step
    double wire_seconds = 0.0;       // per step, loopback TCP round trip
};

/// Steps the same goal stream in process and through a loopback server.
inline WireOverhead measure_wire_overhead(const EnvConfig& cfg, std::size_t steps) {
    WireOverhead w;
    w.agents = cfg.n_agents;
    EnvConfig run_cfg = cfg;
    run_cfg.horizon = std::max(cfg.horizon, steps + 1);
    run_cfg.success_threshold = 1.0;

    Env env(run_cfg);
    FrontierPolicy local_policy(env.map(), run_cfg.grid_size, run_cfg.region_grid);
    StepOutcome obs = env.reset(run_cfg.seed);
    std::vector<std::vector<Goal>> goal_stream;
    double local = 0.0;
    for (std::size_t s = 0; s < steps && !obs.done; ++s) {
        goal_stream.push_back(local_policy(obs));
        const auto t0 = std::chrono::steady_clock::now();
        obs = env.step(goal_stream.back());
        local += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
    w.steps = goal_stream.size();
    if (w.steps == 0) return w;
    w.in_process_seconds = local / static_cast<double>(w.steps);

    SessionOptions opt;
    opt.defaults = run_cfg;
    opt.parallel = false;
    TcpServer server("127.0.0.1", 0, opt);
    std::thread accept_loop([&] { server.run(); });
    double wire = 0.0;
    try {
        Client client = Client::connect("127.0.0.1", server.port());
        RemoteEnv remote(client);
        remote.hello();
        remote.configure({{"envs", 1}});
        remote.reset({run_cfg.seed});
        const auto t2 = std::chrono::steady_clock::now();
        for (const auto& g : goal_stream) remote.step({g});
        wire = std::chrono::duration<double>(std::chrono::steady_clock::now() - t2).count();
        remote.close();
    } catch (...) {
        server.stop();
        accept_loop.join();
        throw;
    }
    server.stop();
    accept_loop.join();
    w.wire_seconds = wire / static_cast<double>(w.steps);
    return w;
}

} // namespace ptexplore
