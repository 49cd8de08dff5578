#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <unistd.h>

#include "CLI11.hpp"
#include "ptexplore/ptexplore.hpp"

namespace {

using namespace ptexplore;

std::vector<double> parse_pair(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        double v = 0.0;
        if (!detail::parse_double(tok, v)) throw std::invalid_argument("bad number '" + tok + "' in '" + text + "'");
        out.push_back(v);
    }
    if (out.size() != 2) throw std::invalid_argument("expected lo,hi but got '" + text + "'");
    return out;
}

void write_text(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text;
}

EnvConfig config_or_default(const std::string& path) { return path.empty() ? EnvConfig{} : load_config(path); }

struct GenArgs {
    std::string kind;
    std::uint64_t seed = 0;
    double size = 125.0;
    double resolution = 1.0;
    double density = 0.15;
    std::size_t cells = 10;
    double corridor = 4.0;
    double footprint = 0.5;
    std::string out;
};

int run_gen(const GenArgs& a) {
    ScenarioSpec spec;
    spec.kind = a.kind == "maze" ? ScenarioKind::maze : ScenarioKind::random_obstacle;
    spec.seed = a.seed;
    spec.size = a.size;
    spec.resolution = a.resolution;
    spec.obstacle_density = a.density;
    spec.cell_count = a.cells;
    spec.corridor_width = a.corridor;
    spec.footprint_radius = a.footprint;
    const WorldMap map = generate(spec);
    save_map(map, a.out);
    std::cout << "map " << map.name() << "\nfree_points " << map.free_points().size() << "\nobstacle_points "
              << map.obstacle_points().size() << '\n';
    return 0;
}

struct IngestArgs {
    std::string input;
    double resolution = 0.1;
    std::string z_band;
    double height = 0.3;
    double footprint = 0.5;
    std::string out;
};

int run_ingest(const IngestArgs& a) {
    IngestOptions opt;
    opt.resolution = a.resolution;
    opt.height_threshold = a.height;
    opt.footprint_radius = a.footprint;
    if (!a.z_band.empty()) {
        const auto band = parse_pair(a.z_band);
        opt.z_lo = band[0];
        opt.z_hi = band[1];
    }
    const WorldMap map = ingest_cloud(a.input, opt);
    save_map(map, a.out);
    std::cout << validate_map(map, a.footprint).to_text();
    return 0;
}

int run_validate(const std::string& path, double footprint) {
    const auto report = validate_map(load_map(path), footprint);
    std::cout << report.to_text();
    return report.valid ? 0 : 1;
}

struct BenchArgs {
    std::string config;
    std::size_t episodes = 10;
    std::size_t maps = 1;
    std::string policy = "frontier";
    std::string out;
    bool timing = true;
};

int run_bench(const BenchArgs& a) {
    const EnvConfig base = config_or_default(a.config);
    std::vector<EnvConfig> configs;
    for (std::size_t m = 0; m < a.maps; ++m) {
        EnvConfig cfg = base;
        if (m > 0 && !cfg.map.scenario) throw std::invalid_argument("--maps > 1 needs a generated map, not a map file");
        if (cfg.map.scenario) cfg.map.scenario->seed += m;
        configs.push_back(cfg);
    }
    const auto report = run_benchmark(configs, a.episodes, parse_policy(a.policy), a.timing);
    write_text(a.out, report.to_text());
    return report.complete ? 0 : 1;
}

struct TimingArgs {
    std::string config;
    std::string map;
    std::string agents = "2,4,6,8";
    std::size_t envs = 1;
    std::size_t steps = 50;
    bool serial = false;
    bool wire = false;
};

int run_timing(const TimingArgs& a) {
    EnvConfig cfg = config_or_default(a.config);
    if (!a.map.empty()) {
        cfg.map.path = a.map;
        cfg.map.scenario.reset();
    }
    std::vector<std::size_t> teams;
    std::stringstream ss(a.agents);
    std::string tok;
    while (std::getline(ss, tok, ',')) teams.push_back(static_cast<std::size_t>(std::stoul(tok)));
    if (teams.empty()) throw std::invalid_argument("--agents needs at least one team size");
    auto map = prepare_map(cfg);
    std::cout << timing_to_text(measure_timing(cfg, map, teams, a.envs, a.steps, !a.serial));
    if (a.wire) {
        for (std::size_t n : teams) {
            EnvConfig c = cfg;
            c.n_agents = n;
            const auto w = measure_wire_overhead(c, a.steps);
            std::cout << "wire agents " << w.agents << " steps " << w.steps << " in_process_seconds "
                      << detail::format_double(w.in_process_seconds) << " wire_seconds "
                      << detail::format_double(w.wire_seconds) << '\n';
        }
    }
    return 0;
}

struct EpisodeArgs {
    std::string config;
    std::uint64_t seed = 0;
    std::string policy = "frontier";
    std::string record;
};

int run_single_episode(const EpisodeArgs& a) {
    Env env(config_or_default(a.config));
    const auto res = run_episode(env, a.seed, make_policy(parse_policy(a.policy), env, a.seed), !a.record.empty());
    if (!a.record.empty()) {
        std::ofstream out(a.record);
        if (!out) throw std::runtime_error("cannot write " + a.record);
        for (const auto& line : res.record) out << line << '\n';
    }
    std::cout << wire::metrics_to_json(res.metrics).dump() << '\n';
    return 0;
}

int run_replay(const std::string& path, const std::string& overlap) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    const auto def = overlap == "exclusive" ? OverlapDefinition::exclusive : OverlapDefinition::shared;
    std::cout << wire::metrics_to_json(replay_metrics(in, def)).dump() << '\n';
    return 0;
}

struct ServeArgs {
    std::string bind;
    bool stdio = false;
    std::string config;
};

int run_serve(const ServeArgs& a) {
    SessionOptions opt;
    if (!a.config.empty()) {
        opt.defaults = load_config(a.config);
        opt.base_dir = std::filesystem::path(a.config).parent_path();
    }
    if (a.stdio) {
        serve_stream(STDIN_FILENO, STDOUT_FILENO, opt);
        return 0;
    }
    const auto [host, port] = parse_endpoint(a.bind);
    TcpServer server(host, port, opt);
    std::cerr << "listening on " << (host.empty() ? "*" : host) << ':' << server.port() << std::endl;
    server.run();
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    std::signal(SIGPIPE, SIG_IGN);
    CLI::App app{"Multi-agent exploration simulator"};
    app.require_subcommand(1);

    GenArgs gen;
    auto* gen_cmd = app.add_subcommand("gen", "generate a scenario map");
    gen_cmd->add_option("kind", gen.kind, "random-obstacle or maze")
        ->required()
        ->check(CLI::IsMember({"random-obstacle", "maze"}));
    gen_cmd->add_option("--seed", gen.seed, "generator seed");
    gen_cmd->add_option("--size", gen.size, "side length in metres");
    gen_cmd->add_option("--resolution", gen.resolution, "point spacing in metres");
    gen_cmd->add_option("--density", gen.density, "obstacle area fraction (random-obstacle)");
    gen_cmd->add_option("--cells", gen.cells, "cells per side (maze)");
    gen_cmd->add_option("--corridor-width", gen.corridor, "corridor width in metres (maze)");
    gen_cmd->add_option("--footprint", gen.footprint, "agent footprint radius the map must admit");
    gen_cmd->add_option("-o,--output", gen.out, "output map file")->required();

    IngestArgs ingest;
    auto* ingest_cmd = app.add_subcommand("ingest", "convert an x y z point cloud into a map");
    ingest_cmd->add_option("--input", ingest.input, "point cloud, one 'x y z' per line")->required();
    ingest_cmd->add_option("--resolution", ingest.resolution, "grid spacing in metres");
    ingest_cmd->add_option("--z-band", ingest.z_band, "keep points with lo <= z <= hi, as lo,hi");
    ingest_cmd->add_option("--height-threshold", ingest.height, "z extent that marks a column as obstacle");
    ingest_cmd->add_option("--footprint", ingest.footprint, "agent footprint radius for validation");
    ingest_cmd->add_option("-o,--output", ingest.out, "output map file")->required();

    std::string validate_path;
    double validate_footprint = 0.5;
    auto* validate_cmd = app.add_subcommand("validate", "check connectivity and clearance; exit 0 iff valid");
    validate_cmd->add_option("map", validate_path, "map file")->required();
    validate_cmd->add_option("--footprint", validate_footprint, "agent footprint radius");

    BenchArgs bench;
    auto* bench_cmd = app.add_subcommand("bench", "run baseline episodes and report metrics");
    bench_cmd->add_option("--config", bench.config, "environment config (JSON)");
    bench_cmd->add_option("--episodes", bench.episodes, "episodes per map");
    bench_cmd->add_option("--maps", bench.maps, "number of generated maps (map seed, seed+1, ...)");
    bench_cmd->add_option("--policy", bench.policy, "frontier or random")->check(CLI::IsMember({"frontier", "random"}));
    bench_cmd->add_option("--out", bench.out, "report file (default stdout)");
    bench_cmd->add_flag("!--no-timing", bench.timing, "omit wall-clock so reports are diffable");

    TimingArgs timing;
    auto* timing_cmd = app.add_subcommand("timing", "seconds per vector step by team size");
    timing_cmd->add_option("--config", timing.config, "environment config (JSON)");
    timing_cmd->add_option("--map", timing.map, "map file (overrides the config)");
    timing_cmd->add_option("--agents", timing.agents, "comma-separated team sizes");
    timing_cmd->add_option("--envs", timing.envs, "environments per vector step");
    timing_cmd->add_option("--steps", timing.steps, "macro steps to time");
    timing_cmd->add_flag("--serial", timing.serial, "step environments on one thread");
    timing_cmd->add_flag("--wire", timing.wire, "also time the same steps through a loopback server");

    EpisodeArgs episode;
    auto* episode_cmd = app.add_subcommand("episode", "run one episode and print its metrics");
    episode_cmd->add_option("--config", episode.config, "environment config (JSON)");
    episode_cmd->add_option("--seed", episode.seed, "episode seed");
    episode_cmd->add_option("--policy", episode.policy, "frontier or random")
        ->check(CLI::IsMember({"frontier", "random"}));
    episode_cmd->add_option("--record", episode.record, "write the per-step record (JSON lines)");

    std::string replay_path;
    std::string replay_overlap = "shared";
    auto* replay_cmd = app.add_subcommand("replay", "recompute metrics from an episode record");
    replay_cmd->add_option("record", replay_path, "record file")->required();
    replay_cmd->add_option("--overlap", replay_overlap, "shared or exclusive")
        ->check(CLI::IsMember({"shared", "exclusive"}));

    ServeArgs serve;
    auto* serve_cmd = app.add_subcommand("serve", "serve environments over the framed protocol");
    auto* bind_opt = serve_cmd->add_option("--bind", serve.bind, "host:port to listen on");
    auto* stdio_opt = serve_cmd->add_flag("--stdio", serve.stdio, "serve one session on stdin/stdout");
    bind_opt->excludes(stdio_opt);
    serve_cmd->add_option("--config", serve.config, "default environment config (JSON)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gen_cmd) return run_gen(gen);
        if (*ingest_cmd) return run_ingest(ingest);
        if (*validate_cmd) return run_validate(validate_path, validate_footprint);
        if (*bench_cmd) return run_bench(bench);
        if (*timing_cmd) return run_timing(timing);
        if (*episode_cmd) return run_single_episode(episode);
        if (*replay_cmd) return run_replay(replay_path, replay_overlap);
        if (*serve_cmd) {
            if (serve.bind.empty() && !serve.stdio) throw std::invalid_argument("serve needs --bind host:port or --stdio");
            return run_serve(serve);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
