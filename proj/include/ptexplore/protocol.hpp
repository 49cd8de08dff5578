#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ptexplore/config.hpp"
#include "ptexplore/env.hpp"
#include "ptexplore/metrics.hpp"
#include "ptexplore/record.hpp"
#include "ptexplore/vector_env.hpp"

namespace ptexplore {

inline constexpr std::uint32_t kProtocolVersion = 1;
inline constexpr std::size_t kMaxFrameBytes = std::size_t{64} << 20;
inline constexpr std::size_t kFrameHeaderBytes = 4;

/// Unrecoverable stream error; the connection is closed after reporting it.
class ProtocolError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A well-framed body that is not a valid message. The session continues.
class MessageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ProtocolMessage {
    std::uint64_t id = 0;
    std::string verb;
    nlohmann::json payload = nlohmann::json::object();

    friend bool operator==(const ProtocolMessage&, const ProtocolMessage&) = default;
};

// ---------------------------------------------------------------------------
// Frame codec

inline std::string message_body(const ProtocolMessage& m) {
    nlohmann::json j{{"id", m.id}, {"verb", m.verb}, {"payload", m.payload}};
    return j.dump();
}

inline ProtocolMessage parse_body(std::string_view body) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(body.begin(), body.end());
    } catch (const nlohmann::json::parse_error& e) {
        throw MessageError(std::string("body is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw MessageError("body must be a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (it.key() != "id" && it.key() != "verb" && it.key() != "payload") {
            throw MessageError("unexpected field '" + it.key() + "'");
        }
    }
    ProtocolMessage m;
    const auto id = j.find("id");
    if (id == j.end() || !id->is_number_unsigned()) throw MessageError("'id' must be a non-negative integer");
    m.id = id->get<std::uint64_t>();
    const auto verb = j.find("verb");
    if (verb == j.end() || !verb->is_string()) throw MessageError("'verb' must be a string");
    m.verb = verb->get<std::string>();
    if (const auto p = j.find("payload"); p != j.end()) {
        if (!p->is_object()) throw MessageError("'payload' must be an object");
        m.payload = *p;
    }
    return m;
}

inline void append_frame(std::string& out, std::string_view body) {
    if (body.size() > kMaxFrameBytes) {
        throw ProtocolError("frame of " + std::to_string(body.size()) + " bytes exceeds the 64 MiB limit");
    }
    const auto n = static_cast<std::uint32_t>(body.size());
    out.push_back(static_cast<char>((n >> 24) & 0xff));
    out.push_back(static_cast<char>((n >> 16) & 0xff));
    out.push_back(static_cast<char>((n >> 8) & 0xff));
    out.push_back(static_cast<char>(n & 0xff));
    out.append(body);
}

inline std::string encode_frame(const ProtocolMessage& m) {
    std::string out;
    append_frame(out, message_body(m));
    return out;
}

enum class DecodeStatus { complete, need_more };

struct FrameView {
    DecodeStatus status = DecodeStatus::need_more;
    std::size_t consumed = 0; // header + body when complete
    std::string_view body;
};

/// Looks for one frame at the start of `buffer`. Throws ProtocolError when the
/// declared length exceeds the limit, before any body bytes are needed.
inline FrameView peek_frame(std::string_view buffer) {
    FrameView v;
    if (buffer.size() < kFrameHeaderBytes) return v;
    const auto b = [&](std::size_t i) { return static_cast<std::uint32_t>(static_cast<unsigned char>(buffer[i])); };
    const std::uint32_t n = (b(0) << 24) | (b(1) << 16) | (b(2) << 8) | b(3);
    if (n > kMaxFrameBytes) {
        throw ProtocolError("declared frame length " + std::to_string(n) + " exceeds the 64 MiB limit");
    }
    if (buffer.size() - kFrameHeaderBytes < n) return v;
    v.status = DecodeStatus::complete;
    v.consumed = kFrameHeaderBytes + n;
    v.body = buffer.substr(kFrameHeaderBytes, n);
    return v;
}

struct DecodeResult {
    DecodeStatus status = DecodeStatus::need_more;
    std::size_t consumed = 0;
    std::optional<ProtocolMessage> message;
};

/// Decodes one framed message. A malformed body throws MessageError.
inline DecodeResult decode_frame(std::string_view buffer) {
    const FrameView v = peek_frame(buffer);
    DecodeResult r;
    if (v.status == DecodeStatus::need_more) return r;
    r.status = DecodeStatus::complete;
    r.consumed = v.consumed;
    r.message = parse_body(v.body);
    return r;
}

/// Incremental splitter for a byte stream.
class FrameDecoder {
public:
    void feed(std::string_view bytes) { buffer_.append(bytes); }

    /// The next complete body, or nullopt when more bytes are needed.
    std::optional<std::string> next_body() {
        const FrameView v = peek_frame(std::string_view(buffer_).substr(offset_));
        if (v.status == DecodeStatus::need_more) {
            compact();
            return std::nullopt;
        }
        std::string body(v.body);
        offset_ += v.consumed;
        return body;
    }

    std::size_t buffered() const { return buffer_.size() - offset_; }

private:
    void compact() {
        if (offset_ > 0) {
            buffer_.erase(0, offset_);
            offset_ = 0;
        }
    }

    std::string buffer_;
    std::size_t offset_ = 0;
};

// ---------------------------------------------------------------------------
// Payload encoding

namespace wire {

/// Run-length encoding as a flat [value, count, value, count, ...] array.
inline nlohmann::json rle_encode(std::span<const float> values) {
    nlohmann::json out = nlohmann::json::array();
    std::size_t i = 0;
    while (i < values.size()) {
        std::size_t j = i + 1;
        while (j < values.size() && values[j] == values[i]) ++j;
        out.push_back(values[i]);
        out.push_back(j - i);
        i = j;
    }
    return out;
}

inline std::vector<float> rle_decode(const nlohmann::json& runs, std::size_t expected) {
    if (!runs.is_array() || runs.size() % 2 != 0) throw MessageError("run-length data must be an even-length array");
    std::vector<float> out;
    out.reserve(expected);
    for (std::size_t k = 0; k < runs.size(); k += 2) {
        const auto v = runs[k].get<float>();
        const auto n = runs[k + 1].get<std::size_t>();
        if (n == 0 || out.size() + n > expected) throw MessageError("run-length data has the wrong length");
        out.insert(out.end(), n, v);
    }
    if (out.size() != expected) throw MessageError("run-length data has the wrong length");
    return out;
}

inline constexpr const char* kChannelNames[GridProjection::kChannels] = {"explored", "obstacles", "agent_position",
                                                                         "trajectory"};

inline nlohmann::json points_to_json(std::span<const Vec2> pts) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& p : pts) {
        a.push_back(p.x);
        a.push_back(p.y);
    }
    return a;
}

inline std::vector<Vec2> points_from_json(const nlohmann::json& a) {
    if (!a.is_array() || a.size() % 2 != 0) throw MessageError("point list must be a flat [x, y, ...] array");
    std::vector<Vec2> pts;
    pts.reserve(a.size() / 2);
    for (std::size_t k = 0; k < a.size(); k += 2) pts.push_back({a[k].get<double>(), a[k + 1].get<double>()});
    return pts;
}

inline nlohmann::json bounds_to_json(const Bounds& b) { return {b.xmin, b.ymin, b.xmax, b.ymax}; }

inline Bounds bounds_from_json(const nlohmann::json& j) {
    return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>(), j.at(3).get<double>()};
}

inline nlohmann::json map_to_json(const WorldMap& map) {
    return {{"name", map.name()},
            {"resolution", map.resolution()},
            {"bounds", bounds_to_json(map.bounds())},
            {"free", points_to_json(map.free_points())},
            {"obstacles", points_to_json(map.obstacle_points())}};
}

inline WorldMap map_from_json(const nlohmann::json& j) {
    return WorldMap(j.at("name").get<std::string>(), j.at("resolution").get<double>(),
                    bounds_from_json(j.at("bounds")), points_from_json(j.at("free")),
                    points_from_json(j.at("obstacles")));
}

inline nlohmann::json goal_to_json(const Goal& g) { return {g.region_index, g.u, g.v}; }

inline Goal goal_from_json(const nlohmann::json& j, std::size_t agent, const Bounds& bounds, std::size_t L) {
    if (!j.is_array() || j.size() != 3 || !j[0].is_number_integer() || j[0].get<std::int64_t>() < 0 ||
        !j[1].is_number() || !j[2].is_number()) {
        throw MessageError("goal must be [region_index, u, v]");
    }
    Goal g;
    g.agent = agent;
    g.region_index = j[0].get<std::size_t>();
    g.u = j[1].get<double>();
    g.v = j[2].get<double>();
    if (g.region_index >= L * L) throw MessageError("region_index " + std::to_string(g.region_index) + " out of range");
    if (!(g.u >= 0.0 && g.u <= 1.0 && g.v >= 0.0 && g.v <= 1.0)) throw MessageError("goal offsets must lie in [0, 1]");
    g.world = decode_target(g.region_index, g.u, g.v, bounds, L);
    return g;
}

inline nlohmann::json indices_to_json(std::span<const PointIndex> idx) { return nlohmann::json(std::vector(idx.begin(), idx.end())); }

inline nlohmann::json observation_to_json(const StepOutcome& o, bool include_grid = true) {
    nlohmann::json agents = nlohmann::json::array();
    for (std::size_t a = 0; a < o.agents.size(); ++a) {
        const auto& ag = o.agents[a];
        nlohmann::json j{{"state", state_to_json(o.states[a])},
                         {"goal", goal_to_json(o.goals[a])},
                         {"reward", ag.reward},
                         {"breakdown", breakdown_to_json(ag.breakdown)},
                         {"collided", ag.collided},
                         {"newly_explored", ag.newly_explored},
                         {"sensed", {{"free", indices_to_json(ag.sensed.visible_free)},
                                     {"obstacles", indices_to_json(ag.sensed.in_range_obstacles)}}}};
        if (include_grid) {
            nlohmann::json channels;
            for (std::size_t c = 0; c < GridProjection::kChannels; ++c) {
                channels[kChannelNames[c]] = rle_encode(ag.grid.channels[c]);
            }
            j["grid"] = {{"width", ag.grid.width}, {"height", ag.grid.height}, {"channels", std::move(channels)}};
        }
        agents.push_back(std::move(j));
    }
    return {{"tick", o.tick},       {"coverage", o.coverage}, {"explored", o.explored}, {"shared", o.shared},
            {"done", o.done},       {"success", o.success},   {"agents", std::move(agents)}};
}

/// Rebuilds an outcome from its wire form. `bounds` and `L` come from the
/// configure response and restore the grid geometry and goal coordinates.
inline StepOutcome observation_from_json(const nlohmann::json& j, const Bounds& bounds, std::size_t L) {
    StepOutcome o;
    o.tick = j.at("tick").get<std::size_t>();
    o.coverage = j.at("coverage").get<double>();
    o.explored = j.at("explored").get<std::size_t>();
    o.shared = j.at("shared").get<std::size_t>();
    o.done = j.at("done").get<bool>();
    o.success = j.at("success").get<bool>();
    const auto& agents = j.at("agents");
    for (std::size_t a = 0; a < agents.size(); ++a) {
        const auto& aj = agents[a];
        o.states.push_back(state_from_json(aj.at("state")));
        o.goals.push_back(goal_from_json(aj.at("goal"), a, bounds, L));
        AgentOutcome ag;
        ag.reward = aj.at("reward").get<double>();
        ag.breakdown = breakdown_from_json(aj.at("breakdown"));
        ag.collided = aj.at("collided").get<bool>();
        ag.newly_explored = aj.at("newly_explored").get<std::size_t>();
        ag.sensed.agent = a;
        ag.sensed.tick = o.tick;
        ag.sensed.visible_free = aj.at("sensed").at("free").get<std::vector<PointIndex>>();
        ag.sensed.in_range_obstacles = aj.at("sensed").at("obstacles").get<std::vector<PointIndex>>();
        if (const auto g = aj.find("grid"); g != aj.end()) {
            ag.grid = GridProjection(g->at("width").get<std::size_t>(), g->at("height").get<std::size_t>(), bounds);
            for (std::size_t c = 0; c < GridProjection::kChannels; ++c) {
                ag.grid.channels[c] = rle_decode(g->at("channels").at(kChannelNames[c]), ag.grid.width * ag.grid.height);
            }
        }
        o.agents.push_back(std::move(ag));
    }
    return o;
}

inline nlohmann::json metrics_to_json(const EpisodeMetrics& m) {
    auto opt = [](const auto& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
    return {{"er", m.er},   {"cs85", opt(m.cs85)}, {"cs95", opt(m.cs95)}, {"mo85", opt(m.mo85)},
            {"mo95", opt(m.mo95)}, {"rv", m.rv},   {"steps", m.steps}};
}

inline EpisodeMetrics metrics_from_json(const nlohmann::json& j) {
    EpisodeMetrics m;
    m.er = j.at("er").get<double>();
    if (!j.at("cs85").is_null()) m.cs85 = j.at("cs85").get<std::size_t>();
    if (!j.at("cs95").is_null()) m.cs95 = j.at("cs95").get<std::size_t>();
    if (!j.at("mo85").is_null()) m.mo85 = j.at("mo85").get<double>();
    if (!j.at("mo95").is_null()) m.mo95 = j.at("mo95").get<double>();
    m.rv = j.at("rv").get<double>();
    m.steps = j.at("steps").get<std::size_t>();
    return m;
}

} // namespace wire

// ---------------------------------------------------------------------------
// Session

struct SessionOptions {
    EnvConfig defaults;
    std::filesystem::path base_dir; // resolves relative map paths in configure
    bool parallel = true;           // step a session's environments on worker threads
    std::size_t max_envs = 256;
};

/// One client's conversation: hello, configure, then any number of
/// reset/step/metrics exchanges, then close. Requests are answered in order.
class Session {
public:
    explicit Session(SessionOptions options) : opt_(std::move(options)) {}

    bool closed() const { return phase_ == Phase::closed; }

    /// Handles one frame body; malformed bodies produce an error response.
    ProtocolMessage handle_body(std::string_view body) {
        ProtocolMessage req;
        try {
            req = parse_body(body);
        } catch (const MessageError& e) {
            return error(0, "", "bad_message", e.what());
        }
        return handle(req);
    }

    ProtocolMessage handle(const ProtocolMessage& req) {
        try {
            if (phase_ == Phase::closed) return error(req.id, req.verb, "state", "session is closed");
            if (req.verb == "hello") return reply(req, on_hello(req.payload));
            if (req.verb == "close") return reply(req, on_close());
            if (req.verb == "configure") return reply(req, on_configure(req.payload));
            if (req.verb == "reset") return reply(req, on_reset(req.payload));
            if (req.verb == "step") return reply(req, on_step(req.payload));
            if (req.verb == "metrics") return reply(req, on_metrics());
            return error(req.id, req.verb, "unknown_verb", "unknown verb '" + req.verb + "'");
        } catch (const StateError& e) {
            return error(req.id, req.verb, "state", e.what());
        } catch (const MessageError& e) {
            return error(req.id, req.verb, "bad_request", e.what());
        } catch (const ConfigError& e) {
            return error(req.id, req.verb, "bad_request", e.what());
        } catch (const nlohmann::json::exception& e) {
            return error(req.id, req.verb, "bad_request", e.what());
        } catch (const std::exception& e) {
            return error(req.id, req.verb, "internal", e.what());
        }
    }

    static ProtocolMessage error(std::uint64_t id, const std::string& verb, const std::string& code,
                                 const std::string& message) {
        return {id, "error", {{"code", code}, {"message", message}, {"request_verb", verb}}};
    }

private:
    enum class Phase { greeting, ready, configured, running, closed };

    class StateError : public std::runtime_error {
    public:
        using std::runtime_error::runtime_error;
    };

    static ProtocolMessage reply(const ProtocolMessage& req, nlohmann::json payload) {
        return {req.id, req.verb, std::move(payload)};
    }

    void require(bool ok, const char* what) const {
        if (!ok) throw StateError(what);
    }

    nlohmann::json on_hello(const nlohmann::json& p) {
        require(phase_ == Phase::greeting, "hello already completed");
        if (const auto v = p.find("version"); v != p.end() && *v != kProtocolVersion) {
            throw MessageError("unsupported protocol version " + v->dump() + "; server speaks 1");
        }
        phase_ = Phase::ready;
        return {{"version", kProtocolVersion},
                {"server", "ptexplore"},
                {"capabilities", {"configure", "reset", "step", "metrics", "close", "rle_grid", "map_snapshot"}}};
    }

    nlohmann::json on_close() {
        phase_ = Phase::closed;
        venv_.reset();
        trackers_.clear();
        return nlohmann::json::object();
    }

    nlohmann::json on_configure(const nlohmann::json& p) {
        require(phase_ != Phase::greeting, "hello required before configure");
        for (auto it = p.begin(); it != p.end(); ++it) {
            if (it.key() != "config" && it.key() != "envs" && it.key() != "include_grid" &&
                it.key() != "overlap_definition") {
                throw MessageError("unknown configure field '" + it.key() + "'");
            }
        }
        EnvConfig cfg = opt_.defaults;
        if (const auto c = p.find("config"); c != p.end()) apply_config(cfg, *c, opt_.base_dir);
        const std::size_t envs = p.value("envs", std::size_t{1});
        if (envs == 0 || envs > opt_.max_envs) {
            throw MessageError("envs must be in [1, " + std::to_string(opt_.max_envs) + "]");
        }
        const bool include_grid = p.value("include_grid", true);
        OverlapDefinition def = OverlapDefinition::shared;
        if (const auto d = p.find("overlap_definition"); d != p.end()) {
            const auto s = d->get<std::string>();
            if (s == "exclusive") {
                def = OverlapDefinition::exclusive;
            } else if (s != "shared") {
                throw MessageError("overlap_definition must be 'shared' or 'exclusive'");
            }
        }
        cfg.check();
        auto map = prepare_map(cfg);
        auto venv = std::make_unique<VectorEnv>(cfg, map, envs, opt_.parallel);

        // Commit only after everything above succeeded.
        cfg_ = cfg;
        venv_ = std::move(venv);
        include_grid_ = include_grid;
        overlap_def_ = def;
        trackers_.clear();
        phase_ = Phase::configured;
        return {{"config", config_to_json(cfg_)},
                {"envs", envs},
                {"n_agents", cfg_.n_agents},
                {"region_grid", cfg_.region_grid},
                {"grid", {{"width", cfg_.grid_size}, {"height", cfg_.grid_size}}},
                {"map", wire::map_to_json(*map)}};
    }

    nlohmann::json on_reset(const nlohmann::json& p) {
        require(phase_ == Phase::configured || phase_ == Phase::running, "configure required before reset");
        const std::size_t m = venv_->size();
        std::vector<std::uint64_t> seeds;
        if (const auto s = p.find("seeds"); s != p.end()) {
            seeds = s->get<std::vector<std::uint64_t>>();
            if (seeds.size() != m) throw MessageError("expected " + std::to_string(m) + " seeds");
        } else if (const auto s1 = p.find("seed"); s1 != p.end()) {
            const auto base = s1->get<std::uint64_t>();
            for (std::size_t i = 0; i < m; ++i) seeds.push_back(base + i);
        } else {
            throw MessageError("reset needs 'seeds' or 'seed'");
        }
        const auto outcomes = venv_->reset(seeds);
        trackers_.assign(m, MetricsTracker(cfg_.n_agents, overlap_def_));
        phase_ = Phase::running;
        return observations(outcomes);
    }

    nlohmann::json on_step(const nlohmann::json& p) {
        require(phase_ == Phase::running, "reset required before step");
        const auto& goals_json = p.at("goals");
        const std::size_t m = venv_->size();
        if (!goals_json.is_array() || goals_json.size() != m) {
            throw MessageError("expected goals for " + std::to_string(m) + " environments");
        }
        std::vector<std::vector<Goal>> goals(m);
        const Bounds bounds = venv_->env(0).map().bounds();
        for (std::size_t e = 0; e < m; ++e) {
            const auto& per_env = goals_json[e];
            if (!per_env.is_array() || per_env.size() != cfg_.n_agents) {
                throw MessageError("env " + std::to_string(e) + ": expected " + std::to_string(cfg_.n_agents) +
                                   " goals");
            }
            if (venv_->env(e).done()) {
                throw StateError("env " + std::to_string(e) + " episode is done; reset first");
            }
            for (std::size_t a = 0; a < cfg_.n_agents; ++a) {
                goals[e].push_back(wire::goal_from_json(per_env[a], a, bounds, cfg_.region_grid));
            }
        }
        const auto outcomes = venv_->step(goals);
        for (std::size_t e = 0; e < m; ++e) update_metrics(trackers_[e], outcomes[e]);
        return observations(outcomes);
    }

    nlohmann::json on_metrics() {
        require(phase_ == Phase::running, "reset required before metrics");
        nlohmann::json list = nlohmann::json::array();
        for (std::size_t e = 0; e < trackers_.size(); ++e) {
            list.push_back({{"done", venv_->env(e).done()}, {"metrics", wire::metrics_to_json(trackers_[e].finish())}});
        }
        return {{"envs", std::move(list)}};
    }

    nlohmann::json observations(const std::vector<StepOutcome>& outcomes) const {
        nlohmann::json list = nlohmann::json::array();
        for (const auto& o : outcomes) list.push_back(wire::observation_to_json(o, include_grid_));
        return {{"observations", std::move(list)}};
    }

    SessionOptions opt_;
    Phase phase_ = Phase::greeting;
    EnvConfig cfg_;
    std::unique_ptr<VectorEnv> venv_;
    std::vector<MetricsTracker> trackers_;
    bool include_grid_ = true;
    OverlapDefinition overlap_def_ = OverlapDefinition::shared;
};

} // namespace ptexplore
