#include <gtest/gtest.h>

#include <sstream>

#include "support.hpp"

using namespace ptexplore;
using namespace ptexplore::testing;

namespace {

ExplorationMask masks(std::size_t n_free, const std::vector<std::vector<PointIndex>>& per_agent) {
    ExplorationMask m(per_agent.size(), n_free);
    for (std::size_t a = 0; a < per_agent.size(); ++a) m.mark(a, per_agent[a]);
    return m;
}

long double two_pass_sd(const std::vector<double>& xs) {
    long double mean = 0;
    for (double x : xs) mean += x;
    mean /= static_cast<long double>(xs.size());
    long double ss = 0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / static_cast<long double>(xs.size()));
}

/// Observation over an open `size` x `size` map with a one-cell-per-metre grid:
/// everything explored except the listed cells.
StepOutcome bundle(std::size_t size, const std::vector<Vec2>& agents, const std::vector<std::pair<int, int>>& hidden) {
    StepOutcome o;
    GridProjection g(size, size, Bounds{0, 0, static_cast<double>(size), static_cast<double>(size)});
    std::fill(g.channels[kExplored].begin(), g.channels[kExplored].end(), 1.0f);
    for (auto [x, y] : hidden) g.channels[kExplored][static_cast<std::size_t>(y) * size + static_cast<std::size_t>(x)] = 0.0f;
    for (const auto& p : agents) {
        AgentState s;
        s.x = p.x;
        s.y = p.y;
        o.states.push_back(s);
        AgentOutcome a;
        a.grid = g;
        o.agents.push_back(std::move(a));
    }
    return o;
}

} // namespace

TEST(MutualOverlap, SetCases) {
    EXPECT_EQ(mutual_overlap(masks(10, {{0, 1, 2}, {3, 4}})), 0.0);
    EXPECT_EQ(mutual_overlap(masks(10, {{0, 1, 2}, {0, 1, 2}, {2, 1, 0}})), 1.0);
    EXPECT_EQ(mutual_overlap(masks(10, {{0, 1, 2}, {2, 3}})), 0.25);
    EXPECT_EQ(mutual_overlap(masks(10, {{0, 1, 2}, {2, 3}}), OverlapDefinition::exclusive), 0.75);
    EXPECT_THROW(mutual_overlap(masks(10, {{}, {}})), MetricsError);
}

TEST(MutualOverlap, MatchesCountingOracle) {
    Rng rng(3);
    for (int k = 0; k < 300; ++k) {
        const std::size_t n_free = 1 + rng.below(200);
        const std::size_t agents = 1 + rng.below(5);
        std::vector<std::vector<PointIndex>> sets(agents);
        for (auto& s : sets) {
            for (std::size_t i = 0; i < n_free; ++i) {
                if (rng.uniform() < 0.3) s.push_back(static_cast<PointIndex>(i));
            }
        }
        std::vector<int> hits(n_free, 0);
        for (const auto& s : sets) {
            for (auto p : s) ++hits[p];
        }
        const auto uni = static_cast<std::size_t>(std::count_if(hits.begin(), hits.end(), [](int h) { return h >= 1; }));
        const auto two = static_cast<std::size_t>(std::count_if(hits.begin(), hits.end(), [](int h) { return h >= 2; }));
        const auto m = masks(n_free, sets);
        if (uni == 0) {
            EXPECT_THROW(mutual_overlap(m), MetricsError);
            continue;
        }
        const double mo = mutual_overlap(m);
        ASSERT_DOUBLE_EQ(mo, static_cast<double>(two) / static_cast<double>(uni));
        ASSERT_GE(mo, 0.0);
        ASSERT_LE(mo, 1.0);
    }
}

TEST(RewardVariance, Examples) {
    const std::vector<double> flat{10, 10, 10};
    const std::vector<double> pair{0, 10};
    EXPECT_EQ(reward_variance(flat), 0.0);
    EXPECT_EQ(reward_variance(pair), 5.0);
    EXPECT_EQ(reward_variance(std::vector<double>{42.0}), 0.0);
    EXPECT_THROW(reward_variance(std::vector<double>{}), MetricsError);
}

TEST(RewardVariance, MatchesTwoPassOracle) {
    Rng rng(9);
    for (int k = 0; k < 1000; ++k) {
        std::vector<double> xs(1 + rng.below(16));
        const double scale = std::pow(10.0, rng.uniform(-3, 4));
        for (auto& x : xs) x = rng.uniform(-scale, scale);
        const long double expect = two_pass_sd(xs);
        const double got = reward_variance(xs);
        ASSERT_LE(std::abs(got - static_cast<double>(expect)), 1e-9 * std::max(1.0, static_cast<double>(expect)));
    }
}

TEST(RewardVariance, TranslationInvariantAndScalesLinearly) {
    Rng rng(10);
    for (int k = 0; k < 200; ++k) {
        std::vector<double> xs(2 + rng.below(8));
        for (auto& x : xs) x = rng.uniform(-100, 100);
        const double base = reward_variance(xs);
        const double shift = rng.uniform(-1000, 1000);
        const double scale = rng.uniform(-5, 5);
        auto moved = xs, scaled = xs;
        for (auto& x : moved) x += shift;
        for (auto& x : scaled) x *= scale;
        ASSERT_NEAR(reward_variance(moved), base, 1e-9 * std::max(1.0, std::abs(shift)));
        ASSERT_NEAR(reward_variance(scaled), std::abs(scale) * base, 1e-9 * std::max(1.0, base));
    }
}

TEST(Tracker, NeverReachingThresholdsLeavesThemAbsent) {
    MetricsTracker t(2);
    const std::vector<double> r{1.0, 3.0};
    t.update(1, 0.3, 1, 10, r);
    t.update(2, 0.8, 2, 20, r);
    const auto m = t.finish();
    EXPECT_EQ(m.er, 0.8);
    EXPECT_FALSE(m.cs85);
    EXPECT_FALSE(m.mo85);
    EXPECT_FALSE(m.cs95);
    EXPECT_FALSE(m.mo95);
    EXPECT_EQ(m.rv, 2.0);
    EXPECT_EQ(m.steps, 2u);
}

TEST(Tracker, BothThresholdsInOneTick) {
    MetricsTracker t(1);
    const std::vector<double> r{0.0};
    t.update(1, 0.5, 0, 10, r);
    t.update(2, 0.97, 3, 12, r);
    t.update(3, 0.99, 6, 12, r);
    const auto m = t.finish();
    EXPECT_EQ(m.cs85, 2u);
    EXPECT_EQ(m.cs95, 2u);
    EXPECT_EQ(m.mo85, 0.25);
    EXPECT_EQ(m.mo95, 0.25);
}

TEST(Tracker, OutOfOrderTickThrows) {
    MetricsTracker t(1);
    const std::vector<double> r{0.0};
    t.update(1, 0.1, 0, 1, r);
    EXPECT_THROW(t.update(1, 0.1, 0, 1, r), MetricsError);
    EXPECT_THROW(t.update(3, 0.1, 0, 1, r), MetricsError);
    EXPECT_THROW(t.update(2, 0.1, 0, 1, std::vector<double>{0.0, 1.0}), MetricsError);
}

TEST(Replay, RecordGivesTheLiveMetrics) {
    EnvConfig cfg = small_config(3);
    Env env(cfg);
    for (auto kind : {PolicyKind::frontier, PolicyKind::random}) {
        const auto live = run_episode(env, 17, make_policy(kind, env, 17), true);
        std::stringstream file;
        for (const auto& line : live.record) file << line << '\n';
        EXPECT_EQ(replay_metrics(file), live.metrics);
        EXPECT_EQ(live.metrics.er, env.mask().coverage());
        EXPECT_EQ(live.metrics.er, static_cast<double>(env.mask().explored_count()) /
                                       static_cast<double>(env.map().free_points().size()));
        if (live.metrics.cs85 && live.metrics.cs95) EXPECT_LE(*live.metrics.cs85, *live.metrics.cs95);
    }
    std::stringstream empty;
    EXPECT_THROW(replay_metrics(empty), MetricsError);
}

TEST(Frontier, FullyExploredMapTargetsSelf) {
    const WorldMap map = open_map(20, 20);
    FrontierPolicy policy(map, 20, 8);
    const std::vector<Vec2> at{{3.2, 4.7}, {15.5, 11.1}};
    const auto goals = policy(bundle(20, at, {}));
    for (std::size_t a = 0; a < 2; ++a) {
        EXPECT_NEAR(goals[a].world.x, at[a].x, 1e-9);
        EXPECT_NEAR(goals[a].world.y, at[a].y, 1e-9);
        EXPECT_EQ(goals[a].agent, a);
    }
}

TEST(Frontier, SinglePocketIsClaimedByTheFirstAgent) {
    const WorldMap map = open_map(20, 20);
    FrontierPolicy policy(map, 20, 8, FrontierParams{10.0, 100.0, 0.0});
    const std::vector<std::pair<int, int>> pocket{{15, 15}, {16, 15}, {15, 16}, {16, 16}};
    const std::vector<Vec2> at{{10.5, 10.5}, {3.5, 3.5}};
    const auto goals = policy(bundle(20, at, pocket));
    // Nearest frontier for agent 0 is 9 grid moves away, next to the pocket.
    const auto cx = static_cast<int>(std::floor(goals[0].world.x));
    const auto cy = static_cast<int>(std::floor(goals[0].world.y));
    EXPECT_EQ(std::abs(cx - 10) + std::abs(cy - 10), 9);
    EXPECT_TRUE((cx == 14 && (cy == 15 || cy == 16)) || (cy == 14 && (cx == 15 || cx == 16)));
    // The whole rim lies within the claim radius, so agent 1 stays put.
    EXPECT_NEAR(goals[1].world.x, 3.5, 1e-9);
    EXPECT_NEAR(goals[1].world.y, 3.5, 1e-9);
}

TEST(Frontier, SecondAgentTakesTheNextPocket) {
    const WorldMap map = open_map(40, 40);
    FrontierPolicy policy(map, 40, 8, FrontierParams{5.0, 100.0, 0.0});
    const std::vector<std::pair<int, int>> pockets{{20, 20}, {35, 35}};
    const std::vector<Vec2> at{{18.5, 20.5}, {22.5, 20.5}};
    const auto goals = policy(bundle(40, at, pockets));
    EXPECT_LT(distance(goals[0].world, {20.5, 20.5}), 1.5);
    EXPECT_LT(distance(goals[1].world, {35.5, 35.5}), 1.5);
}

TEST(Bench, DeterministicWithoutTiming) {
    EnvConfig cfg = small_config(2);
    cfg.horizon = 30;
    const std::vector<EnvConfig> configs{cfg};
    const auto a = run_benchmark(configs, 3, PolicyKind::random, false);
    const auto b = run_benchmark(configs, 3, PolicyKind::random, false);
    ASSERT_TRUE(a.complete);
    EXPECT_EQ(a.to_text(), b.to_text());
    EXPECT_EQ(a.maps[0].episodes, 3u);
    EXPECT_EQ(a.maps[0].per_episode, b.maps[0].per_episode);
    EXPECT_THROW(run_benchmark(configs, 0, PolicyKind::random), std::invalid_argument);
}

TEST(Bench, MapErrorMarksReportIncomplete) {
    EnvConfig cfg = small_config(2);
    cfg.map.scenario.reset();
    cfg.map.path = "/nonexistent/map.mxm";
    const auto r = run_benchmark({cfg}, 1, PolicyKind::random, false);
    EXPECT_FALSE(r.complete);
    EXPECT_NE(r.to_text().find("error"), std::string::npos);
}

TEST(Timing, ReportsOneRowPerTeamSize) {
    EnvConfig cfg = small_config(2);
    const auto map = prepare_map(cfg);
    const auto rows = measure_timing(cfg, map, {2, 4}, 2, 3, false);
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[0].agents, 2u);
    EXPECT_EQ(rows[1].agents, 4u);
    EXPECT_EQ(rows[0].envs, 2u);
    for (const auto& r : rows) EXPECT_GT(r.seconds_per_step, 0.0);
}
