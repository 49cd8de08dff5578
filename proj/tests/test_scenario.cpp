#include <gtest/gtest.h>

#include <map>
#include <set>
#include <sstream>

#include "support.hpp"

using namespace ptexplore;
using namespace ptexplore::testing;

namespace {

/// Graph oracle on the carve list: edge count and BFS reachability.
void expect_spanning_tree(const std::vector<MazePassage>& carved, std::size_t cells) {
    const std::size_t n = cells * cells;
    ASSERT_EQ(carved.size(), n - 1);
    std::vector<std::vector<std::size_t>> adj(n);
    std::set<std::pair<std::size_t, std::size_t>> unique;
    for (const auto& p : carved) {
        ASSERT_LT(p.a, p.b);
        ASSERT_LT(p.b, n);
        const bool lattice_edge = (p.b == p.a + 1 && p.a / cells == p.b / cells) || p.b == p.a + cells;
        ASSERT_TRUE(lattice_edge) << p.a << "-" << p.b;
        ASSERT_TRUE(unique.insert({p.a, p.b}).second) << "duplicate passage";
        adj[p.a].push_back(p.b);
        adj[p.b].push_back(p.a);
    }
    std::vector<char> seen(n, 0);
    std::vector<std::size_t> stack{0};
    seen[0] = 1;
    std::size_t reached = 0;
    while (!stack.empty()) {
        const auto c = stack.back();
        stack.pop_back();
        ++reached;
        for (auto nb : adj[c]) {
            if (!seen[nb]) {
                seen[nb] = 1;
                stack.push_back(nb);
            }
        }
    }
    // Connected with n - 1 edges: a tree, hence acyclic.
    EXPECT_EQ(reached, n);
}

/// 4-neighbour flood fill over free lattice points keyed by integer cell.
double flood_fraction(const WorldMap& map) {
    const double r = map.resolution();
    std::map<std::pair<long, long>, char> cells;
    for (const auto& p : map.free_points()) cells[{std::lround(p.x / r - 0.5), std::lround(p.y / r - 0.5)}] = 0;
    std::vector<std::pair<long, long>> stack{cells.begin()->first};
    cells.begin()->second = 1;
    std::size_t reached = 0;
    while (!stack.empty()) {
        const auto [x, y] = stack.back();
        stack.pop_back();
        ++reached;
        const std::pair<long, long> nbrs[4] = {{x + 1, y}, {x - 1, y}, {x, y + 1}, {x, y - 1}};
        for (const auto& nb : nbrs) {
            auto it = cells.find(nb);
            if (it != cells.end() && !it->second) {
                it->second = 1;
                stack.push_back(nb);
            }
        }
    }
    return static_cast<double>(reached) / static_cast<double>(cells.size());
}

double obstacle_fraction(const WorldMap& m) {
    return static_cast<double>(m.obstacle_points().size()) /
           static_cast<double>(m.obstacle_points().size() + m.free_points().size());
}

ScenarioSpec maze_spec(std::size_t cells, std::uint64_t seed) {
    ScenarioSpec s;
    s.kind = ScenarioKind::maze;
    s.cell_count = cells;
    s.seed = seed;
    return s;
}

} // namespace

TEST(Maze, TwoByTwoHasThreePassages) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) expect_spanning_tree(kruskal_maze(2, seed), 2);
}

TEST(Maze, CarveGraphIsSpanningTree) {
    for (std::size_t cells : {3, 10, 20}) {
        for (std::uint64_t seed = 0; seed < 30; ++seed) expect_spanning_tree(kruskal_maze(cells, seed), cells);
    }
}

TEST(Maze, RefinementKeepsTreeAndShortensFewerDeadEnds) {
    std::size_t plain_stubs = 0, refined_stubs = 0;
    auto stubs = [](const std::vector<MazePassage>& carved, std::size_t n) {
        std::vector<std::size_t> deg(n * n, 0);
        for (const auto& p : carved) ++deg[p.a], ++deg[p.b];
        std::size_t count = 0;
        for (const auto& p : carved) {
            if ((deg[p.a] == 1 && deg[p.b] >= 3) || (deg[p.b] == 1 && deg[p.a] >= 3)) ++count;
        }
        return count;
    };
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        plain_stubs += stubs(kruskal_maze(10, seed, 0), 10);
        const auto refined = kruskal_maze(10, seed);
        expect_spanning_tree(refined, 10);
        refined_stubs += stubs(refined, 10);
    }
    EXPECT_LT(refined_stubs, plain_stubs);
}

TEST(Maze, FreeSpaceFullyReachable) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const WorldMap m = gen_maze(maze_spec(10, seed));
        EXPECT_EQ(flood_fraction(m), 1.0) << seed;
    }
}

TEST(Maze, Deterministic) {
    EXPECT_EQ(kruskal_maze(10, 5), kruskal_maze(10, 5));
    EXPECT_NE(kruskal_maze(10, 5), kruskal_maze(10, 6));
    EXPECT_EQ(map_to_string(gen_maze(maze_spec(10, 5))), map_to_string(gen_maze(maze_spec(10, 5))));
}

TEST(Maze, ValidForFootprintsUpToHalfCorridor) {
    const WorldMap m = gen_maze(maze_spec(10, 1));
    for (double r : {0.25, 0.5, 1.0, 2.0}) {
        const auto rep = validate_map(m, r);
        EXPECT_TRUE(rep.valid) << r << "\n" << rep.to_text();
        EXPECT_EQ(rep.component_count, 1u);
    }
}

TEST(Maze, CorridorsHaveConstantWidth) {
    // Each maze cell's corridor square is fully open and the wall band between
    // two unconnected cells is fully blocked.
    const auto spec = maze_spec(5, 9);
    const WorldMap m = gen_maze(spec);
    const auto g = maze_geometry(spec);
    std::set<std::pair<long, long>> open;
    for (const auto& p : m.free_points()) open.insert({std::lround(p.x - 0.5), std::lround(p.y - 0.5)});
    EXPECT_EQ(g.corridor, 4u);
    const auto carved = kruskal_maze(5, 9);
    for (std::size_t id = 0; id < 25; ++id) {
        const long x0 = static_cast<long>((id % 5) * g.pitch + g.offset);
        const long y0 = static_cast<long>((id / 5) * g.pitch + g.offset);
        for (long dy = 0; dy < 4; ++dy) {
            for (long dx = 0; dx < 4; ++dx) EXPECT_TRUE(open.count({x0 + dx, y0 + dy}));
        }
        // Rows just above and below a corridor square stay walls unless carved.
        const bool up = std::any_of(carved.begin(), carved.end(), [&](auto p) { return p.a == id && p.b == id + 5; });
        if (!up && id / 5 + 1 < 5) {
            for (long dx = 0; dx < 4; ++dx) EXPECT_FALSE(open.count({x0 + dx, y0 + 4}));
        }
    }
}

TEST(Maze, RejectsBadSpecs) {
    auto s = maze_spec(1, 0);
    EXPECT_THROW(gen_maze(s), ScenarioError);
    s = maze_spec(10, 0);
    s.corridor_width = 12.0;
    EXPECT_THROW(gen_maze(s), ScenarioError);
    s.corridor_width = 1.5; // below twice the footprint diameter
    EXPECT_THROW(gen_maze(s), ScenarioError);
    s.kind = ScenarioKind::random_obstacle;
    EXPECT_THROW(gen_maze(s), ScenarioError);
}

TEST(RandomObstacle, DensityZeroHasOnlyMotifs) {
    ScenarioSpec s;
    s.obstacle_density = 0.0;
    s.seed = 2;
    const WorldMap m = gen_random_obstacle(s);
    EXPECT_GT(m.obstacle_points().size(), 0u);
    EXPECT_LT(obstacle_fraction(m), 0.15);
    EXPECT_EQ(flood_fraction(m), 1.0);
}

TEST(RandomObstacle, Deterministic) {
    ScenarioSpec s;
    s.seed = 77;
    EXPECT_EQ(map_to_string(gen_random_obstacle(s)), map_to_string(gen_random_obstacle(s)));
    ScenarioSpec t = s;
    t.seed = 78;
    EXPECT_NE(map_to_string(gen_random_obstacle(s)), map_to_string(gen_random_obstacle(t)));
}

TEST(RandomObstacle, HundredSeedsConnectedAndOnDensity) {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        ScenarioSpec s;
        s.seed = seed;
        s.obstacle_density = 0.2;
        const WorldMap m = gen_random_obstacle(s);
        ASSERT_EQ(flood_fraction(m), 1.0) << seed;
        ASSERT_NEAR(obstacle_fraction(m), 0.2, 0.05) << seed;
        ASSERT_TRUE(validate_map(m, s.footprint_radius).valid) << seed;
    }
}

TEST(RandomObstacle, UnreachableDensityFailsAfterRetries) {
    ScenarioSpec s;
    s.size = 20;
    s.obstacle_density = 0.49;
    try {
        gen_random_obstacle(s);
        FAIL();
    } catch (const ScenarioError& e) {
        EXPECT_NE(std::string(e.what()).find("unreachable"), std::string::npos);
    }
}

TEST(RandomObstacle, RejectsBadSpecs) {
    ScenarioSpec s;
    s.obstacle_density = 0.5;
    EXPECT_THROW(gen_random_obstacle(s), ScenarioError);
    s.obstacle_density = 0.1;
    s.size = -1;
    EXPECT_THROW(gen_random_obstacle(s), ScenarioError);
}

TEST(Validate, TwoDisjointRooms) {
    const WorldMap m = ascii_map({
        "#########",
        "#...#...#",
        "#...#...#",
        "#...#...#",
        "#########",
    });
    const auto rep = validate_map(m, 0.4);
    EXPECT_EQ(rep.component_count, 2u);
    EXPECT_FALSE(rep.valid);
}

TEST(Validate, ClearanceMustFitTheFootprint) {
    const WorldMap m = ascii_map({
        "#####",
        "#...#",
        "#...#",
        "#...#",
        "#####",
    });
    // Centre point is 2 m from the nearest wall point.
    EXPECT_TRUE(validate_map(m, 2.0).valid);
    EXPECT_FALSE(validate_map(m, 2.1).valid);
    EXPECT_DOUBLE_EQ(validate_map(m, 1.0).max_corridor_width, 4.0);
}

TEST(Ingest, FloorAndBoxClassification) {
    // Floor sampled everywhere at z = 0; a 2 m box with walls and lid at z = 1.
    std::vector<Vec3> cloud;
    for (int i = 0; i < 200; ++i) {
        for (int j = 0; j < 200; ++j) cloud.push_back({i * 0.05 + 0.01, j * 0.05 + 0.01, 0.0});
    }
    auto in_box = [](double x, double y) { return x >= 4.0 && x < 6.0 && y >= 4.0 && y < 6.0; };
    for (int i = 0; i < 40; ++i) {
        for (int j = 0; j < 40; ++j) {
            const double x = 4.0 + i * 0.05 + 0.01, y = 4.0 + j * 0.05 + 0.01;
            cloud.push_back({x, y, 1.0});
            if (i == 0 || j == 0 || i == 39 || j == 39) {
                for (double z = 0.1; z < 1.0; z += 0.1) cloud.push_back({x, y, z});
            }
        }
    }
    IngestOptions opt;
    opt.resolution = 0.1;
    opt.footprint_radius = 0.2;
    const WorldMap m = ingest_points(cloud, opt);
    std::size_t correct = 0, total = 0;
    for (const auto& p : m.free_points()) correct += !in_box(p.x, p.y), ++total;
    for (const auto& p : m.obstacle_points()) correct += in_box(p.x, p.y), ++total;
    EXPECT_EQ(total, 10000u);
    EXPECT_GE(static_cast<double>(correct) / static_cast<double>(total), 0.99);
    EXPECT_EQ(m.obstacle_points().size(), 400u);
}

TEST(Ingest, EmptyBandIsAnError) {
    std::vector<Vec3> cloud{{0, 0, 0}, {1, 1, 0.1}};
    IngestOptions opt;
    opt.z_lo = 5.0;
    opt.z_hi = 6.0;
    try {
        ingest_points(cloud, opt);
        FAIL();
    } catch (const ScenarioError& e) {
        EXPECT_NE(std::string(e.what()).find("empty result"), std::string::npos);
    }
}

TEST(Ingest, DownsamplingSeparatesSameClassPoints) {
    Rng rng(6);
    std::vector<Vec3> cloud;
    cloud.reserve(1'000'000);
    for (int k = 0; k < 1'000'000; ++k) {
        const double x = rng.uniform(0, 50), y = rng.uniform(0, 50);
        const bool pillar = std::fmod(x, 10.0) < 1.0 && std::fmod(y, 10.0) < 1.0;
        cloud.push_back({x, y, pillar ? rng.uniform(0, 2) : rng.uniform(0, 0.05)});
    }
    IngestOptions opt;
    opt.resolution = 0.5;
    const WorldMap m = ingest_points(cloud, opt);
    for (auto kind : {PointKind::free, PointKind::obstacle}) {
        const auto pts = m.points(kind);
        for (std::size_t i = 0; i < pts.size(); ++i) {
            const auto near = m.index(kind).query(pts[i], 0.25 - 1e-12);
            ASSERT_EQ(near.size(), 1u) << "point " << i;
        }
    }
    EXPECT_GT(m.obstacle_points().size(), 0u);
}

TEST(Ingest, ParsesTextCloud) {
    std::istringstream in("# comment\n0 0 0 extra attrs\n1.5 2 0.25\n\n");
    const auto pts = read_point_cloud(in);
    ASSERT_EQ(pts.size(), 2u);
    EXPECT_EQ(pts[1].y, 2.0);
    std::istringstream bad("1 2\n");
    EXPECT_THROW(read_point_cloud(bad), ScenarioError);
}
