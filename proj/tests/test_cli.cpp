#include <gtest/gtest.h>

#include <sys/wait.h>

#include <fstream>
#include <sstream>

#include "support.hpp"

using namespace ptexplore;

namespace {

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = std::filesystem::temp_directory_path() /
               ("ptexplore_cli_" + std::to_string(::getpid()) + "_" +
                ::testing::UnitTest::GetInstance()->current_test_info()->name());
        std::filesystem::create_directories(dir_);
    }
    void TearDown() override { std::filesystem::remove_all(dir_); }

    std::string path(const std::string& name) const { return (dir_ / name).string(); }

    /// Runs the CLI with stdout captured to `out`; returns the exit status.
    int run(const std::string& args, std::string* out = nullptr) const {
        const std::string capture = path("stdout.txt");
        const std::string cmd = std::string(PTEXPLORE_CLI) + " " + args + " > " + capture + " 2> " + path("stderr.txt");
        const int status = std::system(cmd.c_str());
        if (out) {
            std::ifstream in(capture);
            std::stringstream ss;
            ss << in.rdbuf();
            *out = ss.str();
        }
        return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    }

    std::filesystem::path dir_;
};

} // namespace

TEST_F(Cli, GeneratedMazeValidates) {
    ASSERT_EQ(run("gen maze --seed 3 --cells 6 --corridor-width 4 -o " + path("maze.mxm")), 0);
    std::string report;
    EXPECT_EQ(run("validate " + path("maze.mxm") + " --footprint 0.5", &report), 0);
    EXPECT_NE(report.find("valid true"), std::string::npos) << report;
    // Same seed, same bytes.
    ASSERT_EQ(run("gen maze --seed 3 --cells 6 --corridor-width 4 -o " + path("again.mxm")), 0);
    EXPECT_EQ(map_to_string(load_map(path("maze.mxm"))), map_to_string(load_map(path("again.mxm"))));
}

TEST_F(Cli, GeneratedRandomObstacleValidates) {
    ASSERT_EQ(run("gen random-obstacle --seed 5 --size 50 --density 0.2 -o " + path("ro.mxm")), 0);
    EXPECT_EQ(run("validate " + path("ro.mxm")), 0);
}

TEST_F(Cli, DisjointRoomsFailValidation) {
    save_map(ptexplore::testing::ascii_map({
                 "#########",
                 "#...#...#",
                 "#...#...#",
                 "#########",
             }),
             path("rooms.mxm"));
    std::string report;
    EXPECT_EQ(run("validate " + path("rooms.mxm") + " --footprint 0.4", &report), 1);
    EXPECT_NE(report.find("valid false"), std::string::npos) << report;
    EXPECT_NE(report.find("components 2"), std::string::npos) << report;
}

TEST_F(Cli, IngestWritesAMap) {
    {
        std::ofstream out(path("cloud.xyz"));
        for (int i = 0; i < 40; ++i) {
            for (int j = 0; j < 40; ++j) out << i * 0.1 + 0.05 << ' ' << j * 0.1 + 0.05 << " 0\n";
        }
        for (int i = 0; i < 10; ++i) out << 2.05 << ' ' << i * 0.1 + 0.05 << " 1.0\n";
    }
    ASSERT_EQ(run("ingest --input " + path("cloud.xyz") + " --resolution 0.1 --footprint 0.1 -o " + path("c.mxm")), 0);
    const WorldMap m = load_map(path("c.mxm"));
    EXPECT_EQ(m.obstacle_points().size(), 10u);
    EXPECT_EQ(m.free_points().size(), 1590u);
    EXPECT_EQ(run("ingest --input " + path("cloud.xyz") + " --z-band 5,6 -o " + path("none.mxm")), 2);
}

TEST_F(Cli, EpisodeRecordReplays) {
    {
        std::ofstream out(path("env.json"));
        out << R"({"map": {"size": 40, "density": 0.1, "seed": 3}, "run": {"horizon": 30}})";
    }
    std::string live, replayed;
    ASSERT_EQ(run("episode --config " + path("env.json") + " --seed 2 --record " + path("rec.jsonl"), &live), 0);
    ASSERT_EQ(run("replay " + path("rec.jsonl"), &replayed), 0);
    EXPECT_EQ(live, replayed);
    EXPECT_NE(live.find("\"er\""), std::string::npos);
}

TEST_F(Cli, BenchIsDiffableWithoutTiming) {
    {
        std::ofstream out(path("env.json"));
        out << R"({"map": {"size": 40, "density": 0.1, "seed": 3}, "run": {"horizon": 20}})";
    }
    const std::string args = "bench --config " + path("env.json") + " --episodes 2 --maps 2 --policy random --no-timing";
    std::string a, b;
    ASSERT_EQ(run(args, &a), 0);
    ASSERT_EQ(run(args, &b), 0);
    EXPECT_EQ(a, b);
    EXPECT_NE(a.find("map random_obstacle_3"), std::string::npos) << a;
    EXPECT_NE(a.find("map random_obstacle_4"), std::string::npos) << a;
    EXPECT_NE(a.find("overall_er"), std::string::npos);
}

TEST_F(Cli, ServeOverStdio) {
    std::string frames = encode_frame({1, "hello", nlohmann::json::object()});
    frames += encode_frame({2, "close", nlohmann::json::object()});
    {
        std::ofstream out(path("in.bin"), std::ios::binary);
        out << frames;
    }
    ASSERT_EQ(run("serve --stdio < " + path("in.bin")), 0);
    std::ifstream in(path("stdout.txt"), std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    FrameDecoder dec;
    dec.feed(ss.str());
    std::vector<ProtocolMessage> replies;
    while (auto body = dec.next_body()) replies.push_back(parse_body(*body));
    ASSERT_EQ(replies.size(), 2u);
    EXPECT_EQ(replies[0].payload.at("version"), 1);
    EXPECT_EQ(replies[1].verb, "close");
}

TEST_F(Cli, BadArgumentsFail) {
    EXPECT_NE(run(""), 0);
    EXPECT_NE(run("frobnicate"), 0);
    EXPECT_NE(run("gen cave -o " + path("x.mxm")), 0);
    EXPECT_NE(run("gen maze"), 0);
    EXPECT_EQ(run("validate " + path("missing.mxm")), 2);
    EXPECT_EQ(run("gen maze --cells 1 -o " + path("x.mxm")), 2);
    EXPECT_EQ(run("serve"), 2);
    EXPECT_NE(run("serve --stdio --bind 127.0.0.1:0"), 0);
}
