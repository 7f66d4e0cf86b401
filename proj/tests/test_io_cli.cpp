#include "mseregion/io.hpp"
#include "cli_runner.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace mseregion;
using namespace mseregion::testing;

namespace {

const char* counterexample_json = R"({"n": 2, "k": 3, "entries": [[[1,0],[0,0],[1,0]], [[0,0],[1,0],[1,0]]]})";
const char* pair_json = R"({"n": 2, "k": 2, "entries": [[[1,0],[0.3,-0.2]], [[0,0.5],[1,0]]]})";

} // namespace

TEST(ChannelJson, RoundTrip)
{
    std::mt19937_64 rng(61);
    const ChannelSet h = random_channels(3, 4, rng);
    const ChannelSet back = io::channels_from_json(io::parse_json(io::channels_to_json(h).dump(), "memory"));
    EXPECT_TRUE(back.matrix() == h.matrix());
}

TEST(ChannelJson, ParsesCounterexample)
{
    const ChannelSet h = io::channels_from_json(io::parse_json(counterexample_json, "memory"));
    EXPECT_EQ(h.antennas(), 2);
    EXPECT_EQ(h.users(), 3);
    EXPECT_EQ(h.matrix()(1, 2), Complex(1.0, 0.0));
}

TEST(ChannelJson, RejectsMalformedInput)
{
    EXPECT_THROW(io::parse_json("{not json", "memory"), InputError);
    for (const char* bad : {R"([1,2])", R"({"n": 2, "k": 1})", R"({"n": 2, "k": 1, "entries": [[[1,0]]]})",
                            R"({"n": 1, "k": 2, "entries": [[[1,0],[1]]]})",
                            R"({"n": 1, "k": 1, "entries": [[["a",0]]]})",
                            R"({"n": 1, "k": 1, "entries": [[[0,0]]]})"}) {
        EXPECT_THROW(io::channels_from_json(io::parse_json(bad, "memory")), InputError) << bad;
    }
}

TEST(Csv, BoundaryLayout)
{
    const CVector h1 = (CVector(2) << 1.0, 0.0).finished();
    const CVector h2 = (CVector(2) << 0.0, 1.0).finished();
    const auto rows = io::parse_csv(io::boundary_csv(boundary_sweep(h1, h2, SystemConfig(1.0, 10.0), 11)));
    ASSERT_EQ(rows.size(), 12u);
    ASSERT_EQ(rows[0].size(), 10u);
    EXPECT_EQ(rows[0][0], "p");
    EXPECT_EQ(rows[0][9], "g_double_prime");
    for (std::size_t i = 1; i < rows.size(); ++i) {
        ASSERT_EQ(rows[i].size(), 10u);
        const bool endpoint = i == 1 || i + 1 == rows.size();
        EXPECT_EQ(rows[i][3].empty(), endpoint);
    }
}

TEST(Csv, RegionRowsReevaluateExactly)
{
    const ChannelSet h = io::channels_from_json(io::parse_json(counterexample_json, "memory"));
    const SystemConfig cfg(1.0, 10.0);
    const auto set = sample_region(h, cfg, 7, SampleMode::Grid, 0);
    const auto rows = io::parse_csv(io::region_csv(set, 3));
    ASSERT_EQ(rows.size(), set.points.size() + 1);
    EXPECT_EQ(rows[0], (std::vector<std::string>{"p_1", "p_2", "p_3", "eps_1", "eps_2", "eps_3"}));
    for (std::size_t i = 1; i < rows.size(); ++i) {
        RVector p(3);
        RVector eps(3);
        for (int k = 0; k < 3; ++k) {
            p[k] = std::stod(rows[i][static_cast<std::size_t>(k)]);
            eps[k] = std::stod(rows[i][static_cast<std::size_t>(3 + k)]);
        }
        EXPECT_LE((dense_mse(h.matrix(), p, 1.0) - eps).cwiseAbs().maxCoeff(), 1e-9);
    }
}

TEST(FormatReal, RoundTripsExactly)
{
    std::mt19937_64 rng(62);
    for (int i = 0; i < 1000; ++i) {
        const double v = uniform(-1e3, 1e3, rng) * std::pow(10.0, uniform(-8.0, 8.0, rng));
        EXPECT_EQ(std::stod(io::format_real(v)), v);
    }
}

class Cli : public ::testing::Test {
protected:
    ScratchDir dir{"cli"};

    std::string channels(const char* text)
    {
        const std::string path = dir.file("channels.json");
        spit(path, text);
        return path;
    }
};

TEST_F(Cli, BoundaryOrthogonalEndpoints)
{
    const CliRun run = run_cli(dir, "boundary --h1 1,0 --h2 0,1 --samples 11 --out " + dir.file("b.csv"));
    ASSERT_EQ(run.exit_code, 0) << run.err;
    const auto rows = io::parse_csv(slurp(dir.file("b.csv")));
    ASSERT_EQ(rows.size(), 12u);
    EXPECT_EQ(std::stod(rows[1][1]), 1.0);
    EXPECT_NEAR(std::stod(rows[1][2]), 1.0 / 11.0, 1e-15);
    EXPECT_NEAR(std::stod(rows[11][1]), 1.0 / 11.0, 1e-15);
    EXPECT_EQ(std::stod(rows[11][2]), 1.0);
    const std::string manifest = slurp(dir.file("b.csv.manifest.json"));
    EXPECT_NE(manifest.find("sigma2_assumed"), std::string::npos);
    EXPECT_NE(run.err.find("StrictlyConvex"), std::string::npos);
}

TEST_F(Cli, BoundaryReportsAffineForColinear)
{
    const CliRun run = run_cli(dir, "boundary --h1 1,1i --h2 2,2i --out " + dir.file("b.csv"));
    ASSERT_EQ(run.exit_code, 0) << run.err;
    EXPECT_NE(run.err.find("Affine"), std::string::npos);
}

TEST_F(Cli, BoundaryRejectsThreeUsers)
{
    EXPECT_EQ(run_cli(dir, "boundary --channels " + channels(counterexample_json)).exit_code, 2);
}

TEST_F(Cli, MalformedJsonIsInputError)
{
    EXPECT_EQ(run_cli(dir, "wsmse --channels " + channels("{oops") + " --weights [1,1]").exit_code, 2);
}

TEST_F(Cli, UnknownSubcommandIsInputError)
{
    EXPECT_EQ(run_cli(dir, "frobnicate").exit_code, 2);
    EXPECT_EQ(run_cli(dir, "region --channels x --grid 3 --random 4").exit_code, 2);
}

TEST_F(Cli, WsmseFindsTwoStationaryPoints)
{
    const CliRun run = run_cli(dir, "wsmse --channels " + channels(counterexample_json) + " --weights [0.22,0.54,0.24]");
    ASSERT_EQ(run.exit_code, 0) << run.err;
    const auto doc = nlohmann::json::parse(run.out);
    EXPECT_EQ(doc["cluster_count"], 2);
}

TEST_F(Cli, SegmentExitCodes)
{
    const std::string path = channels(counterexample_json);
    EXPECT_EQ(run_cli(dir, "segment --channels " + path + " --a [1,1,1] --b [1,1,1] --steps 3").exit_code, 0);
    EXPECT_EQ(run_cli(dir, "segment --channels " + path + " --a [0.1,0.1,0.1] --b [1,1,1] --steps 3").exit_code, 2);
}

TEST_F(Cli, RegionGridRowCount)
{
    const CliRun run = run_cli(dir, "region --channels " + channels(counterexample_json) + " --grid 10 --out " +
                                        dir.file("r.csv"));
    ASSERT_EQ(run.exit_code, 0) << run.err;
    EXPECT_EQ(io::parse_csv(slurp(dir.file("r.csv"))).size(), lattice_point_count(3, 10) + 1);
}

TEST_F(Cli, SeedFallsBackToEnvironment)
{
    const std::string args = "region --channels " + channels(pair_json) + " --random 20";
    const CliRun flag = run_cli(dir, args + " --seed 5");
    const CliRun env = run_cli(dir, args, "MSEREGION_SEED=5");
    const CliRun other = run_cli(dir, args, "MSEREGION_SEED=6");
    ASSERT_EQ(flag.exit_code, 0) << flag.err;
    EXPECT_EQ(flag.out, env.out);
    EXPECT_NE(flag.out, other.out);
    EXPECT_EQ(run_cli(dir, args, "MSEREGION_SEED=abc").exit_code, 2);
}

TEST_F(Cli, ConvexityScanCertifies)
{
    const CliRun run = run_cli(dir, "convexity-scan --trials 20 --dim 3 --grid 21 --seed 4");
    ASSERT_EQ(run.exit_code, 0) << run.err;
    const auto doc = nlohmann::json::parse(run.out);
    EXPECT_EQ(doc["manifest"]["seed"], 4);
}
