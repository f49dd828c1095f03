#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cli.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::string kData = RSOPF_DATA_DIR;

struct Result {
    int code = 0;
    std::string out, err;
};

Result run(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    Result r;
    r.code = rsopf::cli::run(args, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::size_t line_count(const std::string& s) {
    std::size_t n = 0;
    for (char c : s) n += c == '\n';
    return n;
}

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("rsopf_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string out(const std::string& sub) const { return (dir_ / sub).string(); }

    /// Writes a two-bus feeder; `v_max` is the squared upper voltage bound of bus 1.
    std::string two_bus(double peak, double solar, double v_max) const {
        json j;
        j["units"] = "per_unit";
        j["buses"] = json::array({json{{"id", 0}},
                                  json{{"id", 1}, {"parent", 0}, {"r", 0.01}, {"x", 0.01}, {"v_min", 0.81},
                                       {"v_max", v_max}, {"peak", peak}, {"solar_cap", solar}}});
        const std::string path = (dir_ / "two_bus.json").string();
        std::ofstream(path) << j.dump();
        return path;
    }

    fs::path dir_;
};

}  // namespace

TEST_F(CliTest, HelpAndUsageErrors) {
    EXPECT_EQ(run({"--help"}).code, rsopf::cli::kExitOk);
    EXPECT_EQ(run({}).code, rsopf::cli::kExitUsage);
    EXPECT_EQ(run({"frobnicate"}).code, rsopf::cli::kExitUsage);
    EXPECT_EQ(run({"solve", "--tol", "abc"}).code, rsopf::cli::kExitUsage);
    EXPECT_EQ(run({"solve", "--tol", "1"}).code, rsopf::cli::kExitUsage);
}

TEST_F(CliTest, MissingOrBrokenInputsAreDataErrors) {
    EXPECT_EQ(run({"certify"}).code, rsopf::cli::kExitUsage);
    const Result r = run({"certify", "--network", out("absent.json"), "--out", out("o")});
    EXPECT_EQ(r.code, rsopf::cli::kExitUsage);
    EXPECT_FALSE(r.err.empty());
    std::ofstream(out("bad.json")) << "{ not json";
    EXPECT_EQ(run({"certify", "--network", out("bad.json"), "--out", out("o")}).code, rsopf::cli::kExitUsage);
}

TEST_F(CliTest, TreeGenWithUnitBranchingHasOneNodePerStage) {
    const Result r = run({"tree-gen", "--seed", "3", "--out", out("t")});
    ASSERT_EQ(r.code, 0) << r.err;
    const std::string csv = slurp(dir_ / "t" / "tree.csv");
    // header plus one row per stage of the nine-stage daily grid
    EXPECT_EQ(line_count(csv), 1u + 9u);
    const json m = json::parse(slurp(dir_ / "t" / "manifest.json"));
    EXPECT_EQ(m["command"], "tree-gen");
    EXPECT_EQ(m["seed"], 3);
    EXPECT_EQ(m["outputs"]["tree.csv"].get<std::string>().size(), 64u);
}

TEST_F(CliTest, TreeGenIsByteIdenticalForEqualSeeds) {
    const std::vector<std::string> base{"tree-gen", "--sde-params", kData + "/sde_params.json", "--seed", "11"};
    auto args = base;
    args.insert(args.end(), {"--out", out("a")});
    ASSERT_EQ(run(args).code, 0);
    args = base;
    args.insert(args.end(), {"--out", out("b")});
    ASSERT_EQ(run(args).code, 0);
    for (const char* f : {"tree.json", "tree.csv", "manifest.json"})
        EXPECT_EQ(slurp(dir_ / "a" / f), slurp(dir_ / "b" / f)) << f;
    ASSERT_EQ(run({"tree-gen", "--sde-params", kData + "/sde_params.json", "--seed", "12", "--out", out("c")}).code, 0);
    EXPECT_NE(slurp(dir_ / "a" / "tree.json"), slurp(dir_ / "c" / "tree.json"));
}

TEST_F(CliTest, CertifyPureLoadFeederPasses) {
    const std::string net = two_bus(0.5, 0.3, 1.1);
    const Result r = run({"certify", "--network", net, "--solar-total", "0", "--out", out("c")});
    ASSERT_EQ(r.code, 0) << r.err;
    const json c = json::parse(slurp(dir_ / "c" / "certificate.json"));
    EXPECT_EQ(c["verdict"], "pass");
    EXPECT_NE(r.out.find("verdict pass"), std::string::npos);
}

TEST_F(CliTest, CertifyReportsFailureWithExitZero) {
    const std::string net = two_bus(0.1, 5.0, 1.01);
    const Result r = run({"certify", "--network", net, "--out", out("c")});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(json::parse(slurp(dir_ / "c" / "certificate.json"))["verdict"], "fail");
}

TEST_F(CliTest, GapIsZeroOnExactInstance) {
    const std::string net = two_bus(0.5, 0.0, 1.1);
    const Result r = run({"gap", "--network", net, "--tol", "1e-9", "--out", out("g")});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("epsilon = 0\n"), std::string::npos) << r.out;
    const json m = json::parse(slurp(dir_ / "g" / "manifest.json"));
    EXPECT_EQ(m["results"]["epsilon"], "0");
}

TEST_F(CliTest, CapacityInfeasibleExitsTwo) {
    // bus 1 has no load, so its flat voltage of 1 already exceeds v_max
    const std::string net = two_bus(0.0, 0.0, 0.99);
    const Result r = run({"capacity", "--network", net, "--pattern", "bus:1", "--out", out("k")});
    EXPECT_EQ(r.code, rsopf::cli::kExitInfeasible) << r.err;
}

TEST_F(CliTest, CapacityToyThreshold) {
    const std::string net = two_bus(1.0, 0.0, 1.0);
    const Result r = run({"capacity", "--network", net, "--pattern", "bus:1", "--out", out("k")});
    ASSERT_EQ(r.code, 0) << r.err;
    const json m = json::parse(slurp(dir_ / "k" / "manifest.json"));
    EXPECT_NEAR(m["results"]["threshold_pu"].get<double>(), 0.647183, 1e-6);
    EXPECT_EQ(run({"capacity", "--network", net, "--pattern", "nowhere", "--out", out("k")}).code,
              rsopf::cli::kExitUsage);
}

TEST_F(CliTest, SolveRecoverAuditRoundTrip) {
    const std::vector<std::string> common{"--network", kData + "/feeder.json", "--sde-params",
                                          kData + "/sde_params.json", "--profile", kData + "/profile.csv",
                                          "--seed", "5"};
    auto args = std::vector<std::string>{"recover"};
    args.insert(args.end(), common.begin(), common.end());
    args.insert(args.end(), {"--out", out("r")});
    const Result rec = run(args);
    ASSERT_EQ(rec.code, 0) << rec.err;
    EXPECT_NE(rec.out.find("classification feasible"), std::string::npos) << rec.out;
    for (const char* f : {"solution.csv", "tree.csv", "series_losses.csv", "series_p0.csv", "manifest.json",
                          "iterations.csv", "audit.json"})
        EXPECT_TRUE(fs::exists(dir_ / "r" / f)) << f;

    const std::string p0 = slurp(dir_ / "r" / "series_p0.csv");
    EXPECT_EQ(p0.substr(0, p0.find('\n')), "stage,tau,min,p10,p25,p50,p75,p90,max,mean");
    EXPECT_EQ(line_count(p0), 1u + 9u);

    args = {"audit"};
    args.insert(args.end(), common.begin(), common.end());
    args.insert(args.end(), {"--solution", out("r/solution.csv"), "--tol", "1e-6", "--out", out("a")});
    const Result aud = run(args);
    ASSERT_EQ(aud.code, 0) << aud.err;
    EXPECT_NE(aud.out.find("classification feasible"), std::string::npos) << aud.out;

    // same seed, same bytes
    args = {"recover"};
    args.insert(args.end(), common.begin(), common.end());
    args.insert(args.end(), {"--out", out("r2")});
    ASSERT_EQ(run(args).code, 0);
    for (const char* f : {"solution.csv", "series_losses.csv", "manifest.json"})
        EXPECT_EQ(slurp(dir_ / "r" / f), slurp(dir_ / "r2" / f)) << f;
}

TEST_F(CliTest, SolveRelaxedWritesManifest) {
    const Result r = run({"solve", "--network", kData + "/feeder.json", "--profile", kData + "/profile.csv",
                          "--out", out("s")});
    ASSERT_EQ(r.code, 0) << r.err;
    const json m = json::parse(slurp(dir_ / "s" / "manifest.json"));
    EXPECT_EQ(m["command"], "solve");
    EXPECT_FALSE(m["restricted"].get<bool>());
    EXPECT_EQ(m["inputs"]["network"].get<std::string>().size(), 64u);
    EXPECT_TRUE(m["results"].contains("objective"));
}

TEST_F(CliTest, InfeasibleSolveExitsTwo) {
    // tight current limit cannot carry the load
    json j;
    j["units"] = "per_unit";
    j["buses"] = json::array({json{{"id", 0}},
                              json{{"id", 1}, {"parent", 0}, {"r", 0.01}, {"x", 0.01}, {"v_min", 0.81},
                                   {"v_max", 1.21}, {"peak", 1.0}, {"i_max", 0.01}}});
    std::ofstream(out("weak.json")) << j.dump();
    const Result r = run({"solve", "--network", out("weak.json"), "--out", out("s")});
    EXPECT_EQ(r.code, rsopf::cli::kExitInfeasible) << r.err;
}
