// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Result {
    int code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& p)
{
    std::ifstream is(p, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

class Cli : public ::testing::Test {
  protected:
    void SetUp() override
    {
        root_ = fs::temp_directory_path() /
                ("pam_cli_test_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(root_);
        fs::create_directories(root_);
    }

    void TearDown() override { fs::remove_all(root_); }

    Result run(const std::string& args, const std::string& env = "")
    {
        const auto out = root_ / "stdout.txt";
        const auto err = root_ / "stderr.txt";
        const std::string cmd =
            env + " " + std::string(PAM_CLI_PATH) + " " + args + " >" + out.string() + " 2>" + err.string();
        const int status = std::system(cmd.c_str());
        Result r;
        r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
        r.out = slurp(out);
        r.err = slurp(err);
        return r;
    }

    fs::path dir(const std::string& name) const { return root_ / name; }

    fs::path root_;
};

json read_json(const fs::path& p) { return json::parse(slurp(p)); }

std::size_t line_count(const fs::path& p)
{
    std::ifstream is(p);
    std::string line;
    std::size_t n = 0;
    while (std::getline(is, line)) {
        ++n;
    }
    return n;
}

} // namespace

TEST_F(Cli, SampleWrites201LinesReproducibly)
{
    ASSERT_EQ(run("sample --seed 5 --override sample.radius=100 --out " + dir("a").string()).code, 0);
    ASSERT_EQ(run("sample --seed 5 --override sample.radius=100 --out " + dir("b").string()).code, 0);
    EXPECT_EQ(line_count(dir("a") / "field.txt"), 201u);
    EXPECT_EQ(slurp(dir("a") / "field.txt"), slurp(dir("b") / "field.txt"));
    EXPECT_EQ(slurp(dir("a") / "summary.json"), slurp(dir("b") / "summary.json"));
    const auto rec = read_json(dir("a") / "run.json");
    EXPECT_EQ(rec["config_hash"], read_json(dir("b") / "run.json")["config_hash"]);
}

TEST_F(Cli, RunRecordListsEveryFile)
{
    ASSERT_EQ(run("solve --override grid.box=6 --override grid.times=0.5,1 --override solve.dump_weights=true --out " +
                  dir("s").string())
                  .code,
              0);
    const auto rec = read_json(dir("s") / "run.json");
    std::set<std::string> listed;
    for (const auto& f : rec["files"]) {
        listed.insert(f["path"].get<std::string>());
    }
    std::set<std::string> present;
    for (const auto& e : fs::directory_iterator(dir("s"))) {
        if (e.path().filename() != "run.json") {
            present.insert(e.path().filename().string());
        }
    }
    EXPECT_EQ(listed, present);
    EXPECT_TRUE(listed.count("weights_1.bin"));
    EXPECT_EQ(line_count(dir("s") / "trajectory.jsonl"), 2u);
}

TEST_F(Cli, SparseCountWithinThreeSigma)
{
    const auto r = run("sample --seed 3 --override sample.mode=sparse --override sample.radius=1000000 "
                       "--override sample.threshold=5 --out " +
                       dir("sp").string());
    ASSERT_EQ(r.code, 0) << r.err;
    const auto s = read_json(dir("sp") / "summary.json");
    const double n = 2e6 + 1;
    const double p = std::exp(-5.0);
    const double mean = n * p;
    const double sigma = std::sqrt(n * p * (1 - p));
    EXPECT_NEAR(s["count"].get<double>(), mean, 3 * sigma);
    EXPECT_EQ(line_count(dir("sp") / "exceedances.txt"), s["count"].get<std::size_t>());
}

TEST_F(Cli, SolveZeroPotential)
{
    ASSERT_EQ(run("solve --override model.zero_potential=true --override grid.times=1,5 --out " + dir("z").string()).code,
              0);
    const auto s = read_json(dir("z") / "summary.json");
    for (const auto& row : s["times"]) {
        EXPECT_LT(std::abs(row["L_t"].get<double>()), 1e-12);
    }
}

TEST_F(Cli, SolveSingleSiteClosedForm)
{
    const auto r = run("solve --override grid.box=0 --override grid.times=0.5,3 --out " + dir("one").string());
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("closed form"), std::string::npos);
    const auto s = read_json(dir("one") / "summary.json");
    EXPECT_LE(s["closed_form"]["max_error"].get<double>(), 1e-9);
}

TEST_F(Cli, SolveOracleResidual)
{
    const auto r = run("solve --seed 4 --override grid.box=6 --override grid.times=0.5,1,2 "
                       "--override solve.oracle_check=true --out " +
                       dir("o").string());
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_LE(read_json(dir("o") / "summary.json")["oracle_residual"].get<double>(), 1e-6);
    EXPECT_EQ(run("solve --override grid.box=200 --override solve.oracle_check=true --out " + dir("o2").string()).code,
              2);
}

TEST_F(Cli, VariationalCsv)
{
    const auto r = run("variational --override model.dimension=2 --override grid.times=1e3,1e4 "
                       "--override variational.seeds=3 --out " +
                       dir("v").string());
    ASSERT_EQ(r.code, 0) << r.err;
    std::ifstream is(dir("v") / "variational.csv");
    std::string header;
    std::getline(is, header);
    EXPECT_EQ(header, "seed,t,N_lower,N_upper,psi1,psi2,gap,x1_0,x1_1,searchRadius");
    EXPECT_EQ(line_count(dir("v") / "variational.csv"), 7u);
    EXPECT_EQ(line_count(dir("v") / "variational.jsonl"), 6u);
}

TEST_F(Cli, EnsembleThreadsGiveIdenticalData)
{
    const std::string base = "ensemble location --seed 11 --override grid.times=1e5 --override ensemble.seeds=60";
    ASSERT_EQ(run(base + " --threads 1 --out " + dir("t1").string()).code, 0);
    ASSERT_EQ(run(base + " --threads 8 --out " + dir("t8").string()).code, 0);
    for (const auto& e : fs::directory_iterator(dir("t1"))) {
        const auto name = e.path().filename();
        if (name == "run.json") {
            continue;
        }
        EXPECT_EQ(slurp(e.path()), slurp(dir("t8") / name)) << name;
    }
    EXPECT_EQ(line_count(dir("t1") / "samples.jsonl"), 60u);
    EXPECT_TRUE(fs::exists(dir("t1") / "ecdf_t0_coord0.csv"));
}

TEST_F(Cli, ReportOnEmptyDirectory)
{
    fs::create_directories(dir("empty"));
    const auto r = run("report " + dir("empty").string());
    ASSERT_EQ(r.code, 0) << r.err;
    const auto rep = read_json(dir("empty") / "report" / "report.json");
    EXPECT_EQ(rep["count"], 0);
    EXPECT_EQ(run("report " + dir("missing").string()).code, 2);
}

TEST_F(Cli, ReportAggregatesEnsembleRows)
{
    ASSERT_EQ(run("ensemble disconnected --override model.dimension=2 --override ensemble.seeds=20 --out " +
                  dir("runs/d").string())
                  .code,
              0);
    ASSERT_EQ(run("ensemble gap --override grid.times=1e4 --override ensemble.seeds=30 --out " +
                  dir("runs/g").string())
                  .code,
              0);
    ASSERT_EQ(run("report " + dir("runs").string() + " --out " + dir("rep").string()).code, 0);
    const auto rep = read_json(dir("rep") / "report.json");
    ASSERT_EQ(rep["count"], 2);
    EXPECT_EQ(rep["rows"][0]["key"], "top_sites_disconnected");
    EXPECT_EQ(rep["rows"][1]["key"], "psi_gap_exponential");
    EXPECT_EQ(rep["rows"][1]["source"], "g");
}

TEST_F(Cli, OutputRootFromEnvironment)
{
    const auto r = run("sample --override sample.radius=3", "PAM_OUTPUT_ROOT=" + dir("env").string());
    ASSERT_EQ(r.code, 0) << r.err;
    std::size_t runs = 0;
    for (const auto& e : fs::directory_iterator(dir("env"))) {
        EXPECT_EQ(e.path().filename().string().rfind("sample-", 0), 0u);
        EXPECT_TRUE(fs::exists(e.path() / "run.json"));
        ++runs;
    }
    EXPECT_EQ(runs, 1u);
}

TEST_F(Cli, MalformedConfigNamesField)
{
    {
        std::ofstream os(dir("bad.ini"));
        os << "[grid]\ntimes = 5, 2\n";
    }
    const auto r = run("solve --config " + dir("bad.ini").string() + " --out " + dir("x").string());
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("grid.times"), std::string::npos);
    EXPECT_EQ(run("solve --config " + dir("nonexistent.ini").string()).code, 2);
    EXPECT_EQ(run("frobnicate").code, 2);
    EXPECT_EQ(run("sample --override sample.radius=-1 --out " + dir("y").string()).code, 2);
}

TEST_F(Cli, ExitCodes)
{
    EXPECT_EQ(run("sample --override sample.radius=100000000000 --out " + dir("cap").string()).code, 3);
    EXPECT_EQ(run("sample --override limits.memory_bytes=64 --out " + dir("cap2").string()).code, 3);
    const auto r = run("variational --override grid.times=1e4 --override variational.psi_level=1000 "
                       "--override variational.max_retries=0 --out " +
                       dir("guard").string());
    EXPECT_EQ(r.code, 4);
    EXPECT_NE(r.err.find("guard"), std::string::npos);
    EXPECT_EQ(run("ensemble gumbel --override ensemble.proxy=solver --override grid.times=500 --out " +
                  dir("dom").string())
                  .code,
              2);
}
