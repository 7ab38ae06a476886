// End-to-end checks of the command line: artifacts, exit codes, determinism.

#include "waistlab/pipeline.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;
using namespace waistlab;

namespace {

std::string cli() {
  const char* p = std::getenv("WAISTLAB_CLI");
  return p ? p : "";
}
std::string configs() {
  const char* p = std::getenv("WAISTLAB_CONFIGS");
  return p ? p : "";
}

fs::path scratch(const std::string& name) {
  const fs::path d = fs::path(::testing::TempDir()) / ("waistlab_" + name);
  fs::remove_all(d);
  return d;
}

int run(const std::string& args) {
  const int status = std::system((cli() + " " + args + " > /dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string first_line(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  return line;
}

class Cli : public ::testing::Test {
protected:
  void SetUp() override {
    if (cli().empty())
      GTEST_SKIP() << "WAISTLAB_CLI not set";
  }
};

} // namespace

TEST_F(Cli, ProfileInfo) {
  const auto d = scratch("profile");
  ASSERT_EQ(run("--output-dir " + d.string() + " profile-info --samples 5"), 0);
  EXPECT_EQ(slurp(d / "profile_info.csv").substr(0, 10), "z,r,E,G,K\n");
  EXPECT_EQ(slurp(d / "profile_info.csv").find('\r'), std::string::npos);
}

TEST_F(Cli, GeodesicHeader) {
  const auto d = scratch("geodesic");
  ASSERT_EQ(run("--output-dir " + d.string() + " geodesic --z 0.2 --psi 0.3 --horizon 1"), 0);
  EXPECT_EQ(first_line(d / "geodesic.csv"), "s,z,theta_lift,psi,clairaut_drift");
}

TEST_F(Cli, BusemannIsDeterministic) {
  const auto a = scratch("bus_a"), b = scratch("bus_b");
  ASSERT_EQ(run("--output-dir " + a.string() + " busemann --samples 3 --horizon 20"), 0);
  ASSERT_EQ(run("--output-dir " + b.string() + " --jobs 2 busemann --samples 3 --horizon 20"), 0);
  EXPECT_EQ(first_line(a / "busemann.csv"), "z,value_quad,value_limit,abs_diff");
  EXPECT_EQ(slurp(a / "busemann.csv"), slurp(b / "busemann.csv"));
}

TEST_F(Cli, BusemannQuadOnlyLeavesLimitEmpty) {
  const auto d = scratch("bus_q");
  ASSERT_EQ(run("--output-dir " + d.string() + " busemann --method quad --samples 2"), 0);
  EXPECT_NE(slurp(d / "busemann.csv").find("nan"), std::string::npos);
}

TEST_F(Cli, CatCheckIsDeterministic) {
  const auto a = scratch("cat_a"), b = scratch("cat_b");
  ASSERT_EQ(run("--output-dir " + a.string() + " cat-check --trials 3 --seed 12345"), 0);
  ASSERT_EQ(run("--output-dir " + b.string() + " --jobs 3 cat-check --trials 3 --seed 12345"), 0);
  EXPECT_EQ(first_line(a / "cat_check.csv"), "trial,alpha1,alpha2,margin,gb_residual1,gb_residual2,pass");
  EXPECT_EQ(slurp(a / "cat_check.csv"), slurp(b / "cat_check.csv"));
}

TEST_F(Cli, QuickConfigModules) {
  const auto d = scratch("quick");
  const std::string base = "--config " + configs() + "/quick.json --output-dir " + d.string();
  ASSERT_EQ(run(base + " weakkam"), 0);
  EXPECT_EQ(first_line(d / "weakkam.csv"), "theta_index,z_index,u_minus,u_plus,barrier");
  const auto wk = nlohmann::json::parse(slurp(d / "weakkam.json"));
  for (const char* key : {"c0", "iterations", "residual", "aubry_rows"})
    EXPECT_TRUE(wk.contains(key)) << key;

  ASSERT_EQ(run(base + " diffusion --lambda 4"), 0);
  const auto df = nlohmann::json::parse(slurp(d / "diffusion.json"));
  for (const char* key : {"lambda", "Lambda_plus", "Lambda_minus", "residuals"})
    EXPECT_TRUE(df.contains(key)) << key;
  EXPECT_EQ(first_line(d / "diffusion_density.csv"), "z_index,theta_index,density");

  ASSERT_EQ(run(base + " ldp"), 0);
  EXPECT_EQ(first_line(d / "ldp.csv"), "band_zlo,band_zhi,inf_dist,lambda,measure,rate_seq");
  EXPECT_TRUE(fs::exists(d / "ldp_rate.dat"));
  EXPECT_TRUE(nlohmann::json::parse(slurp(d / "ldp.json")).contains("bands"));
}

TEST_F(Cli, RunOnlyBusemannSkipsEigenSolves) {
  const auto d = scratch("only");
  ASSERT_EQ(run("--output-dir " + d.string() + " --only busemann run"), 0);
  EXPECT_TRUE(fs::exists(d / "busemann.csv"));
  EXPECT_FALSE(fs::exists(d / "diffusion.json"));
  EXPECT_FALSE(fs::exists(d / "ldp.json"));
  const std::string summary = slurp(d / "summary.txt");
  EXPECT_NE(summary.find("criterion 1: PASS  [busemann / power_law_fit]"), std::string::npos);
  EXPECT_NE(summary.find("criterion 9: SKIPPED"), std::string::npos);
  EXPECT_NE(summary.find("busemann.quadrature_vs_limit.max_abs_diff"), std::string::npos);
  const std::string json1 = slurp(d / "summary.json");
  ASSERT_EQ(run("--output-dir " + d.string() + " --only busemann run"), 0);
  EXPECT_EQ(json1, slurp(d / "summary.json"));
}

TEST_F(Cli, ErrorsAndExitCodes) {
  const auto d = scratch("errors");
  fs::create_directories(d);
  {
    std::ofstream out(d / "odd.json");
    out << R"({"profile": {"k": 3}})";
  }
  EXPECT_EQ(run("--config " + (d / "odd.json").string() + " profile-info"), 2);
  EXPECT_EQ(run("--output-dir " + d.string() + " --only nothing run"), 2);
  EXPECT_EQ(run("--only busemann profile-info"), 2);
  EXPECT_EQ(run("no-such-command"), 2);
  EXPECT_EQ(run(""), 2);
}

TEST(Pipeline, ParseOnly) {
  EXPECT_EQ(parse_only("busemann,ldp"), (std::set<std::string>{"busemann", "ldp"}));
  EXPECT_TRUE(parse_only("").empty());
  EXPECT_THROW(parse_only("busemann,bogus"), ValidationError);
}

TEST(Pipeline, ModuleErrorIsSerialized) {
  // z_max = 0.3 is shorter than the comparison's s window, so that stage fails
  auto cfg = parse_config(R"({"profile": {"z_max": 0.3}, "bands": [{"z_lo": 0.0, "z_hi": 0.05}, {"z_lo": 0.1, "z_hi": 0.15}]})");
  cfg.output_dir = scratch("module_error").string();
  RunOptions opt;
  opt.only = {"comparison"};
  std::ostringstream log;
  const auto res = run_pipeline(cfg, opt, log);
  EXPECT_EQ(res.exit_code, 3);
  EXPECT_NE(res.error.find("sampling window"), std::string::npos);
  const std::string summary = slurp(fs::path(cfg.output_dir) / "summary.txt");
  EXPECT_NE(summary.find("module error: "), std::string::npos);
  EXPECT_EQ(nlohmann::json::parse(slurp(fs::path(cfg.output_dir) / "summary.json"))["exit_code"], 3);
}
