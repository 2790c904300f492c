#include <gtest/gtest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "../tools/commands.hpp"

using namespace imc::cli;

namespace {

std::string sample(const std::string& name) { return std::string(IMC_SAMPLES_DIR) + "/" + name; }

struct Run {
  int code;
  std::string out, err;
};

template <typename Opt, typename Fn>
Run run(Fn fn, const Opt& opt) {
  std::ostringstream out, err;
  const int code = fn(opt, out, err);
  return {code, out.str(), err.str()};
}

bool contains(const std::string& hay, const std::string& needle) { return hay.find(needle) != std::string::npos; }

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("imc_cli_test_" + name)).string();
}

}  // namespace

TEST(Cli, Digest) {
  EXPECT_EQ(digest(""), "cbf29ce484222325");
  EXPECT_EQ(digest("a"), "af63dc4c8601ec8c");
}

TEST(Cli, AnalyzeBinary) {
  AnalyzeOptions opt;
  opt.spec = sample("binary.json");
  const auto r = run(cmd_analyze, opt);
  ASSERT_EQ(r.code, kSuccess) << r.err;
  EXPECT_TRUE(contains(r.out, "rho(T^1) = 0 (certified upper bound 0.5)\n")) << r.out;
  EXPECT_TRUE(contains(r.out, "verdict: PFLike(1)")) << r.out;
  EXPECT_TRUE(contains(r.out, "indicator:a: lower = 0.25 ")) << r.out;
  EXPECT_TRUE(contains(r.out, "upper = 0.75 ")) << r.out;
  EXPECT_TRUE(contains(r.out, "stationary: true")) << r.out;
  EXPECT_TRUE(contains(r.err, "wall-time:"));
  EXPECT_FALSE(contains(r.out, "wall-time"));
}

TEST(Cli, AnalyzeIdentityIsCertifiedNotPFLike) {
  AnalyzeOptions opt;
  opt.spec = sample("identity.json");
  const auto r = run(cmd_analyze, opt);
  ASSERT_EQ(r.code, kSuccess) << r.err;
  EXPECT_TRUE(contains(r.out, "verdict: NotPFLikeCertified")) << r.out;
  EXPECT_TRUE(contains(r.out, "n/a (not PF-like)")) << r.out;
}

TEST(Cli, AnalyzePrecise) {
  AnalyzeOptions opt;
  opt.spec = sample("precise.json");
  opt.gambles = {"1,0", "indicator:a,b"};
  const auto r = run(cmd_analyze, opt);
  ASSERT_EQ(r.code, kSuccess) << r.err;
  EXPECT_TRUE(contains(r.out, "rho(T^1) = 0.7")) << r.out;
  EXPECT_TRUE(contains(r.out, "exact: precise rows")) << r.out;
  // pi = (2/3, 1/3); pi(a) P(a,b) = 1/15 for the window gamble.
  EXPECT_TRUE(contains(r.out, "1,0: lower = 0.666666666")) << r.out;
  EXPECT_TRUE(contains(r.out, "indicator:a,b: lower = 0.0666666666")) << r.out;
  // The initial model (1/2, 1/2) is not the stationary one.
  EXPECT_TRUE(contains(r.out, "stationary: false")) << r.out;
}

TEST(Cli, AnalyzeGridModeAndBadInputs) {
  AnalyzeOptions opt;
  opt.spec = sample("interval3.json");
  opt.mode = "grid";
  opt.grid_samples = 50;
  EXPECT_EQ(run(cmd_analyze, opt).code, kSuccess);
  opt.mode = "nonsense";
  EXPECT_EQ(run(cmd_analyze, opt).code, kInputError);
  opt.mode = "indicators";
  opt.gambles = {"1,2"};  // wrong dimension for three states
  EXPECT_EQ(run(cmd_analyze, opt).code, kInputError);
  opt.gambles = {"indicator:zz"};
  EXPECT_EQ(run(cmd_analyze, opt).code, kInputError);
}

TEST(Cli, HittingBinary) {
  HittingOptionsCli opt;
  opt.spec = sample("binary.json");
  opt.target = "a";
  const auto r = run(cmd_hitting, opt);
  ASSERT_EQ(r.code, kSuccess) << r.err;
  EXPECT_TRUE(contains(r.out, "lower: 1.333333333333")) << r.out;
  EXPECT_TRUE(contains(r.out, "upper: 3.99999999") || contains(r.out, "upper: 4 ")) << r.out;
  EXPECT_TRUE(contains(r.out, "converged lower: 1 1")) << r.out;
}

TEST(Cli, HittingAbsorbingAndUnknownTarget) {
  HittingOptionsCli opt;
  opt.spec = sample("absorbing.json");
  opt.target = "t";
  const auto r = run(cmd_hitting, opt);
  ASSERT_EQ(r.code, kSuccess) << r.err;
  EXPECT_TRUE(contains(r.out, "lower: 1 1 1\n")) << r.out;
  EXPECT_TRUE(contains(r.out, "upper: 1 1 1\n")) << r.out;
  opt.target = "missing";
  EXPECT_EQ(run(cmd_hitting, opt).code, kInputError);
}

TEST(Cli, HittingIdentityIsInfinite) {
  HittingOptionsCli opt;
  opt.spec = sample("identity.json");
  opt.target = "a";
  const auto r = run(cmd_hitting, opt);
  ASSERT_EQ(r.code, kSuccess) << r.err;
  EXPECT_TRUE(contains(r.out, "lower: 1 inf inf\n")) << r.out;
}

TEST(Cli, SimulateDeterministic) {
  SimulateOptions opt;
  opt.spec = sample("binary.json");
  opt.gamble = "indicator:a";
  opt.n_paths = 20;
  opt.length = 500;
  opt.seed = 17;
  opt.out_csv = temp_path("sim1.csv");
  const auto a = run(cmd_simulate, opt);
  const std::string csv_a = slurp(opt.out_csv);
  opt.out_csv = temp_path("sim2.csv");
  const auto b = run(cmd_simulate, opt);
  const std::string csv_b = slurp(opt.out_csv);
  ASSERT_EQ(a.code, kSuccess) << a.err;
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(csv_a, csv_b);
  EXPECT_TRUE(contains(a.out, "threshold: 0.25 ")) << a.out;
  EXPECT_TRUE(contains(a.out, "fraction: 1 (20/20)")) << a.out;
  EXPECT_EQ(csv_a.rfind("path_index,n,running_average,threshold,pass\n", 0), 0u);

  opt.seed = 18;
  EXPECT_NE(run(cmd_simulate, opt).out, a.out);
  std::remove(temp_path("sim1.csv").c_str());
  std::remove(temp_path("sim2.csv").c_str());
}

TEST(Cli, SimulatePoliciesAndErrors) {
  SimulateOptions opt;
  opt.spec = sample("binary.json");
  opt.gamble = "indicator:a,a";
  opt.n_paths = 5;
  opt.length = 200;
  opt.require_fraction = 1.0;
  for (const char* p : {"adversarial", "random", "fixed:0", "fixed:1:0,1"}) {
    opt.policy = p;
    EXPECT_EQ(run(cmd_simulate, opt).code, kSuccess) << p;
  }
  opt.policy = "fixed:7";
  EXPECT_EQ(run(cmd_simulate, opt).code, kInputError);
  opt.policy = "greedy";
  EXPECT_EQ(run(cmd_simulate, opt).code, kInputError);
  opt.policy = "adversarial";
  opt.spec = sample("identity.json");
  opt.gamble = "indicator:a";
  EXPECT_EQ(run(cmd_simulate, opt).code, kInputError);  // not PF-like
}

TEST(Cli, SimulateRequireFails) {
  // delta < 0 is rejected; a threshold the averages cannot meet yields exit 1.
  SimulateOptions opt;
  opt.spec = sample("precise.json");
  opt.gamble = "1,0";
  opt.policy = "random";
  opt.n_paths = 10;
  opt.length = 20;
  opt.delta = 0.0;
  opt.require_fraction = 1.0;
  const auto r = run(cmd_simulate, opt);
  EXPECT_EQ(r.code, kViolation) << r.out;
  EXPECT_TRUE(contains(r.out, "result: FAIL"));
  opt.delta = -1;
  EXPECT_EQ(run(cmd_simulate, opt).code, kInputError);
}

TEST(Cli, VerifySuitesPass) {
  for (const char* suite : {"coherence", "identity", "oracle", "martingale"}) {
    VerifyOptions opt;
    opt.spec = sample("interval3.json");
    opt.suite = suite;
    opt.instances = 10;
    opt.seed = 3;
    const auto r = run(cmd_verify, opt);
    EXPECT_EQ(r.code, kSuccess) << suite << "\n" << r.out << r.err;
    EXPECT_TRUE(contains(r.out, "result: PASS")) << suite;
  }
}

TEST(Cli, InputErrorsExitTwo) {
  VerifyOptions opt;
  opt.spec = sample("binary.json");
  opt.suite = "everything";
  EXPECT_EQ(run(cmd_verify, opt).code, kInputError);
  opt.suite = "identity";
  opt.spec = sample("corrupted.json");
  const auto r = run(cmd_verify, opt);
  EXPECT_EQ(r.code, kInputError);
  EXPECT_TRUE(contains(r.err, "line ")) << r.err;
  opt.spec = sample("bad_mass.json");
  EXPECT_EQ(run(cmd_verify, opt).code, kInputError);
  opt.spec = sample("does_not_exist.json");
  EXPECT_EQ(run(cmd_verify, opt).code, kInputError);
}

TEST(Cli, DigestTracksInputs) {
  AnalyzeOptions a;
  a.spec = sample("binary.json");
  AnalyzeOptions b = a;
  b.tol = 1e-8;
  auto digest_line = [](const std::string& out) {
    const auto at = out.find("inputs-digest: ");
    return out.substr(at, out.find('\n', at) - at);
  };
  const auto ra = run(cmd_analyze, a), rb = run(cmd_analyze, b), rc = run(cmd_analyze, a);
  EXPECT_NE(digest_line(ra.out), digest_line(rb.out));
  EXPECT_EQ(digest_line(ra.out), digest_line(rc.out));
}

#ifdef IMC_TOOL_PATH
namespace {
int exit_code(const std::string& args) {
  const std::string cmd = std::string("\"") + IMC_TOOL_PATH + "\" " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}
}  // namespace

TEST(CliBinary, ExitCodes) {
  EXPECT_EQ(exit_code("analyze " + sample("binary.json")), 0);
  EXPECT_EQ(exit_code("analyze " + sample("corrupted.json")), 2);
  EXPECT_EQ(exit_code("frobnicate"), 2);
  EXPECT_EQ(exit_code("simulate " + sample("binary.json")), 2);  // missing --gamble
  EXPECT_EQ(exit_code("--help"), 0);
  EXPECT_EQ(exit_code("simulate " + sample("precise.json") +
                      " --gamble 1,0 --policy random --paths 10 --length 20 --delta 0 --require 1"),
            1);
}

TEST(CliBinary, SeedFromEnvironment) {
  const std::string out1 = temp_path("env1.txt"), out2 = temp_path("env2.txt"), out3 = temp_path("env3.txt");
  const std::string base = std::string("\"") + IMC_TOOL_PATH + "\" ";
  const std::string args = "simulate " + sample("binary.json") + " --gamble indicator:a --paths 5 --length 100";
  ASSERT_EQ(std::system(("IMC_SEED=9 " + base + args + " > " + out1 + " 2>/dev/null").c_str()), 0);
  ASSERT_EQ(std::system((base + "--seed 9 " + args + " > " + out2 + " 2>/dev/null").c_str()), 0);
  ASSERT_EQ(std::system((base + "--seed 10 " + args + " > " + out3 + " 2>/dev/null").c_str()), 0);
  EXPECT_EQ(slurp(out1), slurp(out2));
  EXPECT_NE(slurp(out1), slurp(out3));
  // The global option is also accepted after the subcommand.
  ASSERT_EQ(std::system((base + args + " --seed 10 > " + out2 + " 2>/dev/null").c_str()), 0);
  EXPECT_EQ(slurp(out2), slurp(out3));
  EXPECT_TRUE(contains(slurp(out1), "seed: 9\n"));
  for (const auto& p : {out1, out2, out3}) std::remove(p.c_str());
}
#endif
