#include <gtest/gtest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include <nlohmann/json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Result {
  int code = -1;
  std::string out;  // stdout and stderr together
};

std::string q(const std::string& s) { return "'" + s + "'"; }

std::string data(const std::string& rel) { return (fs::path(DTLMON_DATA_DIR) / rel).string(); }

Result run(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " " + q(DTLMON_CLI_PATH) + " " + args + " 2>&1";
  Result r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  char buf[4096];
  while (std::size_t n = fread(buf, 1, sizeof buf, p)) r.out.append(buf, n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  fs::path d = fs::path(DTLMON_WORK_DIR) / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

const std::string kTiger = "--model " + q(data("tiger/model.json"));
const std::string kTigerTrace = " --trace " + q(data("tiger/trace.json"));

} // namespace

TEST(Cli, CheckMatchesOracle) {
  auto r = run("check " + kTiger + " --formula " + q(data("tiger/formula.txt")) + kTigerTrace + " --oracle");
  ASSERT_EQ(r.code, 0) << r.out;
  auto j = json::parse(r.out);
  EXPECT_TRUE(j["feasible"].get<bool>());
  EXPECT_NEAR(j["probability"].get<double>(), 0.85 * 0.85 / (0.85 * 0.85 + 0.15 * 0.15), 1e-12);
  EXPECT_NEAR(j["oracle_probability"].get<double>(), j["probability"].get<double>(), 1e-12);
}

TEST(Cli, UniversalSetHasProbabilityOne) {
  auto r = run("check " + kTiger + " --expr " + q("in(closed) | in(escaped) | in(eaten)") + kTigerTrace);
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NEAR(json::parse(r.out)["probability"].get<double>(), 1.0, 1e-12);
}

TEST(Cli, SyntaxErrorReportsPosition) {
  auto r = run("check " + kTiger + " --expr " + q("in(closed) U (") + kTigerTrace);
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("error"), std::string::npos);
  EXPECT_NE(r.out.find("column"), std::string::npos) << r.out;
}

TEST(Cli, NegatedTemporalOperatorRejected) {
  auto r = run("check " + kTiger + " --expr " + q("!F in(escaped)") + kTigerTrace);
  EXPECT_EQ(r.code, 1) << r.out;
}

TEST(Cli, UnknownSetRejected) {
  auto r = run("check " + kTiger + " --expr " + q("F in(nowhere)") + kTigerTrace);
  EXPECT_EQ(r.code, 1) << r.out;
}

TEST(Cli, StrictInfeasibleExitsTwo) {
  const std::string f = q("X X X X X X in(closed)");
  auto lax = run("check " + kTiger + " --expr " + f + kTigerTrace);
  ASSERT_EQ(lax.code, 0) << lax.out;
  EXPECT_FALSE(json::parse(lax.out)["feasible"].get<bool>());
  EXPECT_EQ(json::parse(lax.out)["probability"].get<double>(), 0.0);
  EXPECT_EQ(run("check " + kTiger + " --expr " + f + kTigerTrace + " --strict").code, 2);
}

TEST(Cli, CompileWritesDotAndJson) {
  auto dir = scratch("compile");
  auto r = run("compile " + kTiger + " --formula " + q(data("tiger/formula.txt")) + " --dot " +
               q((dir / "a.dot").string()) + " --json " + q((dir / "a.json").string()));
  ASSERT_EQ(r.code, 0) << r.out;
  auto summary = json::parse(r.out);
  EXPECT_GE(summary["states"].get<int>(), 2);
  EXPECT_NE(slurp(dir / "a.dot").find("digraph"), std::string::npos);
  auto table = json::parse(slurp(dir / "a.json"));
  EXPECT_EQ(table["states"], summary["states"]);
}

TEST(Cli, SimulatedTracesRoundTripThroughCheck) {
  auto dir = scratch("roundtrip");
  auto r = run("simulate " + kTiger + " --formula " + q(data("tiger/formula.txt")) +
               " --policy cycle:listen,listen,open_left --trials 5 --horizon 3 --seed 3 --emit-traces --out " +
               q(dir.string()));
  ASSERT_EQ(r.code, 0) << r.out;
  std::istringstream csv(slurp(dir / "trials.csv"));
  std::string line;
  std::getline(csv, line);
  EXPECT_EQ(line, "trial,seed,probability,entropy_bits,success");
  for (int i = 0; i < 5; ++i) {
    ASSERT_TRUE(std::getline(csv, line));
    const double p = std::stod(line.substr(line.find(',', line.find(',') + 1) + 1));
    char name[32];
    std::snprintf(name, sizeof name, "trial_%05d.json", i);
    auto c = run("check " + kTiger + " --formula " + q(data("tiger/formula.txt")) + " --trace " +
                 q((dir / "traces" / name).string()));
    ASSERT_EQ(c.code, 0) << c.out;
    EXPECT_NEAR(json::parse(c.out)["probability"].get<double>(), p, 1e-12);
  }
}

TEST(Cli, SameSeedSameBytes) {
  auto a = scratch("seed_a"), b = scratch("seed_b");
  const std::string args = "simulate --casestudy rescue --policy timeshare --trials 30 --seed 5 --out ";
  ASSERT_EQ(run(args + q(a.string())).code, 0);
  ASSERT_EQ(run(args + q(b.string()) + " --threads 3").code, 0);
  EXPECT_EQ(slurp(a / "trials.csv"), slurp(b / "trials.csv"));
  EXPECT_EQ(slurp(a / "summary.json"), slurp(b / "summary.json"));
}

TEST(Cli, SeedFromEnvironment) {
  auto a = scratch("env_a"), b = scratch("env_b"), c = scratch("env_c");
  const std::string args = "simulate --casestudy rescue --policy entropy-cutoff --trials 20 --out ";
  ASSERT_EQ(run(args + q(a.string()), "DTLMON_SEED=42").code, 0);
  ASSERT_EQ(run(args + q(b.string()) + " --seed 42").code, 0);
  ASSERT_EQ(run(args + q(c.string()) + " --seed 43").code, 0);
  EXPECT_EQ(slurp(a / "trials.csv"), slurp(b / "trials.csv"));
  EXPECT_NE(slurp(a / "trials.csv"), slurp(c / "trials.csv"));
}

TEST(Cli, RescueConfigFile) {
  auto dir = scratch("rescue_config");
  auto r = run("casestudy rescue --config " + q(data("rescue/config.json")) + " --trials 20 --seed 9 --out " +
               q(dir.string()));
  ASSERT_EQ(r.code, 0) << r.out;
  auto s = json::parse(slurp(dir / "summary.json"));
  EXPECT_TRUE(s.contains("time_share"));
  EXPECT_TRUE(s.contains("entropy_cutoff"));
  EXPECT_TRUE(fs::exists(dir / "time_share.csv"));
}

TEST(Cli, MhtCaseStudy) {
  auto dir = scratch("mht");
  auto r = run("casestudy mht --out " + q(dir.string()));
  ASSERT_EQ(r.code, 0) << r.out;
  auto rep = json::parse(slurp(dir / "report.json"));
  EXPECT_NEAR(rep["report"]["probability"].get<double>(), 1.0, 1e-12);
}

TEST(Cli, MissingModelFails) {
  EXPECT_NE(run("check --model /nonexistent.json --expr " + q("F in(a)") + kTigerTrace).code, 0);
}
