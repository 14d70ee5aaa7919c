#include <gtest/gtest.h>
#include <sys/wait.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

fs::path work() {
  static const fs::path p = [] {
    auto d = fs::temp_directory_path() / "polsyn-cli-test";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Run run(const std::string& args) {
  const auto o = work() / "stdout.txt", e = work() / "stderr.txt";
  const std::string cmd = "cd " + work().string() + " && " + POLSYN_CLI + " " + args + " >" + o.string() + " 2>" + e.string();
  const int st = std::system(cmd.c_str());
  return {WIFEXITED(st) ? WEXITSTATUS(st) : -1, slurp(o), slurp(e)};
}

const std::string kLayouts = std::string(POLSYN_SOURCE_DIR) + "/layouts";

}  // namespace

TEST(Cli, LayoutGenIsSeeded) {
  ASSERT_EQ(run("layout-gen --seed 5 --out a.json").code, 0);
  ASSERT_EQ(run("layout-gen --seed 5 --out b.json").code, 0);
  ASSERT_EQ(run("layout-gen --seed 6 --out c.json").code, 0);
  EXPECT_EQ(slurp(work() / "a.json"), slurp(work() / "b.json"));
  EXPECT_NE(slurp(work() / "a.json"), slurp(work() / "c.json"));
  const auto j = json::parse(slurp(work() / "a.json"));
  EXPECT_EQ(j.at("width"), 10);
  EXPECT_EQ(j.at("cells").size(), 10u);
  const auto m = json::parse(slurp(work() / "a.json.manifest.json"));
  EXPECT_EQ(m.at("format"), "polsyn-manifest");
  EXPECT_EQ(m.at("subcommand"), "layout-gen");
  EXPECT_EQ(m.at("seed"), 5);
}

TEST(Cli, CheckUnreachableTarget) {
  const auto r = run("check --layout " + kLayouts + "/lake-unreachable.json --formula 'P[0.5,1](F target)'");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = json::parse(r.out);
  ASSERT_FALSE(j.at("results").empty());
  EXPECT_FALSE(j.at("results")[0].at("satisfied").get<bool>());
  EXPECT_EQ(j.at("results")[0].at("probability").get<double>(), 0.0);
  EXPECT_TRUE(j.contains("manifest"));
}

TEST(Cli, CheckValueIteration) {
  const auto r = run("check --layout " + kLayouts + "/lake-10x10.json --horizon 50");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = json::parse(r.out);
  const double v = j.at("results")[0].at("value").get<double>();
  EXPECT_GE(v, 0.0);
  EXPECT_LE(v, 1.0);
}

TEST(Cli, EtaReportsAllowedSet) {
  const auto r = run("eta --env pacman --layout " + kLayouts + "/pacman-mini.json --horizon 6 --threshold 0.9");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = json::parse(r.out);
  EXPECT_EQ(j.at("horizon"), 6);
  const auto eta = j.at("eta").get<std::vector<double>>();
  const double mx = j.at("max").get<double>();
  for (int a : j.at("allowed")) EXPECT_GE(eta[a], 0.9 * mx - 1e-12);
  for (int a : j.at("legal")) {
    const bool in = std::find(j.at("allowed").begin(), j.at("allowed").end(), a) != j.at("allowed").end();
    if (!in) EXPECT_LT(eta[a], 0.9 * mx);
  }
}

TEST(Cli, EvaluateAndReplayAreByteIdentical) {
  const std::string args = "evaluate --layout " + kLayouts + "/lake-10x10.json --policy uniform --n 30 --seed 7";
  ASSERT_EQ(run(args + " --out e1.json").code, 0);
  ASSERT_EQ(run(args + " --out e2.json").code, 0);
  EXPECT_EQ(slurp(work() / "e1.json"), slurp(work() / "e2.json"));
  ASSERT_EQ(run("replay e1.json.manifest.json --out e3.json").code, 0);
  EXPECT_EQ(slurp(work() / "e1.json"), slurp(work() / "e3.json"));
  const auto j = json::parse(slurp(work() / "e1.json"));
  EXPECT_EQ(j.at("n"), 30);
  EXPECT_EQ(j.at("wins").get<int>() + j.at("losses").get<int>() + j.at("draws").get<int>(), 30);
}

TEST(Cli, PlayTraceIsDeterministicWithoutLatency) {
  const std::string args = "play --env pacman --layout " + kLayouts +
                           "/pacman-mini.json --policy mcts --advice exact --horizon 15 --seed 3 --no-latency";
  ASSERT_EQ(run(args + " --trace t1.jsonl --out p1.json").code, 0);
  ASSERT_EQ(run(args + " --trace t2.jsonl --out p2.json").code, 0);
  const auto t1 = slurp(work() / "t1.jsonl");
  EXPECT_EQ(t1, slurp(work() / "t2.jsonl"));
  EXPECT_EQ(slurp(work() / "p1.json"), slurp(work() / "p2.json"));
  std::istringstream in(t1);
  std::string line;
  int steps = 0;
  while (std::getline(in, line)) {
    const auto j = json::parse(line);
    EXPECT_FALSE(j.contains("latency_ms"));
    for (const char* k : {"step", "state", "legal", "allowed", "action", "reward"}) EXPECT_TRUE(j.contains(k)) << k;
    ++steps;
  }
  EXPECT_GE(steps, 1);
  EXPECT_LE(steps, 15);
}

TEST(Cli, DatasetInitWritesRecords) {
  ASSERT_EQ(run("dataset-init --layout " + kLayouts + "/lake-10x10.json --n 15 --seed 2 --out ds.jsonl").code, 0);
  std::ifstream in(work() / "ds.jsonl");
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    const auto j = json::parse(line);
    EXPECT_EQ(j.at("iter"), 0);
    ++n;
  }
  EXPECT_EQ(n, 15);
  EXPECT_EQ(run("dataset-init --layout " + kLayouts + "/lake-10x10.json --n 15").code, 2);
}

TEST(Cli, DaggerProducesArtifacts) {
  const std::string trainer = std::string(POLSYN_TRAINER) + " --dataset {dataset} --config {config} --out {out}";
  const auto r = run("dagger --layout " + kLayouts + "/lake-10x10.json --trainer '" + trainer +
                     "' --train-config '{\"epochs\":5}' --initial-size 20 --paths 5 --iterations 1 --eval-episodes 10"
                     " --seed 1 --work-dir dg --out dg.json");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(work() / "dg" / "dataset.jsonl"));
  EXPECT_TRUE(fs::exists(work() / "dg" / "final" / "network.json"));
  const auto j = json::parse(slurp(work() / "dg.json"));
  EXPECT_EQ(j.at("iterations").size(), 1u);
}

TEST(Cli, ErrorsAreJsonWithExitCodes) {
  auto r = run("evaluate --no-such-flag");
  EXPECT_EQ(r.code, 2);
  r = run("check --layout " + kLayouts + "/lake-10x10.json --formula 'P[0.5](F target)'");
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(json::parse(r.err).at("error").at("type"), "formula");
  r = run("check --layout /nonexistent.json --formula 'P[0,1](F target)'");
  EXPECT_EQ(r.code, 1);
  EXPECT_TRUE(json::parse(r.err).at("error").contains("message"));
  r = run("evaluate --threshold 1.5");
  EXPECT_EQ(r.code, 2);
  r = run("play --policy neural");
  EXPECT_NE(r.code, 0);
}
