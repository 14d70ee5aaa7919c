#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "envs.hpp"
#include "polsyn/dagger.hpp"

using namespace polsyn;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("polsyn-dagger-" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

const char* kLake = R"({"width":6,"height":6,"cells":["######","#S...#","#.O..#","#..O.#","#...T#","######"]})";

std::string trainer_command() {
  return std::string(POLSYN_TRAINER) + " --dataset {dataset} --config {config} --out {out}";
}

Dataset lake_dataset(const app::LakeEnv& env, std::size_t n, std::uint64_t seed) {
  Dataset ds;
  Rng rng(seed);
  const ExpertScorer<LakeState> expert = [&env](const LakeState& s) { return env.expert_scores(s, 0); };
  for (std::size_t i = 0; ds.size() < n && i < 20 * n; ++i) {
    const auto s = env.random_state(0, rng);
    auto r = make_record(s, expert, env.encoder(), env.codec(), 0);
    if (r) ds.add(env.key(s), std::move(*r));
  }
  return ds;
}

// Writes network.json/.bin and test_vectors.json for `net` into dir.
void write_trainer_output(const nn::Network& net, const fs::path& dir, float perturb = 0.0f) {
  fs::create_directories(dir);
  net.save((dir / "network.json").string());
  json vs = json::array();
  Rng rng(1);
  for (int i = 0; i < 4; ++i) {
    nn::Tensor x(net.input_shape());
    for (auto& v : x.data) v = rng.bernoulli(0.3) ? 1.0f : 0.0f;
    auto y = net.infer(x);
    for (auto& v : y) v += perturb;
    vs.push_back({{"input", {{"shape", x.shape}, {"data", x.data}}}, {"output", y}});
  }
  std::ofstream(dir / "test_vectors.json") << json{{"vectors", vs}}.dump();
}

}  // namespace

TEST(LocalNormalize, Rescales) {
  EXPECT_EQ(local_normalize({2.0, 4.0, 3.0}), (std::vector<double>{0.0, 1.0, 0.5}));
  EXPECT_EQ(local_normalize({0.3, 0.3}), (std::vector<double>{0.5, 0.5}));
  EXPECT_EQ(local_normalize({-1.0, 1.0, 1.0, -1.0}), (std::vector<double>{0.0, 1.0, 1.0, 0.0}));
  EXPECT_THROW(local_normalize({}), std::invalid_argument);
}

TEST(Distance, Metrics) {
  const std::vector<double> a{0.0, 0.5, 1.0}, b{0.3, 0.1, 1.0};
  EXPECT_NEAR(distance(Metric::linf, a, b), 0.4, 1e-15);
  EXPECT_NEAR(distance(Metric::l1, a, b), 0.7, 1e-15);
  EXPECT_NEAR(distance(Metric::l2, a, b), 0.5, 1e-15);
  EXPECT_EQ(parse_metric("l2"), Metric::l2);
  EXPECT_EQ(metric_name(Metric::linf), "linf");
  EXPECT_THROW(parse_metric("cosine"), std::invalid_argument);
  EXPECT_THROW(distance(Metric::l1, a, {1.0}), std::invalid_argument);
}

TEST(Dataset, DedupAndJsonLines) {
  app::LakeEnv env({FrozenLakeLayout::parse(kLake)});
  auto ds = lake_dataset(env, 10, 3);
  ASSERT_EQ(ds.size(), 10u);
  const auto first_key = ds.keys()[0];
  DatasetRecord dup = ds.records()[0];
  EXPECT_FALSE(ds.add(first_key, dup));
  EXPECT_EQ(ds.size(), 10u);
  EXPECT_NE(ds.find(first_key), nullptr);

  const auto dir = scratch("jsonl");
  const std::string path = (dir / "d.jsonl").string();
  ds.save(path);
  std::ifstream in(path);
  std::string line;
  std::size_t lines = 0;
  while (std::getline(in, line)) {
    const auto j = json::parse(line);
    for (const char* k : {"env", "state", "scores", "iter", "d", "provenance", "input"}) EXPECT_TRUE(j.contains(k)) << k;
    EXPECT_EQ(j.at("env"), "frozen-lake");
    EXPECT_EQ(j.at("provenance"), "initial");
    EXPECT_TRUE(j.at("d").is_null());
    EXPECT_EQ(j.at("input").at("shape"), (std::vector<std::size_t>{4, 6, 6}));
    EXPECT_EQ(j.at("input").at("data").size(), 144u);
    double lo = 1, hi = 0;
    for (double v : j.at("scores")) lo = std::min(lo, v), hi = std::max(hi, v);
    EXPECT_TRUE((lo == 0.0 && hi == 1.0) || (lo == 0.5 && hi == 0.5));
    ++lines;
  }
  EXPECT_EQ(lines, 10u);
  const auto back = Dataset::load(path);
  ASSERT_EQ(back.size(), ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) EXPECT_EQ(back.records()[i].to_json(), ds.records()[i].to_json());
}

TEST(Trainer, PlaceholdersAndConfig) {
  EXPECT_EQ(substitute_placeholders("t {dataset} {config} {out} {dataset}", "D", "C", "O"), "t D C O D");
  const auto c = default_train_config({4, 6, 6}, 4, 9);
  EXPECT_EQ(c.at("format"), "polsyn-train-config");
  EXPECT_EQ(c.at("split"), (std::vector<int>{5, 2, 3}));
  EXPECT_EQ(c.at("seed"), 9);
  EXPECT_EQ(c.at("output_dim"), 4);
}

TEST(Trainer, StubContract) {
  app::LakeEnv env({FrozenLakeLayout::parse(kLake)});
  const auto ds = lake_dataset(env, 6, 1);
  const auto net = nn::random_network({4, 6, 6}, 2, {4}, 3);
  const auto dir = scratch("stub");
  write_trainer_output(net, dir / "good");
  write_trainer_output(net, dir / "bad", 1e-3f);
  TrainerSpec spec{"cp " + (dir / "good").string() + "/* {out}/ && test -s {dataset} && test -s {config}",
                   default_train_config({4, 6, 6}, 4, 0)};
  EXPECT_EQ(run_trainer(spec, ds, dir / "w1"), net);
  // dataset and config stay on disk
  EXPECT_EQ(Dataset::load((dir / "w1" / "dataset.jsonl").string()).size(), 6u);
  EXPECT_TRUE(fs::exists(dir / "w1" / "train_config.json"));

  spec.command = "cp " + (dir / "bad").string() + "/* {out}/";
  EXPECT_THROW(run_trainer(spec, ds, dir / "w2"), TrainerError);
  spec.command = "exit 3";
  EXPECT_THROW(run_trainer(spec, ds, dir / "w3"), TrainerError);
  spec.command = "true";
  EXPECT_THROW(run_trainer(spec, ds, dir / "w4"), TrainerError);
  spec.command = "";
  EXPECT_THROW(run_trainer(spec, ds, dir / "w5"), TrainerError);
}

TEST(Trainer, ReferenceTrainerFitsAndReports) {
  app::LakeEnv env({FrozenLakeLayout::parse(kLake)});
  const auto ds = lake_dataset(env, 12, 2);
  auto cfg = default_train_config({4, 6, 6}, 4, 5);
  cfg["epochs"] = 30;
  const auto dir = scratch("ref");
  const auto net = run_trainer({trainer_command(), cfg}, ds, dir);
  EXPECT_EQ(net.output_dim(), 4u);
  std::ifstream mi(dir / "weights" / "metrics.json");
  const auto metrics = json::parse(mi);
  EXPECT_EQ(metrics.at("split").at("train").get<int>() + metrics.at("split").at("val").get<int>() +
                metrics.at("split").at("test").get<int>(),
            12);
  // same seed, same weights
  const auto again = run_trainer({trainer_command(), cfg}, ds, scratch("ref2"));
  EXPECT_EQ(again, net);
}

TEST(SharpDagger, AppendedRecordsPassTheAudit) {
  app::LakeEnv env({FrozenLakeLayout::parse(kLake)});
  DaggerConfig cfg;
  cfg.epsilon = 0.2;
  cfg.horizon = 30;
  cfg.paths_per_iteration = 8;
  cfg.max_iterations = 2;
  cfg.eval_episodes = 20;
  cfg.eval_horizon = 30;
  cfg.plateau_patience = 10;
  cfg.seed = 4;
  auto tc = default_train_config({4, 6, 6}, 4, 4);
  tc["epochs"] = 10;
  cfg.trainer = {trainer_command(), tc};
  const auto dir = scratch("run");
  const ExpertScorer<LakeState> expert = [&env](const LakeState& s) { return env.expert_scores(s, 0); };
  const auto res = sharp_dagger<FrozenLake>(
      env.model(), env.encoder(), expert, env.codec(), [&env](std::size_t i, Rng& r) { return env.init(i, r); },
      lake_dataset(env, 5, 8), cfg, dir);
  ASSERT_EQ(res.iterations.size(), 2u);
  std::size_t appended = 0;
  for (const auto& rec : res.dataset.records()) {
    if (rec.iter == 0) {
      EXPECT_FALSE(rec.d.has_value());
      continue;
    }
    ++appended;
    ASSERT_TRUE(rec.d.has_value());
    const auto prev = nn::Network::load((dir / ("iter-" + std::to_string(rec.iter - 1)) / "weights" / "network.json").string());
    const auto s = env.parse_state(rec.state);
    const auto out = prev.infer(env.encoder()(s));
    const std::vector<double> o(out.begin(), out.end());
    const auto f = local_normalize(env.expert_scores(s, 0));
    EXPECT_EQ(f, rec.scores);
    EXPECT_NEAR(distance(Metric::linf, o, f), *rec.d, 1e-12);
    EXPECT_GE(*rec.d, cfg.epsilon);
  }
  EXPECT_EQ(appended, res.iterations[0].appended + res.iterations[1].appended);
  EXPECT_EQ(res.iterations[1].dataset_size, res.dataset.size());

  DaggerConfig bad = cfg;
  bad.epsilon = -1;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
}
