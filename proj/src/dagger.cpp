#include "polsyn/dagger.hpp"

#include <algorithm>
#include <cstdlib>
#include <sstream>
#include <sys/wait.h>

namespace polsyn {

std::string metric_name(Metric m) {
  switch (m) {
    case Metric::linf: return "linf";
    case Metric::l1: return "l1";
    case Metric::l2: return "l2";
  }
  return "linf";
}

Metric parse_metric(const std::string& s) {
  if (s == "linf" || s == "Linf" || s == "inf") return Metric::linf;
  if (s == "l1" || s == "L1") return Metric::l1;
  if (s == "l2" || s == "L2") return Metric::l2;
  throw std::invalid_argument("unknown metric: " + s);
}

double distance(Metric m, const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("distance: vectors differ in length");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = std::abs(a[i] - b[i]);
    switch (m) {
      case Metric::linf: acc = std::max(acc, d); break;
      case Metric::l1: acc += d; break;
      case Metric::l2: acc += d * d; break;
    }
  }
  return m == Metric::l2 ? std::sqrt(acc) : acc;
}

std::vector<double> local_normalize(const std::vector<double>& scores) {
  if (scores.empty()) throw std::invalid_argument("local_normalize: empty score vector");
  const auto [lo, hi] = std::minmax_element(scores.begin(), scores.end());
  const double a = *lo, b = *hi;
  std::vector<double> out(scores.size(), 0.5);
  if (!(b > a)) return out;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (scores[i] == a) out[i] = 0.0;
    else if (scores[i] == b) out[i] = 1.0;
    else out[i] = (scores[i] - a) / (b - a);
  }
  return out;
}

// -- records ----------------------------------------------------------------------

nlohmann::json DatasetRecord::to_json() const {
  nlohmann::json j;
  j["env"] = env;
  j["state"] = state;
  j["scores"] = scores;
  j["iter"] = iter;
  j["d"] = d ? nlohmann::json(*d) : nlohmann::json(nullptr);
  j["provenance"] = iter == 0 ? "initial" : "counterexample";
  if (!network.empty()) j["network"] = network;
  j["input"] = {{"shape", input.shape}, {"data", input.data}};
  return j;
}

DatasetRecord DatasetRecord::from_json(const nlohmann::json& j) {
  DatasetRecord r;
  r.env = j.at("env").get<std::string>();
  r.state = j.at("state");
  r.scores = j.at("scores").get<std::vector<double>>();
  r.iter = j.at("iter").get<int>();
  if (j.contains("d") && !j.at("d").is_null()) r.d = j.at("d").get<double>();
  if (j.contains("network")) r.network = j.at("network").get<std::vector<double>>();
  if (j.contains("input")) {
    r.input = nn::Tensor(j.at("input").at("shape").get<std::vector<std::size_t>>(),
                         j.at("input").at("data").get<std::vector<float>>());
  }
  return r;
}

bool Dataset::add(const std::string& key, DatasetRecord r) {
  if (index_.count(key)) return false;
  index_.emplace(key, records_.size());
  keys_.push_back(key);
  records_.push_back(std::move(r));
  return true;
}

const DatasetRecord* Dataset::find(const std::string& key) const {
  auto it = index_.find(key);
  return it == index_.end() ? nullptr : &records_[it->second];
}

void Dataset::save(const std::string& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (const auto& r : records_) out << r.to_json().dump() << "\n";
  if (!out) throw std::runtime_error("write failed: " + path);
}

Dataset Dataset::load(const std::string& path, const std::function<std::string(const DatasetRecord&)>& key_fn) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  Dataset ds;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      auto r = DatasetRecord::from_json(nlohmann::json::parse(line));
      const std::string key = key_fn ? key_fn(r) : r.env + "|" + r.state.dump();
      ds.add(key, std::move(r));
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": malformed record: " + e.what());
    }
  }
  return ds;
}

// -- trainer contract ---------------------------------------------------------------

std::string substitute_placeholders(std::string tmpl, const std::string& dataset, const std::string& config,
                                    const std::string& out) {
  auto replace_all = [&](const std::string& key, const std::string& value) {
    for (std::size_t pos = tmpl.find(key); pos != std::string::npos; pos = tmpl.find(key, pos + value.size()))
      tmpl.replace(pos, key.size(), value);
  };
  replace_all("{dataset}", dataset);
  replace_all("{config}", config);
  replace_all("{out}", out);
  return tmpl;
}

nlohmann::json default_train_config(const std::vector<std::size_t>& input_shape, std::size_t output_dim,
                                    std::uint64_t seed) {
  return {{"format", "polsyn-train-config"},
          {"version", 1},
          {"input_shape", input_shape},
          {"output_dim", output_dim},
          {"architecture", {{"conv_filters", 6}, {"dense", {64, 32, 32}}}},
          {"epochs", 60},
          {"batch_size", 32},
          {"learning_rate", 0.003},
          {"seed", seed},
          {"split", {5, 2, 3}},
          {"normalization", "local"},
          {"test_vectors", 32}};
}

double check_test_vectors(const nn::Network& net, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw TrainerError("missing test vectors: " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw TrainerError("cannot parse " + path + ": " + e.what());
  }
  const auto& vs = j.at("vectors");
  if (!vs.is_array() || vs.empty()) throw TrainerError("no test vectors in " + path);
  double worst = 0.0;
  for (const auto& v : vs) {
    nn::Tensor x(v.at("input").at("shape").get<std::vector<std::size_t>>(),
                 v.at("input").at("data").get<std::vector<float>>());
    const auto expect = v.at("output").get<std::vector<double>>();
    const auto got = net.infer(x);
    if (got.size() != expect.size()) throw TrainerError("test vector output length mismatch in " + path);
    for (std::size_t i = 0; i < got.size(); ++i) worst = std::max(worst, std::abs(static_cast<double>(got[i]) - expect[i]));
  }
  return worst;
}

nn::Network run_trainer(const TrainerSpec& spec, const Dataset& data, const std::filesystem::path& work_dir) {
  namespace fs = std::filesystem;
  if (spec.command.empty()) throw TrainerError("no trainer command configured");
  fs::create_directories(work_dir);
  const fs::path dataset = work_dir / "dataset.jsonl";
  const fs::path config = work_dir / "train_config.json";
  const fs::path out = work_dir / "weights";
  fs::create_directories(out);
  data.save(dataset.string());
  {
    std::ofstream c(config, std::ios::trunc);
    c << spec.config.dump(2) << "\n";
  }
  const std::string cmd = substitute_placeholders(spec.command, dataset.string(), config.string(), out.string());
  const int status = std::system(cmd.c_str());
  if (status == -1) throw TrainerError("cannot launch trainer: " + cmd);
  if (!WIFEXITED(status) || WEXITSTATUS(status) != 0)
    throw TrainerError("trainer failed (status " + std::to_string(WIFEXITED(status) ? WEXITSTATUS(status) : status) +
                       "): " + cmd);
  nn::Network net;
  try {
    net = nn::Network::load((out / "network.json").string());
  } catch (const nn::NnError& e) {
    throw TrainerError(std::string("trainer output rejected: ") + e.what());
  }
  const double dev = check_test_vectors(net, (out / "test_vectors.json").string());
  if (dev > 1e-5) throw TrainerError("trainer weights disagree with its test vectors (max deviation " + std::to_string(dev) + ")");
  return net;
}

void DaggerConfig::validate() const {
  if (!(epsilon >= 0.0)) throw std::invalid_argument("dagger: epsilon must be >= 0");
  if (paths_per_iteration < 1) throw std::invalid_argument("dagger: paths per iteration must be >= 1");
  if (eval_episodes < 1) throw std::invalid_argument("dagger: evaluation episodes must be >= 1");
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw std::invalid_argument("dagger: threshold must lie in [0,1]");
  if (!(delta > 0.0 && delta <= 1.0)) throw std::invalid_argument("dagger: delta must lie in (0,1]");
}

nlohmann::json DaggerConfig::to_json() const {
  return {{"metric", metric_name(metric)},
          {"epsilon", epsilon},
          {"horizon", horizon},
          {"paths_per_iteration", paths_per_iteration},
          {"max_iterations", max_iterations},
          {"eval_episodes", eval_episodes},
          {"eval_horizon", eval_horizon},
          {"delta", delta},
          {"plateau_points", plateau_points},
          {"plateau_patience", plateau_patience},
          {"mode", mode == ExtractMode::argmax ? "argmax" : "threshold-random"},
          {"threshold", threshold},
          {"seed", seed},
          {"trainer", {{"command", trainer.command}, {"config", trainer.config}}}};
}

}  // namespace polsyn
