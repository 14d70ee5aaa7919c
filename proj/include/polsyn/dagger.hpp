#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "polsyn/neural.hpp"
#include "polsyn/smc.hpp"

namespace polsyn {

enum class Metric { linf, l1, l2 };
std::string metric_name(Metric m);
Metric parse_metric(const std::string& s);
double distance(Metric m, const std::vector<double>& a, const std::vector<double>& b);

/// Affine rescale to [0, 1] (min -> 0, max -> 1); constant vectors become all 0.5.
std::vector<double> local_normalize(const std::vector<double>& scores);

struct DatasetRecord {
  std::string env;
  nlohmann::json state;
  /// Locally normalized expert scores.
  std::vector<double> scores;
  /// 0 for the initial dataset, k for counterexamples found while simulating NN_{k-1}.
  int iter = 0;
  /// Distance between NN_{iter-1} and the scores when appended; absent for initial records.
  std::optional<double> d;
  /// Raw network outputs the distance was computed from.
  std::vector<double> network;
  /// Encoded state, so trainers need no environment code.
  nn::Tensor input;

  nlohmann::json to_json() const;
  static DatasetRecord from_json(const nlohmann::json& j);
};

/// Append-only record list, deduplicated by a canonical state key.
class Dataset {
 public:
  /// False (and no change) when the key is already present.
  bool add(const std::string& key, DatasetRecord r);
  bool contains(const std::string& key) const { return index_.count(key) > 0; }
  const DatasetRecord* find(const std::string& key) const;
  std::size_t size() const { return records_.size(); }
  const std::vector<DatasetRecord>& records() const { return records_; }
  const std::vector<std::string>& keys() const { return keys_; }

  /// JSON Lines, one record per line, in append order.
  void save(const std::string& path) const;
  /// Keys are not stored: `key` recomputes them (default: env + "|" + state JSON).
  static Dataset load(const std::string& path, const std::function<std::string(const DatasetRecord&)>& key = {});

 private:
  std::vector<DatasetRecord> records_;
  std::vector<std::string> keys_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// How a dataset becomes a network: an external command.
struct TrainerSpec {
  /// Shell command with {dataset}, {config} and {out} placeholders.
  std::string command;
  /// Training configuration written to {config}.
  nlohmann::json config;
};

class TrainerError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string substitute_placeholders(std::string tmpl, const std::string& dataset, const std::string& config,
                                    const std::string& out);

/// Default training configuration (5:2:3 split, local normalization).
nlohmann::json default_train_config(const std::vector<std::size_t>& input_shape, std::size_t output_dim,
                                    std::uint64_t seed);

/**
 * Writes the dataset and config, runs the trainer, then loads
 * `<out>/network.json` and checks it against `<out>/test_vectors.json`
 * (1e-5 absolute). Throws TrainerError; files written so far are kept.
 */
nn::Network run_trainer(const TrainerSpec& spec, const Dataset& data, const std::filesystem::path& work_dir);

/// Largest absolute deviation of the network on a test-vector file.
double check_test_vectors(const nn::Network& net, const std::string& path);

/// Environment-specific state handling for datasets.
template <class S>
struct StateCodec {
  std::string env;
  std::function<nlohmann::json(const S&)> to_json;
  std::function<std::string(const S&)> key;
};

struct DaggerConfig {
  Metric metric = Metric::linf;
  double epsilon = 0.2;
  /// Length of the simulated paths.
  std::size_t horizon = 100;
  std::size_t paths_per_iteration = 50;
  std::size_t max_iterations = 5;
  /// Episodes per SMC evaluation of each network, and their horizon.
  std::size_t eval_episodes = 200;
  std::size_t eval_horizon = 100;
  double delta = 0.05;
  /// Stop once win-rate improvement stays below this many percentage points...
  double plateau_points = 1.0;
  /// ...for this many consecutive iterations.
  std::size_t plateau_patience = 2;
  ExtractMode mode = ExtractMode::argmax;
  double threshold = 0.9;
  std::uint64_t seed = 0;
  TrainerSpec trainer;

  void validate() const;
  nlohmann::json to_json() const;
};

struct DaggerIteration {
  std::size_t iteration = 0;
  std::size_t visited = 0;
  std::size_t already_known = 0;
  std::size_t skipped = 0;
  std::size_t appended = 0;
  std::size_t dataset_size = 0;
  EvalReport report;  // of the network trained after this iteration
};

struct DaggerResult {
  std::shared_ptr<const nn::Network> network;
  Dataset dataset;
  /// Evaluation of NN_0 (trained on the initial dataset).
  EvalReport initial_report;
  std::vector<DaggerIteration> iterations;
  bool stopped_on_plateau = false;
};

/// Seed of the SMC evaluations inside sharp_dagger.
inline std::uint64_t dagger_eval_seed(std::uint64_t seed) { return seed ^ 0x9e3779b97f4a7c15ULL; }

/// Scores f(s, .) for every action; nullopt when the expert cannot score s.
template <class S>
using ExpertScorer = std::function<std::optional<std::vector<double>>(const S&)>;

/// Expert-scored record; nullopt when the expert fails.
template <class S>
std::optional<DatasetRecord> make_record(const S& s, const ExpertScorer<S>& expert, const Encoder<S>& enc,
                                         const StateCodec<S>& codec, int iter) {
  std::optional<std::vector<double>> raw;
  try {
    raw = expert(s);
  } catch (const std::exception&) {
    return std::nullopt;
  }
  if (!raw) return std::nullopt;
  DatasetRecord r;
  r.env = codec.env;
  r.state = codec.to_json(s);
  r.scores = local_normalize(*raw);
  r.iter = iter;
  r.input = enc(s);
  return r;
}

/**
 * Sharp DAgger. NN_0 is trained on `initial`. Iteration i simulates
 * paths_per_iteration episodes of the policy extracted from NN_{i-1}; every
 * visited non-absorbing state not yet in the dataset is scored by the expert
 * and appended when d(NN_{i-1}(s), f(s)) >= epsilon. The trainer then runs on
 * the whole dataset and the new network is evaluated by SMC.
 */
template <Model M>
DaggerResult sharp_dagger(const M& m, const Encoder<typename M::State>& enc,
                          const ExpertScorer<typename M::State>& expert, const StateCodec<typename M::State>& codec,
                          const std::function<typename M::State(std::size_t, Rng&)>& init, Dataset initial,
                          const DaggerConfig& cfg, const std::filesystem::path& work_dir,
                          const std::function<void(const std::string&)>& log = {}) {
  using S = typename M::State;
  cfg.validate();
  auto note = [&](const std::string& msg) {
    if (log) log(msg);
  };
  DaggerResult res;
  res.dataset = std::move(initial);
  if (res.dataset.size() == 0) throw std::invalid_argument("dagger: initial dataset is empty");

  // Every network is evaluated on the same episodes.
  auto evaluate_net = [&](const std::shared_ptr<const nn::Network>& net) {
    const auto pol = extract_policy(m, net, enc, cfg.mode, cfg.threshold);
    return evaluate<M>(m, pol, init, cfg.eval_horizon, cfg.eval_episodes, dagger_eval_seed(cfg.seed), cfg.delta);
  };

  auto train = [&](std::size_t k) {
    return std::make_shared<const nn::Network>(
        run_trainer(cfg.trainer, res.dataset, work_dir / ("iter-" + std::to_string(k))));
  };

  res.network = train(0);
  res.initial_report = evaluate_net(res.network);
  note("iteration 0: dataset " + std::to_string(res.dataset.size()) + ", win rate " +
       std::to_string(res.initial_report.win_rate()));
  double last_rate = res.initial_report.win_rate();
  std::size_t flat = 0;

  for (std::size_t i = 1; i <= cfg.max_iterations; ++i) {
    DaggerIteration it;
    it.iteration = i;
    const auto pol = extract_policy(m, res.network, enc, cfg.mode, cfg.threshold);
    // Simulation may run in parallel; appending is sequential in episode order.
    std::vector<Path<S>> paths(cfg.paths_per_iteration);
    parallel_for(cfg.paths_per_iteration, [&](std::size_t j) {
      Rng rng = Rng::stream(cfg.seed, i, j);
      const S s0 = init(cfg.eval_episodes + i * cfg.paths_per_iteration + j, rng);
      paths[j] = simulate(m, pol, s0, cfg.horizon, rng);
    });
    for (const auto& path : paths) {
      for (const auto& s : path.states) {
        if (m.is_absorbing(s)) continue;
        ++it.visited;
        const std::string key = codec.key(s);
        if (res.dataset.contains(key)) {
          ++it.already_known;
          continue;
        }
        auto rec = make_record(s, expert, enc, codec, static_cast<int>(i));
        if (!rec) {
          ++it.skipped;
          note("expert failed on state " + codec.to_json(s).dump() + "; skipped");
          continue;
        }
        const auto out = network_scores(*res.network, enc, s, m.num_actions());
        rec->network.assign(out.begin(), out.end());
        const double d = distance(cfg.metric, rec->network, rec->scores);
        if (d < cfg.epsilon) continue;
        rec->d = d;
        res.dataset.add(key, std::move(*rec));
        ++it.appended;
      }
    }
    it.dataset_size = res.dataset.size();
    res.network = train(i);
    it.report = evaluate_net(res.network);
    note("iteration " + std::to_string(i) + ": appended " + std::to_string(it.appended) + ", dataset " +
         std::to_string(it.dataset_size) + ", win rate " + std::to_string(it.report.win_rate()));
    const double rate = it.report.win_rate();
    res.iterations.push_back(std::move(it));
    flat = (rate - last_rate) * 100.0 < cfg.plateau_points ? flat + 1 : 0;
    last_rate = rate;
    if (flat >= cfg.plateau_patience) {
      res.stopped_on_plateau = true;
      break;
    }
  }
  return res;
}

}  // namespace polsyn
