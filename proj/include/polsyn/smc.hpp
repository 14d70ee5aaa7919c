#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "json.hpp"
#include "polsyn/model.hpp"
#include "polsyn/parallel.hpp"

namespace polsyn {

/// Smallest n with n >= (b-a)^2 / (2 eps^2) * ln(2/delta).
std::size_t sample_size(double a, double b, double epsilon, double delta);

/// Half-width certified by n samples: (b-a) * sqrt(ln(2/delta) / (2n)).
double hoeffding_epsilon(double a, double b, std::size_t n, double delta);

struct SmcPlan {
  double a = 0.0, b = 1.0;
  double epsilon = 0.1;
  double delta = 0.05;
  std::size_t horizon = 100;

  std::size_t n() const { return sample_size(a, b, epsilon, delta); }
};

struct EvalReport {
  std::string policy;
  std::size_t n = 0;
  std::size_t horizon = 0;
  std::uint64_t seed = 0;
  double mean_reward = 0.0;
  std::size_t wins = 0, losses = 0, draws = 0;
  std::vector<double> rewards;
  std::vector<std::uint32_t> lengths;
  std::vector<std::uint8_t> outcomes;  // Outcome per episode
  Range reward_bounds;
  double delta = 0.05;
  /// Hoeffding half-width for the mean reward and for the win rate.
  double epsilon = 0.0;
  double win_epsilon = 0.0;
  /// Not serialized, so reports stay byte-identical across runs.
  double wall_clock_seconds = 0.0;

  double win_rate() const { return n ? static_cast<double>(wins) / static_cast<double>(n) : 0.0; }
  double loss_rate() const { return n ? static_cast<double>(losses) / static_cast<double>(n) : 0.0; }
  nlohmann::json to_json() const;
  static EvalReport from_json(const nlohmann::json& j);
};

/// Fills the aggregate fields of a report from its per-episode vectors.
void finalize_report(EvalReport& r);

/**
 * n episodes of at most h steps following `policy`. Episode i draws from
 * Rng::stream(seed, i), starts at init(i, rng) and is classified by the
 * outcome of its last state (neither win nor loss is a draw). Episodes may run
 * in parallel; aggregation is in episode order.
 */
template <Model M>
EvalReport evaluate(const M& m, const Policy<typename M::State>& policy,
                    const std::function<typename M::State(std::size_t, Rng&)>& init, std::size_t h, std::size_t n,
                    std::uint64_t seed, double delta = 0.05) {
  if (n < 1) throw std::invalid_argument("evaluate: n must be at least 1");
  const auto t0 = std::chrono::steady_clock::now();
  EvalReport r;
  r.policy = policy.name();
  r.n = n;
  r.horizon = h;
  r.seed = seed;
  r.delta = delta;
  r.reward_bounds = m.return_bounds(h);
  r.rewards.assign(n, 0.0);
  r.lengths.assign(n, 0);
  r.outcomes.assign(n, 0);
  parallel_for(n, [&](std::size_t i) {
    Rng rng = Rng::stream(seed, i);
    const auto s0 = init(i, rng);
    const auto path = simulate(m, policy, s0, h, rng);
    r.rewards[i] = path.total;
    r.lengths[i] = static_cast<std::uint32_t>(path.length());
    r.outcomes[i] = static_cast<std::uint8_t>(m.outcome(path.last()));
  });
  finalize_report(r);
  r.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

template <Model M>
EvalReport evaluate(const M& m, const Policy<typename M::State>& policy, const typename M::State& s0, std::size_t h,
                    std::size_t n, std::uint64_t seed, double delta = 0.05) {
  return evaluate<M>(
      m, policy, [&s0](std::size_t, Rng&) { return s0; }, h, n, seed, delta);
}

/// One-sided check that mean(x) - mean(y) exceeds eps_x + eps_y.
struct GapCertificate {
  double gap = 0.0;
  double margin = 0.0;
  bool certified = false;
};
GapCertificate certify_gap(double mean_x, double eps_x, double mean_y, double eps_y);

}  // namespace polsyn
