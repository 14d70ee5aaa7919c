#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "json.hpp"
#include "polsyn/mdp.hpp"
#include "polsyn/pctl.hpp"

namespace polsyn {

/// Tolerances of the exact engine.
struct CheckOptions {
  /// Stop unbounded value iteration once the largest update falls below this.
  double residual = 1e-12;
  std::size_t max_sweeps = 10'000'000;
  /// Slack when comparing a probability against a ProbIn interval bound.
  double interval_tolerance = 1e-9;
  /// Slack defining the optimal-action sets of a reachability problem.
  double optimality_tolerance = 1e-10;
};

/// Per-state values with convergence metadata.
struct ValueTable {
  std::vector<double> values;
  /// Step bound for finite-horizon tables; nullopt-like -1 for unbounded ones.
  long horizon = -1;
  std::size_t iterations = 0;
  double residual = 0.0;

  double operator[](StateId s) const { return values[s]; }
  nlohmann::json to_json() const;
};

/// Per-action values at a single state; illegal actions hold 0.
struct ActionValues {
  ActionSet actions;
  std::vector<double> values;

  double max() const;
  std::vector<Action> argmax(double tol = 0.0) const;
  nlohmann::json to_json() const;
};

// -- Markov chains ----------------------------------------------------------

/// States satisfying a PCTL state formula.
std::vector<bool> pctl_sat_all(const Mc& mc, const pctl::StateFormula& f, const CheckOptions& opts = {});
bool pctl_sat(const Mc& mc, StateId s, const pctl::StateFormula& f, const CheckOptions& opts = {});

/// Pr(s |= path) for every state.
ValueTable mc_prob_all(const Mc& mc, const pctl::PathFormula& path, const CheckOptions& opts = {});
double mc_prob(const Mc& mc, StateId s, const pctl::PathFormula& path, const CheckOptions& opts = {});

/// Probability to reach `goal` through `allowed` states: prob-0/prob-1 sets
/// by graph analysis, the rest by value iteration.
ValueTable mc_until(const Mc& mc, const std::vector<bool>& allowed, const std::vector<bool>& goal,
                    const CheckOptions& opts = {});

// -- MDPs -------------------------------------------------------------------

enum class Optimum { max, min };

/// PCTL on an MDP: P and Pmax take the maximum over policies, Pmin the minimum.
std::vector<bool> pctl_sat_all(const Mdp& mdp, const pctl::StateFormula& f, const CheckOptions& opts = {});
ValueTable mdp_prob_all(const Mdp& mdp, const pctl::PathFormula& path, Optimum opt, const CheckOptions& opts = {});

ValueTable mdp_until(const Mdp& mdp, const std::vector<bool>& allowed, const std::vector<bool>& goal, Optimum opt,
                     const CheckOptions& opts = {});
ValueTable mdp_bounded_until(const Mdp& mdp, const std::vector<bool>& allowed, const std::vector<bool>& goal,
                             unsigned steps, Optimum opt);

struct ReachResult {
  ValueTable probability;
  /// Actions preserving the optimal value: sum P(s,a,s') p(s') = p(s).
  std::vector<ActionSet> optimal_actions;
  /// Deterministic memoryless policy attaining p from every state.
  std::vector<Action> policy;
};

/// Maximal probability to eventually reach `goal`, with an optimal policy.
/// Optimal actions that only loop are never chosen: the policy picks, among
/// optimal actions, one that moves closer to the goal in the optimal-action
/// graph. `tie_rng` randomizes the choice among qualifying actions.
ReachResult mdp_max_reach(const Mdp& mdp, const std::vector<bool>& goal, const CheckOptions& opts = {},
                          Rng* tie_rng = nullptr);

struct ConditionalSteps {
  /// Minimal E[steps | goal reached]; +inf where the goal is unreachable.
  std::vector<double> expected_steps;
  std::vector<Action> policy;
  std::size_t iterations = 0;
};

class TargetUnreachable : public std::runtime_error {
 public:
  TargetUnreachable() : std::runtime_error("target unreachable") {}
};

/**
 * Among policies that only use optimal reachability actions, minimizes the
 * expected number of steps to the goal conditioned on reaching it. Works on
 * the conditioned MDP P'(s,a,s') = P(s,a,s') p(s') / p(s) over states with
 * p > 0, where it is an ordinary minimum expected-steps problem. Throws
 * TargetUnreachable if p(initial) = 0.
 */
ConditionalSteps min_conditional_steps(const Mdp& mdp, const std::vector<bool>& goal, const ReachResult& reach,
                                       StateId initial, const CheckOptions& opts = {});

struct HorizonValues {
  ValueTable value;  // V_h
  /// Greedy decisions per remaining horizon: decisions[k][s] with k steps to go, k = 1..h.
  std::vector<std::vector<Action>> decisions;
  /// Step-0 decision (h steps to go); empty when h = 0.
  std::vector<Action> policy;
};

/// V_0 = R_T, V_k(s) = max_a [R(s,a) + sum P(s,a,s') V_{k-1}(s')].
/// Ties go to the lowest action index unless `tie_rng` is given.
HorizonValues value_iteration_total(const Mdp& mdp, std::size_t h, std::size_t state_cap = 50'000'000,
                                    Rng* tie_rng = nullptr);

// -- bounded safety scores ----------------------------------------------------

struct EtaResult {
  ActionValues eta;
  /// States materialized by the on-the-fly exploration.
  std::size_t visited = 0;
};

/**
 * eta_H(s, a): best probability, over policies taking a at s, of never
 * visiting an unsafe state during the next H steps (s included).
 *   x_0(t) = [safe t],  x_k(t) = [safe t] max_a sum P(t,a,t') x_{k-1}(t')
 *   eta_H(s,a) = [safe s] sum P(s,a,s') x_{H-1}(s')
 * Only the states within distance H of s are materialized; unsafe states are
 * not expanded.
 */
template <Model M>
EtaResult eta(const M& m, const typename M::State& s, std::size_t horizon,
              const std::function<bool(const typename M::State&)>& unsafe,
              std::size_t max_states = 20'000'000) {
  if (horizon < 1) throw std::invalid_argument("eta: horizon must be at least 1");
  EtaResult out;
  out.eta.actions = m.actions(s);
  out.eta.values.assign(m.num_actions(), 0.0);
  if (unsafe(s)) {
    out.visited = 1;
    return out;
  }
  auto ex = explore(m, {s}, max_states, horizon, [&](const typename M::State& t) { return !unsafe(t); });
  out.visited = ex.states.size();
  const std::size_t n = ex.states.size();
  std::vector<char> safe(n);
  for (StateId i = 0; i < n; ++i) safe[i] = unsafe(ex.states[i]) ? 0 : 1;
  std::vector<double> x(n), next(n);
  for (StateId i = 0; i < n; ++i) x[i] = safe[i];
  const auto& mdp = ex.mdp;
  // x_k is needed only at depth <= H - k.
  for (std::size_t k = 1; k + 1 <= horizon; ++k) {
    next = x;
    for (StateId i = 0; i < n; ++i) {
      if (!safe[i] || ex.depth[i] > horizon - k) continue;
      double best = 0.0;
      for (const auto& c : mdp.choices(i)) {
        double v = 0.0;
        for (const auto& t : c.outcomes) v += t.prob * x[t.next];
        best = std::max(best, v);
      }
      next[i] = best;
    }
    std::swap(x, next);
  }
  for (const auto& c : mdp.choices(0)) {
    double v = 0.0;
    for (const auto& t : c.outcomes) v += t.prob * x[t.next];
    out.eta.values[c.action] = v;
  }
  return out;
}

}  // namespace polsyn
