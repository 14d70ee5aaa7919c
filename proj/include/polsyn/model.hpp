#pragma once

#include <algorithm>
#include <concepts>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "polsyn/action.hpp"
#include "polsyn/distribution.hpp"
#include "polsyn/rng.hpp"

namespace polsyn {

/// Terminal classification of a state, used to score episodes.
enum class Outcome : std::uint8_t { none, win, loss };

/// Closed interval bounding a quantity (returns, rewards).
struct Range {
  double lo = 0.0;
  double hi = 0.0;
  double width() const { return hi - lo; }
};

/// One outcome of taking an action: successor, its probability, and the reward
/// realized on that outcome (R(s, a, s')).
template <class S>
struct Transition {
  S next;
  double prob = 0.0;
  double reward = 0.0;
};

/**
 * A finite-action MDP, explicit or generative.
 *
 *  - `actions(s)`        legal actions; non-empty for every state.
 *  - `successors(s, a)`  outcome list for a in actions(s); distinct successors,
 *                        probabilities summing to one.
 *  - `terminal_reward(s)` R_T.
 *  - `is_absorbing(s)`   every action self-loops with reward 0.
 *  - `return_bounds(h)`  bounds on the total reward of any h-step path.
 *  - `label_names()` / `label_mask(s)` atomic propositions, bit i = label i.
 *  - `outcome(s)`        win/loss classification of terminal states.
 */
template <class M>
concept Model = requires(const M& m, const typename M::State& s, Action a, std::size_t h) {
  typename M::State;
  { m.num_actions() } -> std::convertible_to<std::size_t>;
  { m.actions(s) } -> std::same_as<ActionSet>;
  { m.successors(s, a) } -> std::same_as<std::vector<Transition<typename M::State>>>;
  { m.terminal_reward(s) } -> std::convertible_to<double>;
  { m.is_absorbing(s) } -> std::convertible_to<bool>;
  { m.return_bounds(h) } -> std::same_as<Range>;
  { m.label_names() } -> std::convertible_to<const std::vector<std::string>&>;
  { m.label_mask(s) } -> std::convertible_to<std::uint64_t>;
  { m.outcome(s) } -> std::same_as<Outcome>;
};

template <class M>
concept DirectSampling = Model<M> && requires(const M& m, const typename M::State& s, Action a, Rng& rng) {
  { m.sample(s, a, rng) } -> std::same_as<std::pair<typename M::State, double>>;
};

/// Index of a label in m.label_names(); throws on unknown names.
template <Model M>
std::size_t label_index(const M& m, const std::string& name) {
  const auto& names = m.label_names();
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return i;
  throw std::invalid_argument("unknown atomic proposition: " + name);
}

template <Model M>
bool has_label(const M& m, const typename M::State& s, const std::string& name) {
  return (m.label_mask(s) >> label_index(m, name)) & 1u;
}

/// R(s, a) = sum over outcomes of P(s, a, s') R(s, a, s').
template <Model M>
double expected_reward(const M& m, const typename M::State& s, Action a) {
  double r = 0.0;
  for (const auto& t : m.successors(s, a)) r += t.prob * t.reward;
  return r;
}

/// Draws s' ~ P(s, a) and returns it with the realized reward.
template <Model M>
std::pair<typename M::State, double> sample_step(const M& m, const typename M::State& s, Action a,
                                                 Rng& rng) {
  if (!m.actions(s).contains(a)) throw std::invalid_argument("action unavailable");
  if constexpr (DirectSampling<M>) {
    return m.sample(s, a, rng);
  } else {
    auto outs = m.successors(s, a);
    const double u = rng.uniform();
    double acc = 0.0;
    for (auto& t : outs) {
      acc += t.prob;
      if (u < acc) return {std::move(t.next), t.reward};
    }
    return {std::move(outs.back().next), outs.back().reward};
  }
}

/// Memoryless policy. `act` may be randomized through the supplied generator;
/// `decide`, when present, exposes the action distribution.
template <class S>
class Policy {
 public:
  using ActFn = std::function<Action(const S&, Rng&)>;
  using DistFn = std::function<Distribution<Action>(const S&)>;

  Policy(std::string name, ActFn act, bool deterministic, DistFn dist = {})
      : name_(std::move(name)), act_(std::move(act)), dist_(std::move(dist)), deterministic_(deterministic) {}

  static Policy from_distribution(std::string name, DistFn dist, bool deterministic) {
    ActFn act = [dist](const S& s, Rng& rng) { return dist(s).sample(rng); };
    return Policy(std::move(name), std::move(act), deterministic, std::move(dist));
  }

  Action act(const S& s, Rng& rng) const { return act_(s, rng); }
  bool deterministic() const { return deterministic_; }
  bool has_distribution() const { return static_cast<bool>(dist_); }
  Distribution<Action> decide(const S& s) const {
    if (!dist_) throw std::logic_error("policy " + name_ + " does not expose a distribution");
    return dist_(s);
  }
  const std::string& name() const { return name_; }

 private:
  std::string name_;
  ActFn act_;
  DistFn dist_;
  bool deterministic_;
};

template <Model M>
Policy<typename M::State> uniform_policy(const M& m) {
  using S = typename M::State;
  return Policy<S>(
      "uniform",
      [&m](const S& s, Rng& rng) {
        const ActionSet legal = m.actions(s);
        return legal.nth(rng.below(legal.size()));
      },
      false,
      [&m](const S& s) { return Distribution<Action>::uniform(m.actions(s).to_vector()); });
}

/// A finite path s0 a0 s1 ... sk with the rewards realized along it.
template <class S>
struct Path {
  std::vector<S> states;
  std::vector<Action> actions;
  std::vector<double> rewards;
  /// Sum of realized rewards plus R_T of the last state, accumulated during simulation.
  double total = 0.0;

  std::size_t length() const { return actions.size(); }
  const S& last() const { return states.back(); }
};

/**
 * Follows `policy` from s0 for at most h steps. Stops early on absorbing
 * states (their remaining rewards are zero, so the truncated path has the same
 * total reward as its padded length-h extension).
 */
template <Model M>
Path<typename M::State> simulate(const M& m, const Policy<typename M::State>& policy,
                                 const typename M::State& s0, std::size_t h, Rng& rng) {
  Path<typename M::State> path;
  path.states.push_back(s0);
  double acc = 0.0;
  for (std::size_t t = 0; t < h; ++t) {
    const auto& s = path.states.back();
    if (m.is_absorbing(s)) break;
    const Action a = policy.act(s, rng);
    auto [next, r] = sample_step(m, s, a, rng);
    path.actions.push_back(a);
    path.rewards.push_back(r);
    acc += r;
    path.states.push_back(std::move(next));
  }
  path.total = acc + m.terminal_reward(path.states.back());
  return path;
}

/**
 * Total reward of horizon h: rewards of the first h transitions plus R_T of the
 * h-th state. Rewards are recomputed from the model (not read from the path).
 * A path shorter than h is accepted only if it ends in an absorbing state.
 */
template <Model M>
double total_reward(const M& m, const Path<typename M::State>& p, std::size_t h) {
  if (p.states.size() != p.actions.size() + 1) throw std::invalid_argument("malformed path");
  if (p.length() < h && !m.is_absorbing(p.last()))
    throw std::invalid_argument("path shorter than horizon");
  const std::size_t steps = std::min(h, p.length());
  double acc = 0.0;
  for (std::size_t i = 0; i < steps; ++i) {
    bool found = false;
    for (const auto& t : m.successors(p.states[i], p.actions[i])) {
      if (t.next == p.states[i + 1]) {
        acc += t.reward;
        found = true;
        break;
      }
    }
    if (!found) throw std::invalid_argument("path leaves the transition support");
  }
  return acc + m.terminal_reward(p.states[steps]);
}

}  // namespace polsyn
