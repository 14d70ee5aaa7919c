#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "polsyn/model.hpp"

namespace polsyn {

using StateId = std::uint32_t;

/// Transitions available under one action of an explicit MDP.
struct Choice {
  Action action = 0;
  std::vector<Transition<StateId>> outcomes;
};

/**
 * Explicit finite MDP over states 0..n-1. Built incrementally with
 * add_choice() and friends, then frozen by validate(), which checks the
 * distribution invariants and caches per-state action sets.
 */
class Mdp {
 public:
  using State = StateId;

  Mdp() = default;
  Mdp(std::size_t num_states, std::size_t num_actions, std::vector<std::string> label_names = {});

  void add_choice(StateId s, Action a, std::vector<Transition<StateId>> outcomes);
  void set_terminal_reward(StateId s, double r) { terminal_reward_.at(s) = r; }
  void set_label_mask(StateId s, std::uint64_t mask) { labels_.at(s) = mask; }
  void add_label(StateId s, const std::string& name);
  void set_outcome(StateId s, Outcome o) { outcomes_.at(s) = o; }

  /// Checks every invariant and caches derived data; throws std::invalid_argument.
  void validate();

  std::size_t num_states() const { return choices_.size(); }
  std::size_t num_actions() const { return num_actions_; }
  ActionSet actions(StateId s) const { return action_sets_.at(s); }
  const std::vector<Choice>& choices(StateId s) const { return choices_.at(s); }
  const Choice& choice(StateId s, Action a) const;
  std::vector<Transition<StateId>> successors(StateId s, Action a) const { return choice(s, a).outcomes; }
  double terminal_reward(StateId s) const { return terminal_reward_[s]; }
  bool is_absorbing(StateId s) const { return absorbing_[s]; }
  Range return_bounds(std::size_t h) const;
  const std::vector<std::string>& label_names() const { return label_names_; }
  std::uint64_t label_mask(StateId s) const { return labels_[s]; }
  Outcome outcome(StateId s) const { return outcomes_[s]; }
  std::pair<StateId, double> sample(StateId s, Action a, Rng& rng) const;

  /// Bitmask of states carrying the named label.
  std::vector<bool> states_with(const std::string& label) const;
  std::size_t label_index(const std::string& label) const;

 private:
  std::size_t num_actions_ = 0;
  std::vector<std::vector<Choice>> choices_;
  std::vector<ActionSet> action_sets_;
  std::vector<double> terminal_reward_;
  std::vector<std::uint64_t> labels_;
  std::vector<Outcome> outcomes_;
  std::vector<bool> absorbing_;
  std::vector<std::string> label_names_;
  double min_reward_ = 0.0, max_reward_ = 0.0, min_terminal_ = 0.0, max_terminal_ = 0.0;
  bool validated_ = false;
};

/// Explicit discrete-time Markov chain.
class Mc {
 public:
  Mc() = default;
  Mc(std::size_t num_states, std::vector<std::string> label_names = {});

  void set_transitions(StateId s, std::vector<std::pair<StateId, double>> row);
  void set_label_mask(StateId s, std::uint64_t mask) { labels_.at(s) = mask; }
  void add_label(StateId s, const std::string& name);
  void validate() const;

  std::size_t num_states() const { return rows_.size(); }
  const std::vector<std::pair<StateId, double>>& row(StateId s) const { return rows_.at(s); }
  const std::vector<std::string>& label_names() const { return label_names_; }
  std::uint64_t label_mask(StateId s) const { return labels_[s]; }
  std::size_t label_index(const std::string& label) const;

 private:
  std::vector<std::vector<std::pair<StateId, double>>> rows_;
  std::vector<std::uint64_t> labels_;
  std::vector<std::string> label_names_;
};

/// Per-state action distribution of a memoryless policy on an explicit MDP.
using PolicyTable = std::vector<Distribution<Action>>;

PolicyTable deterministic_table(const std::vector<Action>& choice);

/// The Markov chain M_sigma induced by a memoryless policy (rewards dropped).
Mc induced_mc(const Mdp& mdp, const PolicyTable& policy);

/// Wraps a deterministic table as a Policy over StateId.
Policy<StateId> table_policy(std::string name, std::vector<Action> table);

class StateSpaceTooLarge : public std::runtime_error {
 public:
  StateSpaceTooLarge() : std::runtime_error("state space too large") {}
};

/// Result of materializing the reachable part of a generative model.
template <class S>
struct Explored {
  Mdp mdp;
  std::vector<S> states;
  std::unordered_map<S, StateId> index;
  /// BFS distance from the nearest root.
  std::vector<std::uint32_t> depth;

  std::optional<StateId> find(const S& s) const {
    auto it = index.find(s);
    if (it == index.end()) return std::nullopt;
    return it->second;
  }
};

/**
 * Breadth-first materialization of the states reachable from `roots`.
 * States at distance `max_depth`, and states for which `expand` returns
 * false, are not expanded: every legal action becomes a zero-reward self-loop.
 * Throws StateSpaceTooLarge past `max_states`.
 */
template <Model M>
Explored<typename M::State> explore(const M& m, const std::vector<typename M::State>& roots,
                                    std::size_t max_states,
                                    std::size_t max_depth = static_cast<std::size_t>(-1),
                                    const std::function<bool(const typename M::State&)>& expand = {}) {
  using S = typename M::State;
  Explored<S> out;
  std::deque<StateId> queue;
  auto intern = [&](const S& s, std::uint32_t d) -> StateId {
    auto [it, inserted] = out.index.try_emplace(s, static_cast<StateId>(out.states.size()));
    if (inserted) {
      if (out.states.size() >= max_states) throw StateSpaceTooLarge();
      out.states.push_back(s);
      out.depth.push_back(d);
      queue.push_back(it->second);
    }
    return it->second;
  };
  for (const auto& r : roots) intern(r, 0);

  struct Pending {
    StateId s;
    Action a;
    std::vector<Transition<StateId>> outs;
  };
  std::vector<Pending> pending;
  std::vector<bool> self_loop_states;
  while (!queue.empty()) {
    const StateId id = queue.front();
    queue.pop_front();
    const S s = out.states[id];
    const std::uint32_t d = out.depth[id];
    const bool frontier = d >= max_depth || (expand && !expand(s));
    if (self_loop_states.size() <= id) self_loop_states.resize(id + 1, false);
    if (frontier) {
      self_loop_states[id] = true;
      continue;
    }
    for (Action a : m.actions(s)) {
      std::vector<Transition<StateId>> outs;
      for (const auto& t : m.successors(s, a)) outs.push_back({intern(t.next, d + 1), t.prob, t.reward});
      pending.push_back({id, a, std::move(outs)});
    }
  }

  out.mdp = Mdp(out.states.size(), m.num_actions(), m.label_names());
  self_loop_states.resize(out.states.size(), false);
  for (auto& p : pending) out.mdp.add_choice(p.s, p.a, std::move(p.outs));
  for (StateId id = 0; id < out.states.size(); ++id) {
    const S& s = out.states[id];
    if (self_loop_states[id]) {
      for (Action a : m.actions(s)) out.mdp.add_choice(id, a, {{id, 1.0, 0.0}});
    }
    out.mdp.set_terminal_reward(id, m.terminal_reward(s));
    out.mdp.set_label_mask(id, m.label_mask(s));
    out.mdp.set_outcome(id, m.outcome(s));
  }
  out.mdp.validate();
  return out;
}

}  // namespace polsyn
