#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "polsyn/advice.hpp"
#include "polsyn/model.hpp"

namespace polsyn {

enum class AdviceScope { none, root, all };

std::string advice_scope_name(AdviceScope s);
AdviceScope parse_advice_scope(const std::string& s);

struct MctsConfig {
  std::size_t horizon = 30;
  std::size_t iterations = 40;
  std::size_t rollouts = 10;
  /// UCT constant; when unset, sqrt(2) times the width of the horizon-H return bounds.
  std::optional<double> exploration;
  AdviceScope advice_scope = AdviceScope::none;
  /// Rollouts average only paths that never visit a loss state.
  bool simulation_advice = false;
  std::uint64_t seed = 0;

  void validate() const;
  nlohmann::json to_json() const;
  /// Missing keys keep their defaults; unknown keys are rejected.
  static MctsConfig from_json(const nlohmann::json& j);
};

struct RolloutResult {
  double value = 0.0;
  /// Rollouts that counted toward the mean.
  std::size_t kept = 0;
  /// Safe-only rollouts all hit a loss state; value is the pessimistic floor.
  bool floored = false;
};

/**
 * Mean total reward of n uniform-policy paths of `depth` steps from s (fewer
 * if absorbed), terminal reward included. With `safe_only`, paths that visit a
 * loss state (s included) are dropped; if all are dropped the result is
 * return_bounds(depth).lo.
 */
template <Model M>
RolloutResult rollout(const M& m, const typename M::State& s, std::size_t depth, std::size_t n, bool safe_only,
                      Rng& rng) {
  if (n < 1) throw std::invalid_argument("rollout: n must be at least 1");
  RolloutResult out;
  const bool start_unsafe = safe_only && m.outcome(s) == Outcome::loss;
  if (depth == 0 && !start_unsafe) {
    out.value = m.terminal_reward(s);
    out.kept = n;
    return out;
  }
  double sum = 0.0;
  if (!start_unsafe) {
    for (std::size_t i = 0; i < n; ++i) {
      typename M::State cur = s;
      double total = 0.0;
      bool safe = true;
      for (std::size_t k = 0; k < depth && !m.is_absorbing(cur); ++k) {
        const ActionSet legal = m.actions(cur);
        const Action a = legal.nth(rng.below(legal.size()));
        auto [next, r] = sample_step(m, cur, a, rng);
        total += r;
        cur = std::move(next);
        if (safe_only && m.outcome(cur) == Outcome::loss) {
          safe = false;
          break;
        }
      }
      if (!safe) continue;
      total += m.terminal_reward(cur);
      sum += total;
      ++out.kept;
    }
  }
  if (out.kept == 0) {
    out.value = m.return_bounds(depth).lo;
    out.floored = true;
  } else {
    out.value = sum / static_cast<double>(out.kept);
  }
  return out;
}

struct MctsResult {
  Action action = 0;
  /// Mean return per action at the root; NaN for actions never tried.
  std::vector<double> q;
  std::vector<std::uint32_t> visits;
  /// Root actions selection was restricted to.
  ActionSet allowed;
  /// Advice pruned every legal action at the root.
  bool root_fallback = false;
  /// Nodes where advice pruned every legal action.
  std::size_t fallback_nodes = 0;
  /// Nodes whose safe-only rollouts were all unsafe.
  std::size_t floored_nodes = 0;
  std::size_t tree_size = 0;
  std::size_t iterations = 0;

  nlohmann::json q_json() const;
};

namespace detail {

template <class S>
struct SearchNode {
  S state;
  std::uint32_t depth = 0;
  std::uint32_t n = 0;
  double w = 0.0;
  ActionSet allowed;
  ActionSet untried;
  bool floored = false;
  struct Edge {
    std::uint32_t n = 0;
    double w = 0.0;
    // (child index, realized reward)
    std::vector<std::pair<std::uint32_t, double>> children;
  };
  std::vector<Edge> edges;
};

}  // namespace detail

/**
 * Receding-horizon UCT from s. Each iteration selects down the tree, adds at
 * most one node, estimates its value by rollouts, and backs the return up.
 * Action edges keep one child per sampled successor. Returns the allowed root
 * action with the best mean return (lowest index on ties).
 */
template <Model M>
MctsResult mcts_decide(const M& m, const typename M::State& s, const MctsConfig& cfg,
                       const Advice<typename M::State>* advice, Rng& rng) {
  using S = typename M::State;
  using Node = detail::SearchNode<S>;
  cfg.validate();
  const ActionSet legal_root = m.actions(s);
  if (legal_root.empty()) throw std::invalid_argument("mcts: state has no legal action");
  const std::size_t na = m.num_actions();
  const double c = cfg.exploration ? *cfg.exploration : m.return_bounds(cfg.horizon).width() * std::sqrt(2.0);

  MctsResult res;
  std::vector<Node> tree;
  tree.reserve(cfg.iterations + 1);

  auto make_node = [&](S state, std::uint32_t depth) -> std::uint32_t {
    Node node;
    node.depth = depth;
    const ActionSet legal = m.actions(state);
    ActionSet allowed = legal;
    const bool advised = advice && !m.is_absorbing(state) && depth < cfg.horizon &&
                          (cfg.advice_scope == AdviceScope::all || (cfg.advice_scope == AdviceScope::root && depth == 0));
    if (advised) {
      allowed = advice->allowed(state) & legal;
      if (allowed.empty()) {
        allowed = legal;
        ++res.fallback_nodes;
        if (depth == 0) res.root_fallback = true;
      }
    }
    node.allowed = allowed;
    node.untried = allowed;
    node.edges.resize(na);
    node.state = std::move(state);
    tree.push_back(std::move(node));
    return static_cast<std::uint32_t>(tree.size() - 1);
  };

  auto estimate = [&](std::uint32_t id) {
    Node& node = tree[id];
    const std::size_t left = cfg.horizon - node.depth;
    const auto r = rollout(m, node.state, left, cfg.rollouts, cfg.simulation_advice, rng);
    if (r.floored) {
      tree[id].floored = true;
      ++res.floored_nodes;
    }
    return r.value;
  };

  make_node(s, 0);
  res.allowed = tree[0].allowed;

  struct Step {
    std::uint32_t node;
    Action action;
    double reward;
  };
  std::vector<Step> path;
  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    path.clear();
    std::uint32_t cur = 0;
    double leaf_value = 0.0;
    bool created = false;
    while (true) {
      Node& node = tree[cur];
      if (node.depth >= cfg.horizon || m.is_absorbing(node.state)) {
        leaf_value = m.terminal_reward(node.state);
        break;
      }
      Action a;
      if (!node.untried.empty()) {
        a = node.untried.nth(rng.below(node.untried.size()));
        node.untried.erase(a);
      } else {
        double best = -std::numeric_limits<double>::infinity();
        a = node.allowed.first();
        const double log_n = std::log(static_cast<double>(node.n));
        for (Action b : node.allowed) {
          const auto& e = node.edges[b];
          const double u = e.w / e.n + c * std::sqrt(log_n / e.n);
          if (u > best) {
            best = u;
            a = b;
          }
        }
      }
      auto [next, r] = sample_step(m, node.state, a, rng);
      path.push_back({cur, a, r});
      std::optional<std::uint32_t> child;
      for (const auto& [cid, cr] : tree[cur].edges[a].children) {
        if (tree[cid].state == next) {
          child = cid;
          break;
        }
      }
      if (child) {
        cur = *child;
        continue;
      }
      const std::uint32_t depth = tree[cur].depth + 1;
      const std::uint32_t id = make_node(std::move(next), depth);
      tree[path.back().node].edges[a].children.emplace_back(id, r);
      const double v = estimate(id);
      tree[id].n += 1;
      tree[id].w += v;
      leaf_value = v;
      cur = id;
      created = true;
      break;
    }
    // A fresh node already holds its own sample.
    double g = leaf_value;
    if (!created) {
      tree[cur].n += 1;
      tree[cur].w += g;
    }
    for (auto st = path.rbegin(); st != path.rend(); ++st) {
      g += st->reward;
      auto& e = tree[st->node].edges[st->action];
      e.n += 1;
      e.w += g;
      tree[st->node].n += 1;
      tree[st->node].w += g;
    }
  }

  res.iterations = cfg.iterations;
  res.tree_size = tree.size();
  res.q.assign(na, std::numeric_limits<double>::quiet_NaN());
  res.visits.assign(na, 0);
  const Node& root = tree[0];
  bool have = false;
  double best = 0.0;
  res.action = root.allowed.first();
  for (Action a : root.allowed) {
    const auto& e = root.edges[a];
    res.visits[a] = e.n;
    if (e.n == 0) continue;
    res.q[a] = e.w / e.n;
    if (!have || res.q[a] > best) {
      have = true;
      best = res.q[a];
      res.action = a;
    }
  }
  return res;
}

template <Model M>
MctsResult mcts_decide(const M& m, const typename M::State& s, const MctsConfig& cfg,
                       const Advice<typename M::State>* advice = nullptr) {
  Rng rng(cfg.seed);
  return mcts_decide(m, s, cfg, advice, rng);
}

/// MCTS as a policy: each decision searches with the episode's generator.
template <Model M>
Policy<typename M::State> mcts_policy(const M& m, MctsConfig cfg, const Advice<typename M::State>* advice = nullptr) {
  using S = typename M::State;
  return Policy<S>(
      "mcts", [&m, cfg, advice](const S& s, Rng& rng) { return mcts_decide(m, s, cfg, advice, rng).action; },
      false);
}

}  // namespace polsyn
