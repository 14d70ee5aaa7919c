#pragma once

// Brute-force reference computations, deliberately naive.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "polsyn/mdp.hpp"
#include "polsyn/rng.hpp"

namespace oracle {

using polsyn::Action;
using polsyn::Mdp;
using polsyn::Rng;
using polsyn::StateId;
using Rational = boost::multiprecision::cpp_rational;

struct RandomMdpSpec {
  std::size_t min_states = 3, max_states = 50;
  std::size_t max_actions = 4;
  /// States with more than one action; caps the number of deterministic policies.
  std::size_t choice_states = 5;
  std::size_t max_outcomes = 3;
};

/// Plain description of a random MDP, kept alongside the library object.
struct RandomMdp {
  std::size_t n = 0, na = 0;
  // rows[s][k] = (action, [(next, prob, reward)])
  struct Row {
    Action action;
    std::vector<std::tuple<StateId, double, double>> out;
  };
  std::vector<std::vector<Row>> rows;
  std::vector<double> terminal;
  std::vector<bool> goal, unsafe;
  Mdp mdp;
};

inline std::vector<double> random_simplex(Rng& rng, std::size_t k) {
  std::vector<double> w(k);
  double sum = 0.0;
  for (auto& x : w) {
    x = 0.05 + rng.uniform();
    sum += x;
  }
  for (auto& x : w) x /= sum;
  // exact sum to 1 for the validator
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < k; ++i) acc += w[i];
  w.back() = 1.0 - acc;
  return w;
}

inline RandomMdp random_mdp(Rng& rng, const RandomMdpSpec& spec = {}) {
  RandomMdp r;
  r.n = spec.min_states + rng.below(spec.max_states - spec.min_states + 1);
  r.na = 1 + rng.below(spec.max_actions);
  r.rows.resize(r.n);
  r.terminal.resize(r.n);
  r.goal.assign(r.n, false);
  r.unsafe.assign(r.n, false);
  std::vector<bool> multi(r.n, false);
  for (std::size_t k = 0; k < spec.choice_states && r.na > 1; ++k) multi[rng.below(r.n)] = true;
  const std::size_t goals = 1 + rng.below(std::max<std::size_t>(1, r.n / 8));
  for (std::size_t k = 0; k < goals; ++k) r.goal[rng.below(r.n)] = true;
  for (std::size_t s = 0; s < r.n; ++s) r.unsafe[s] = !r.goal[s] && rng.uniform() < 0.15;
  for (std::size_t s = 0; s < r.n; ++s) {
    r.terminal[s] = std::round((rng.uniform() * 4.0 - 2.0) * 8.0) / 8.0;
    std::vector<Action> acts;
    if (multi[s]) {
      for (Action a = 0; a < r.na; ++a)
        if (rng.uniform() < 0.7) acts.push_back(a);
      if (acts.size() < 2) acts = {0, static_cast<Action>(r.na - 1)};
    } else {
      acts = {static_cast<Action>(rng.below(r.na))};
    }
    for (Action a : acts) {
      const std::size_t k = 1 + rng.below(std::min(spec.max_outcomes, r.n));
      std::vector<StateId> succ;
      while (succ.size() < k) {
        const auto t = static_cast<StateId>(rng.below(r.n));
        if (std::find(succ.begin(), succ.end(), t) == succ.end()) succ.push_back(t);
      }
      const auto w = random_simplex(rng, k);
      RandomMdp::Row row{a, {}};
      for (std::size_t i = 0; i < k; ++i)
        row.out.emplace_back(succ[i], w[i], std::round((rng.uniform() * 6.0 - 3.0) * 4.0) / 4.0);
      r.rows[s].push_back(std::move(row));
    }
  }
  r.mdp = Mdp(r.n, r.na, {"goal", "unsafe"});
  for (StateId s = 0; s < r.n; ++s) {
    for (const auto& row : r.rows[s]) {
      std::vector<polsyn::Transition<StateId>> outs;
      for (const auto& [t, p, rw] : row.out) outs.push_back({t, p, rw});
      r.mdp.add_choice(s, row.action, std::move(outs));
    }
    r.mdp.set_terminal_reward(s, r.terminal[s]);
    if (r.goal[s]) r.mdp.add_label(s, "goal");
    if (r.unsafe[s]) r.mdp.add_label(s, "unsafe");
  }
  r.mdp.validate();
  return r;
}

/// Number of memoryless deterministic policies.
inline double policy_count(const RandomMdp& r) {
  double c = 1.0;
  for (const auto& rows : r.rows) c *= static_cast<double>(rows.size());
  return c;
}

/// Dense Gaussian elimination with partial pivoting; A is n x n row-major.
inline std::vector<double> solve(std::vector<double> a, std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(a[r * n + c]) > std::abs(a[piv * n + c])) piv = r;
    if (piv != c) {
      for (std::size_t k = 0; k < n; ++k) std::swap(a[c * n + k], a[piv * n + k]);
      std::swap(b[c], b[piv]);
    }
    const double d = a[c * n + c];
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c) continue;
      const double f = a[r * n + c] / d;
      if (f == 0.0) continue;
      for (std::size_t k = c; k < n; ++k) a[r * n + k] -= f * a[c * n + k];
      b[r] -= f * b[c];
    }
  }
  for (std::size_t c = 0; c < n; ++c) b[c] /= a[c * n + c];
  return b;
}

/// Reachability probabilities of the chain induced by choice[s] (index into rows[s]).
inline std::vector<double> reach_under(const RandomMdp& r, const std::vector<std::size_t>& choice) {
  const std::size_t n = r.n;
  // states that can reach the goal in the policy graph
  std::vector<bool> can(n, false);
  for (std::size_t s = 0; s < n; ++s) can[s] = r.goal[s];
  for (bool changed = true; changed;) {
    changed = false;
    for (std::size_t s = 0; s < n; ++s) {
      if (can[s]) continue;
      for (const auto& [t, p, rw] : r.rows[s][choice[s]].out)
        if (can[t]) {
          can[s] = true;
          changed = true;
          break;
        }
    }
  }
  std::vector<std::size_t> idx(n, SIZE_MAX);
  std::vector<std::size_t> open;
  for (std::size_t s = 0; s < n; ++s)
    if (can[s] && !r.goal[s]) {
      idx[s] = open.size();
      open.push_back(s);
    }
  const std::size_t m = open.size();
  std::vector<double> a(m * m, 0.0), b(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    a[i * m + i] = 1.0;
    for (const auto& [t, p, rw] : r.rows[open[i]][choice[open[i]]].out) {
      if (r.goal[t]) b[i] += p;
      else if (idx[t] != SIZE_MAX) a[i * m + idx[t]] -= p;
    }
  }
  const auto x = m ? solve(a, b) : std::vector<double>{};
  std::vector<double> out(n, 0.0);
  for (std::size_t s = 0; s < n; ++s) out[s] = r.goal[s] ? 1.0 : (idx[s] != SIZE_MAX ? x[idx[s]] : 0.0);
  return out;
}

/// Per-state maximum over every memoryless deterministic policy.
inline std::vector<double> max_reach_by_enumeration(const RandomMdp& r) {
  std::vector<std::size_t> choice(r.n, 0);
  std::vector<double> best(r.n, 0.0);
  while (true) {
    const auto p = reach_under(r, choice);
    for (std::size_t s = 0; s < r.n; ++s) best[s] = std::max(best[s], p[s]);
    std::size_t s = 0;
    for (; s < r.n; ++s) {
      if (++choice[s] < r.rows[s].size()) break;
      choice[s] = 0;
    }
    if (s == r.n) break;
  }
  return best;
}

/// Reach probabilities of a deterministic action table (action ids, not row indices).
inline std::vector<double> reach_of_policy(const RandomMdp& r, const std::vector<Action>& table) {
  std::vector<std::size_t> choice(r.n, 0);
  for (std::size_t s = 0; s < r.n; ++s)
    for (std::size_t k = 0; k < r.rows[s].size(); ++k)
      if (r.rows[s][k].action == table[s]) choice[s] = k;
  return reach_under(r, choice);
}

/// Optimal h-step total reward by walking the full outcome tree (no memo).
inline double tree_total(const RandomMdp& r, StateId s, std::size_t h) {
  if (h == 0) return r.terminal[s];
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& row : r.rows[s]) {
    double v = 0.0;
    for (const auto& [t, p, rw] : row.out) v += p * (rw + tree_total(r, t, h - 1));
    best = std::max(best, v);
  }
  return best;
}

/// Best probability of avoiding unsafe states for k more steps, by outcome tree.
inline double tree_safe(const RandomMdp& r, StateId s, std::size_t k) {
  if (r.unsafe[s]) return 0.0;
  if (k == 0) return 1.0;
  double best = 0.0;
  for (const auto& row : r.rows[s]) {
    double v = 0.0;
    for (const auto& [t, p, rw] : row.out) v += p * tree_safe(r, t, k - 1);
    best = std::max(best, v);
  }
  return best;
}

/// eta_H(s, a) by outcome tree; 0 for actions not available at s.
inline std::vector<double> tree_eta(const RandomMdp& r, StateId s, std::size_t h) {
  std::vector<double> out(r.na, 0.0);
  if (r.unsafe[s]) return out;
  for (const auto& row : r.rows[s]) {
    double v = 0.0;
    for (const auto& [t, p, rw] : row.out) v += p * tree_safe(r, t, h - 1);
    out[row.action] = v;
  }
  return out;
}

/// A Markov chain with rational transition probabilities.
struct RationalChain {
  std::vector<std::vector<std::pair<StateId, Rational>>> rows;
  std::vector<bool> allowed, goal;
  polsyn::Mc mc;
};

inline RationalChain random_chain(Rng& rng, std::size_t n) {
  RationalChain c;
  c.rows.resize(n);
  c.allowed.resize(n);
  c.goal.resize(n);
  c.mc = polsyn::Mc(n, {"a", "b"});
  for (StateId s = 0; s < n; ++s) {
    c.goal[s] = rng.uniform() < 0.25;
    c.allowed[s] = rng.uniform() < 0.75;
    const std::size_t k = 1 + rng.below(std::min<std::size_t>(3, n));
    std::vector<StateId> succ;
    while (succ.size() < k) {
      const auto t = static_cast<StateId>(rng.below(n));
      if (std::find(succ.begin(), succ.end(), t) == succ.end()) succ.push_back(t);
    }
    // weights w_i / sum, integers in 1..9
    std::vector<long> w(k);
    long sum = 0;
    for (auto& x : w) {
      x = 1 + static_cast<long>(rng.below(9));
      sum += x;
    }
    std::vector<std::pair<StateId, double>> row;
    for (std::size_t i = 0; i < k; ++i) {
      c.rows[s].emplace_back(succ[i], Rational(w[i], sum));
      row.emplace_back(succ[i], static_cast<double>(w[i]) / static_cast<double>(sum));
    }
    c.mc.set_transitions(s, row);
    if (c.allowed[s]) c.mc.add_label(s, "a");
    if (c.goal[s]) c.mc.add_label(s, "b");
  }
  c.mc.validate();
  return c;
}

/// Pr(a U<=n b) from s, summing the probability of every path prefix.
inline Rational bounded_until_by_paths(const RationalChain& c, StateId s, unsigned n) {
  if (c.goal[s]) return Rational(1);
  if (!c.allowed[s] || n == 0) return Rational(0);
  Rational acc(0);
  for (const auto& [t, p] : c.rows[s]) acc += p * bounded_until_by_paths(c, t, n - 1);
  return acc;
}

}  // namespace oracle
