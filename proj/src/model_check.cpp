#include "polsyn/model_check.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>

namespace polsyn {

nlohmann::json ValueTable::to_json() const {
  nlohmann::json j;
  j["values"] = values;
  if (horizon >= 0) j["horizon"] = horizon;
  j["iterations"] = iterations;
  j["residual"] = residual;
  return j;
}

double ActionValues::max() const {
  double best = -std::numeric_limits<double>::infinity();
  for (Action a : actions) best = std::max(best, values[a]);
  return best;
}

std::vector<Action> ActionValues::argmax(double tol) const {
  const double best = max();
  std::vector<Action> out;
  for (Action a : actions)
    if (values[a] >= best - tol) out.push_back(a);
  return out;
}

nlohmann::json ActionValues::to_json() const {
  nlohmann::json legal = nlohmann::json::array();
  for (Action a : actions) legal.push_back(a);
  return {{"actions", legal}, {"values", values}};
}

namespace {

using Bits = std::vector<bool>;

// -- Markov chains ------------------------------------------------------------

std::vector<std::vector<StateId>> mc_predecessors(const Mc& mc) {
  std::vector<std::vector<StateId>> pre(mc.num_states());
  for (StateId s = 0; s < mc.num_states(); ++s)
    for (const auto& [t, p] : mc.row(s))
      if (p > 0.0) pre[t].push_back(s);
  return pre;
}

/// States that reach `target` through `through` states (targets included).
Bits mc_backward(const std::vector<std::vector<StateId>>& pre, const Bits& target, const Bits& through) {
  Bits seen = target;
  std::deque<StateId> q;
  for (StateId s = 0; s < target.size(); ++s)
    if (target[s]) q.push_back(s);
  while (!q.empty()) {
    const StateId t = q.front();
    q.pop_front();
    for (StateId s : pre[t]) {
      if (seen[s] || !through[s]) continue;
      seen[s] = true;
      q.push_back(s);
    }
  }
  return seen;
}

Bits eval_mc(const Mc& mc, const pctl::StateFormula& f, const CheckOptions& opts);

ValueTable mc_path(const Mc& mc, const pctl::PathFormula& path, const CheckOptions& opts) {
  const std::size_t n = mc.num_states();
  return std::visit(
      [&](const auto& node) -> ValueTable {
        using T = std::decay_t<decltype(node)>;
        if constexpr (std::is_same_v<T, pctl::Next>) {
          const Bits sat = eval_mc(mc, *node.operand, opts);
          ValueTable out;
          out.values.assign(n, 0.0);
          for (StateId s = 0; s < n; ++s)
            for (const auto& [t, p] : mc.row(s))
              if (sat[t]) out.values[s] += p;
          out.iterations = 1;
          return out;
        } else if constexpr (std::is_same_v<T, pctl::Until>) {
          return mc_until(mc, eval_mc(mc, *node.lhs, opts), eval_mc(mc, *node.rhs, opts), opts);
        } else {
          const Bits allowed = eval_mc(mc, *node.lhs, opts);
          const Bits goal = eval_mc(mc, *node.rhs, opts);
          std::vector<double> x(n), y(n);
          for (StateId s = 0; s < n; ++s) x[s] = goal[s] ? 1.0 : 0.0;
          for (unsigned k = 0; k < node.bound; ++k) {
            for (StateId s = 0; s < n; ++s) {
              if (goal[s]) {
                y[s] = 1.0;
              } else if (!allowed[s]) {
                y[s] = 0.0;
              } else {
                double v = 0.0;
                for (const auto& [t, p] : mc.row(s)) v += p * x[t];
                y[s] = v;
              }
            }
            std::swap(x, y);
          }
          ValueTable out;
          out.values = std::move(x);
          out.horizon = node.bound;
          out.iterations = node.bound;
          return out;
        }
      },
      path.node);
}

Bits eval_mc(const Mc& mc, const pctl::StateFormula& f, const CheckOptions& opts) {
  const std::size_t n = mc.num_states();
  return std::visit(
      [&](const auto& node) -> Bits {
        using T = std::decay_t<decltype(node)>;
        if constexpr (std::is_same_v<T, pctl::True>) {
          return Bits(n, true);
        } else if constexpr (std::is_same_v<T, pctl::Atom>) {
          const std::size_t bit = mc.label_index(node.name);
          Bits out(n);
          for (StateId s = 0; s < n; ++s) out[s] = (mc.label_mask(s) >> bit) & 1u;
          return out;
        } else if constexpr (std::is_same_v<T, pctl::And>) {
          Bits a = eval_mc(mc, *node.lhs, opts);
          const Bits b = eval_mc(mc, *node.rhs, opts);
          for (StateId s = 0; s < n; ++s) a[s] = a[s] && b[s];
          return a;
        } else if constexpr (std::is_same_v<T, pctl::Not>) {
          Bits a = eval_mc(mc, *node.operand, opts);
          a.flip();
          return a;
        } else {
          const ValueTable p = mc_path(mc, *node.path, opts);
          Bits out(n);
          for (StateId s = 0; s < n; ++s) {
            const double v = node.complement ? 1.0 - p.values[s] : p.values[s];
            out[s] = node.bounds.contains(v, opts.interval_tolerance);
          }
          return out;
        }
      },
      f.node);
}

// -- MDPs ---------------------------------------------------------------------

std::vector<std::vector<StateId>> mdp_predecessors(const Mdp& mdp) {
  std::vector<std::vector<StateId>> pre(mdp.num_states());
  for (StateId s = 0; s < mdp.num_states(); ++s)
    for (const auto& c : mdp.choices(s))
      for (const auto& t : c.outcomes) pre[t.next].push_back(s);
  for (auto& v : pre) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  }
  return pre;
}

/// Max-probability-zero states: no policy reaches goal through allowed states.
Bits prob0e(const Mdp& mdp, const Bits& allowed, const Bits& goal) {
  const auto pre = mdp_predecessors(mdp);
  Bits reach = goal;
  std::deque<StateId> q;
  for (StateId s = 0; s < goal.size(); ++s)
    if (goal[s]) q.push_back(s);
  while (!q.empty()) {
    const StateId t = q.front();
    q.pop_front();
    for (StateId s : pre[t]) {
      if (reach[s] || !allowed[s]) continue;
      reach[s] = true;
      q.push_back(s);
    }
  }
  reach.flip();
  return reach;
}

/// Max-probability-one states (nested fixpoint).
Bits prob1e(const Mdp& mdp, const Bits& allowed, const Bits& goal) {
  const std::size_t n = mdp.num_states();
  Bits u(n, true);
  while (true) {
    Bits r = goal;
    bool grew = true;
    while (grew) {
      grew = false;
      for (StateId s = 0; s < n; ++s) {
        if (r[s] || !allowed[s] || !u[s]) continue;
        for (const auto& c : mdp.choices(s)) {
          bool inside = true, progress = false;
          for (const auto& t : c.outcomes) {
            if (!u[t.next]) inside = false;
            if (r[t.next]) progress = true;
          }
          if (inside && progress) {
            r[s] = true;
            grew = true;
            break;
          }
        }
      }
    }
    if (r == u) return u;
    u = std::move(r);
  }
}

/// Min-probability-zero states: some policy avoids goal forever (or leaves allowed).
Bits prob0a(const Mdp& mdp, const Bits& allowed, const Bits& goal) {
  const std::size_t n = mdp.num_states();
  Bits forced = goal;  // every policy reaches goal with positive probability
  bool grew = true;
  while (grew) {
    grew = false;
    for (StateId s = 0; s < n; ++s) {
      if (forced[s] || !allowed[s]) continue;
      bool all = true;
      for (const auto& c : mdp.choices(s)) {
        bool any = false;
        for (const auto& t : c.outcomes) any = any || forced[t.next];
        if (!any) {
          all = false;
          break;
        }
      }
      if (all) {
        forced[s] = true;
        grew = true;
      }
    }
  }
  forced.flip();
  return forced;
}

double combine(Optimum opt, double a, double b) { return opt == Optimum::max ? std::max(a, b) : std::min(a, b); }

double action_value(const Choice& c, const std::vector<double>& x) {
  double v = 0.0;
  for (const auto& t : c.outcomes) v += t.prob * x[t.next];
  return v;
}

double best_value(const Mdp& mdp, StateId s, const std::vector<double>& x, Optimum opt) {
  const auto& cs = mdp.choices(s);
  double v = action_value(cs.front(), x);
  for (std::size_t i = 1; i < cs.size(); ++i) v = combine(opt, v, action_value(cs[i], x));
  return v;
}

Bits eval_mdp(const Mdp& mdp, const pctl::StateFormula& f, const CheckOptions& opts);

ValueTable mdp_path(const Mdp& mdp, const pctl::PathFormula& path, Optimum opt, const CheckOptions& opts) {
  const std::size_t n = mdp.num_states();
  return std::visit(
      [&](const auto& node) -> ValueTable {
        using T = std::decay_t<decltype(node)>;
        if constexpr (std::is_same_v<T, pctl::Next>) {
          const Bits sat = eval_mdp(mdp, *node.operand, opts);
          std::vector<double> x(n);
          for (StateId s = 0; s < n; ++s) x[s] = sat[s] ? 1.0 : 0.0;
          ValueTable out;
          out.values.resize(n);
          for (StateId s = 0; s < n; ++s) out.values[s] = best_value(mdp, s, x, opt);
          out.iterations = 1;
          return out;
        } else if constexpr (std::is_same_v<T, pctl::Until>) {
          return mdp_until(mdp, eval_mdp(mdp, *node.lhs, opts), eval_mdp(mdp, *node.rhs, opts), opt, opts);
        } else {
          return mdp_bounded_until(mdp, eval_mdp(mdp, *node.lhs, opts), eval_mdp(mdp, *node.rhs, opts), node.bound,
                                   opt);
        }
      },
      path.node);
}

Optimum resolve(pctl::Quantifier q) { return q == pctl::Quantifier::min ? Optimum::min : Optimum::max; }
Optimum flip(Optimum o) { return o == Optimum::max ? Optimum::min : Optimum::max; }

Bits eval_mdp(const Mdp& mdp, const pctl::StateFormula& f, const CheckOptions& opts) {
  const std::size_t n = mdp.num_states();
  return std::visit(
      [&](const auto& node) -> Bits {
        using T = std::decay_t<decltype(node)>;
        if constexpr (std::is_same_v<T, pctl::True>) {
          return Bits(n, true);
        } else if constexpr (std::is_same_v<T, pctl::Atom>) {
          const std::size_t bit = mdp.label_index(node.name);
          Bits out(n);
          for (StateId s = 0; s < n; ++s) out[s] = (mdp.label_mask(s) >> bit) & 1u;
          return out;
        } else if constexpr (std::is_same_v<T, pctl::And>) {
          Bits a = eval_mdp(mdp, *node.lhs, opts);
          const Bits b = eval_mdp(mdp, *node.rhs, opts);
          for (StateId s = 0; s < n; ++s) a[s] = a[s] && b[s];
          return a;
        } else if constexpr (std::is_same_v<T, pctl::Not>) {
          Bits a = eval_mdp(mdp, *node.operand, opts);
          a.flip();
          return a;
        } else {
          // max Pr(G phi) = 1 - min Pr(F !phi), and vice versa.
          const Optimum opt = resolve(node.quantifier);
          const ValueTable p = mdp_path(mdp, *node.path, node.complement ? flip(opt) : opt, opts);
          Bits out(n);
          for (StateId s = 0; s < n; ++s) {
            const double v = node.complement ? 1.0 - p.values[s] : p.values[s];
            out[s] = node.bounds.contains(v, opts.interval_tolerance);
          }
          return out;
        }
      },
      f.node);
}

}  // namespace

// -- public: Markov chains ------------------------------------------------------

ValueTable mc_until(const Mc& mc, const Bits& allowed, const Bits& goal, const CheckOptions& opts) {
  const std::size_t n = mc.num_states();
  if (allowed.size() != n || goal.size() != n) throw std::invalid_argument("mc_until: state set size mismatch");
  const auto pre = mc_predecessors(mc);
  Bits open(n);
  for (StateId s = 0; s < n; ++s) open[s] = allowed[s] && !goal[s];
  const Bits reach = mc_backward(pre, goal, open);
  Bits zero = reach;
  zero.flip();
  // Prob < 1 iff a prob-0 state is reachable through open states.
  Bits not_one = mc_backward(pre, zero, open);

  ValueTable out;
  out.values.assign(n, 0.0);
  std::vector<StateId> unknown;
  for (StateId s = 0; s < n; ++s) {
    if (!not_one[s]) {
      out.values[s] = 1.0;
    } else if (!zero[s]) {
      unknown.push_back(s);
    }
  }
  for (std::size_t it = 0; it < opts.max_sweeps && !unknown.empty(); ++it) {
    double delta = 0.0;
    for (StateId s : unknown) {
      double v = 0.0;
      for (const auto& [t, p] : mc.row(s)) v += p * out.values[t];
      delta = std::max(delta, std::abs(v - out.values[s]));
      out.values[s] = v;
    }
    out.iterations = it + 1;
    out.residual = delta;
    if (delta < opts.residual) break;
  }
  return out;
}

std::vector<bool> pctl_sat_all(const Mc& mc, const pctl::StateFormula& f, const CheckOptions& opts) {
  return eval_mc(mc, f, opts);
}

bool pctl_sat(const Mc& mc, StateId s, const pctl::StateFormula& f, const CheckOptions& opts) {
  if (s >= mc.num_states()) throw std::out_of_range("pctl_sat: state out of range");
  return eval_mc(mc, f, opts)[s];
}

ValueTable mc_prob_all(const Mc& mc, const pctl::PathFormula& path, const CheckOptions& opts) {
  return mc_path(mc, path, opts);
}

double mc_prob(const Mc& mc, StateId s, const pctl::PathFormula& path, const CheckOptions& opts) {
  if (s >= mc.num_states()) throw std::out_of_range("mc_prob: state out of range");
  return mc_path(mc, path, opts).values[s];
}

// -- public: MDPs -------------------------------------------------------------

std::vector<bool> pctl_sat_all(const Mdp& mdp, const pctl::StateFormula& f, const CheckOptions& opts) {
  return eval_mdp(mdp, f, opts);
}

ValueTable mdp_prob_all(const Mdp& mdp, const pctl::PathFormula& path, Optimum opt, const CheckOptions& opts) {
  return mdp_path(mdp, path, opt, opts);
}

ValueTable mdp_until(const Mdp& mdp, const Bits& allowed, const Bits& goal, Optimum opt, const CheckOptions& opts) {
  const std::size_t n = mdp.num_states();
  if (allowed.size() != n || goal.size() != n) throw std::invalid_argument("mdp_until: state set size mismatch");
  Bits zero, one(n, false);
  if (opt == Optimum::max) {
    zero = prob0e(mdp, allowed, goal);
    one = prob1e(mdp, allowed, goal);
  } else {
    zero = prob0a(mdp, allowed, goal);
    one = goal;
  }
  ValueTable out;
  out.values.assign(n, 0.0);
  std::vector<StateId> unknown;
  for (StateId s = 0; s < n; ++s) {
    if (one[s]) {
      out.values[s] = 1.0;
    } else if (!zero[s]) {
      unknown.push_back(s);
    }
  }
  for (std::size_t it = 0; it < opts.max_sweeps && !unknown.empty(); ++it) {
    double delta = 0.0;
    for (StateId s : unknown) {
      const double v = best_value(mdp, s, out.values, opt);
      delta = std::max(delta, std::abs(v - out.values[s]));
      out.values[s] = v;
    }
    out.iterations = it + 1;
    out.residual = delta;
    if (delta < opts.residual) break;
  }
  return out;
}

ValueTable mdp_bounded_until(const Mdp& mdp, const Bits& allowed, const Bits& goal, unsigned steps, Optimum opt) {
  const std::size_t n = mdp.num_states();
  if (allowed.size() != n || goal.size() != n) throw std::invalid_argument("mdp_bounded_until: size mismatch");
  std::vector<double> x(n), y(n);
  for (StateId s = 0; s < n; ++s) x[s] = goal[s] ? 1.0 : 0.0;
  for (unsigned k = 0; k < steps; ++k) {
    for (StateId s = 0; s < n; ++s) {
      if (goal[s]) {
        y[s] = 1.0;
      } else if (!allowed[s]) {
        y[s] = 0.0;
      } else {
        y[s] = best_value(mdp, s, x, opt);
      }
    }
    std::swap(x, y);
  }
  ValueTable out;
  out.values = std::move(x);
  out.horizon = steps;
  out.iterations = steps;
  return out;
}

ReachResult mdp_max_reach(const Mdp& mdp, const Bits& goal, const CheckOptions& opts, Rng* tie_rng) {
  const std::size_t n = mdp.num_states();
  ReachResult r;
  r.probability = mdp_until(mdp, Bits(n, true), goal, Optimum::max, opts);
  const auto& p = r.probability.values;
  r.optimal_actions.resize(n);
  for (StateId s = 0; s < n; ++s) {
    for (const auto& c : mdp.choices(s))
      if (std::abs(action_value(c, p) - p[s]) <= opts.optimality_tolerance) r.optimal_actions[s].insert(c.action);
    if (r.optimal_actions[s].empty()) r.optimal_actions[s] = mdp.actions(s);
  }

  auto pick = [&](const std::vector<Action>& cands) {
    return tie_rng ? cands[tie_rng->below(cands.size())] : cands.front();
  };

  // Layered attractor over the optimal-action graph.
  constexpr Action kUnset = static_cast<Action>(-1);
  r.policy.assign(n, kUnset);
  Bits done = goal;
  for (StateId s = 0; s < n; ++s)
    if (goal[s]) r.policy[s] = pick(mdp.actions(s).to_vector());
  bool grew = true;
  while (grew) {
    grew = false;
    std::vector<std::pair<StateId, Action>> layer;
    for (StateId s = 0; s < n; ++s) {
      if (done[s] || p[s] <= 0.0) continue;
      std::vector<Action> cands;
      for (Action a : r.optimal_actions[s]) {
        for (const auto& t : mdp.choice(s, a).outcomes) {
          if (done[t.next]) {
            cands.push_back(a);
            break;
          }
        }
      }
      if (!cands.empty()) layer.emplace_back(s, pick(cands));
    }
    for (const auto& [s, a] : layer) {
      r.policy[s] = a;
      done[s] = true;
      grew = true;
    }
  }
  for (StateId s = 0; s < n; ++s) {
    if (r.policy[s] != kUnset) continue;
    r.policy[s] = pick(r.optimal_actions[s].to_vector());
  }
  return r;
}

ConditionalSteps min_conditional_steps(const Mdp& mdp, const Bits& goal, const ReachResult& reach, StateId initial,
                                       const CheckOptions& opts) {
  const std::size_t n = mdp.num_states();
  const auto& p = reach.probability.values;
  if (initial >= n) throw std::out_of_range("min_conditional_steps: state out of range");
  if (p[initial] <= 0.0) throw TargetUnreachable();

  // Conditioned choices: optimal actions only, successors reweighted by p(s')/p(s).
  struct Cond {
    Action action;
    std::vector<std::pair<StateId, double>> outs;
  };
  std::vector<std::vector<Cond>> cond(n);
  for (StateId s = 0; s < n; ++s) {
    if (goal[s] || p[s] <= 0.0) continue;
    for (Action a : reach.optimal_actions[s]) {
      Cond c{a, {}};
      double total = 0.0;
      for (const auto& t : mdp.choice(s, a).outcomes) {
        if (p[t.next] <= 0.0) continue;
        const double w = t.prob * p[t.next] / p[s];
        c.outs.emplace_back(t.next, w);
        total += w;
      }
      if (total <= 0.0) continue;
      for (auto& o : c.outs) o.second /= total;
      cond[s].push_back(std::move(c));
    }
  }

  ConditionalSteps out;
  out.expected_steps.assign(n, std::numeric_limits<double>::infinity());
  std::vector<StateId> open;
  for (StateId s = 0; s < n; ++s) {
    if (goal[s] && p[s] > 0.0) {
      out.expected_steps[s] = 0.0;
    } else if (p[s] > 0.0 && !cond[s].empty()) {
      out.expected_steps[s] = 0.0;
      open.push_back(s);
    }
  }
  auto q_value = [&](const Cond& c) {
    double v = 1.0;
    for (const auto& [t, w] : c.outs) v += w * out.expected_steps[t];
    return v;
  };
  for (std::size_t it = 0; it < opts.max_sweeps && !open.empty(); ++it) {
    double delta = 0.0;
    for (StateId s : open) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& c : cond[s]) best = std::min(best, q_value(c));
      delta = std::max(delta, std::abs(best - out.expected_steps[s]));
      out.expected_steps[s] = best;
    }
    out.iterations = it + 1;
    if (delta < opts.residual) break;
  }

  out.policy = reach.policy;
  for (StateId s : open) {
    double best = std::numeric_limits<double>::infinity();
    Action arg = cond[s].front().action;
    for (const auto& c : cond[s]) {
      const double v = q_value(c);
      if (v < best - 1e-9) {
        best = v;
        arg = c.action;
      }
    }
    out.policy[s] = arg;
  }
  return out;
}

HorizonValues value_iteration_total(const Mdp& mdp, std::size_t h, std::size_t state_cap, Rng* tie_rng) {
  const std::size_t n = mdp.num_states();
  if (n > state_cap) throw StateSpaceTooLarge();
  constexpr double kTie = 1e-12;
  HorizonValues out;
  std::vector<double> v(n), next(n);
  for (StateId s = 0; s < n; ++s) v[s] = mdp.terminal_reward(s);
  out.decisions.resize(h + 1);
  std::vector<Action> ties;
  for (std::size_t k = 1; k <= h; ++k) {
    auto& dec = out.decisions[k];
    dec.resize(n);
    for (StateId s = 0; s < n; ++s) {
      const auto& cs = mdp.choices(s);
      std::vector<double> q(cs.size());
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < cs.size(); ++i) {
        double x = 0.0;
        for (const auto& t : cs[i].outcomes) x += t.prob * (t.reward + v[t.next]);
        q[i] = x;
        best = std::max(best, x);
      }
      ties.clear();
      for (std::size_t i = 0; i < cs.size(); ++i)
        if (q[i] >= best - kTie) ties.push_back(cs[i].action);
      dec[s] = tie_rng ? ties[tie_rng->below(ties.size())] : ties.front();
      next[s] = best;
    }
    std::swap(v, next);
  }
  out.value.values = std::move(v);
  out.value.horizon = static_cast<long>(h);
  out.value.iterations = h;
  if (h > 0) out.policy = out.decisions[h];
  return out;
}

}  // namespace polsyn
