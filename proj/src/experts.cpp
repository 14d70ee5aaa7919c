#include "polsyn/experts.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace polsyn {

namespace {

std::vector<LakeState> all_cells(const FrozenLake& lake) {
  std::vector<LakeState> roots;
  for (std::size_t i = 0; i < lake.num_layouts(); ++i) {
    auto s = lake.non_wall_states(i);
    roots.insert(roots.end(), s.begin(), s.end());
  }
  return roots;
}

}  // namespace

FrozenLakeExpert::FrozenLakeExpert(const FrozenLake& lake, const CheckOptions& opts)
    : lake_(&lake), ex_(explore(lake, all_cells(lake), 50'000'000)) {
  const auto goal = ex_.mdp.states_with("target");
  reach_ = mdp_max_reach(ex_.mdp, goal, opts);
  policy_ = reach_.policy;
  const auto& p = reach_.probability.values;
  const auto it = std::find_if(p.begin(), p.end(), [](double v) { return v > 0.0; });
  if (it != p.end()) {
    cond_ = min_conditional_steps(ex_.mdp, goal, reach_, static_cast<StateId>(it - p.begin()), opts);
    policy_ = cond_->policy;
  }
}

StateId FrozenLakeExpert::id(const LakeState& s) const {
  const auto i = ex_.find(s);
  if (!i) throw std::invalid_argument("frozen lake expert: unknown state");
  return *i;
}

double FrozenLakeExpert::expected_steps(const LakeState& s) const {
  if (!cond_) return std::numeric_limits<double>::infinity();
  return cond_->expected_steps[id(s)];
}

std::vector<double> FrozenLakeExpert::q_values(const LakeState& s) const {
  const StateId i = id(s);
  const auto& p = reach_.probability.values;
  std::vector<double> q(ex_.mdp.num_actions(), 0.0);
  double lo = std::numeric_limits<double>::infinity();
  for (const auto& c : ex_.mdp.choices(i)) {
    double v = 0.0;
    for (const auto& t : c.outcomes) v += t.prob * p[t.next];
    q[c.action] = v;
    lo = std::min(lo, v);
  }
  const ActionSet legal = ex_.mdp.actions(i);
  for (Action a = 0; a < q.size(); ++a)
    if (!legal.contains(a)) q[a] = lo;
  return q;
}

std::vector<double> FrozenLakeExpert::discounted_scores(const LakeState& s, double gamma) const {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw std::invalid_argument("discount must lie in (0,1]");
  const StateId i = id(s);
  const auto& p = reach_.probability.values;
  std::vector<double> q(ex_.mdp.num_actions(), 0.0);
  double lo = std::numeric_limits<double>::infinity();
  for (const auto& c : ex_.mdp.choices(i)) {
    double v = 0.0;
    for (const auto& t : c.outcomes)
      if (p[t.next] > 0.0) v += t.prob * p[t.next] * std::pow(gamma, cond_->expected_steps[t.next]);
    q[c.action] = v;
    lo = std::min(lo, v);
  }
  const ActionSet legal = ex_.mdp.actions(i);
  for (Action a = 0; a < q.size(); ++a)
    if (!legal.contains(a)) q[a] = lo;
  return q;
}

Policy<LakeState> FrozenLakeExpert::policy() const {
  return Policy<LakeState>::from_distribution(
      "exact", [this](const LakeState& s) { return Distribution<Action>::point(action(s)); }, true);
}

std::vector<double> pacman_eta_scores(const PacmanSafety& safety, const PacmanState& s, std::size_t horizon) {
  const auto r = eta(safety, PacmanSafety::project(s), horizon, [](const SafetyState& t) { return t.lost; });
  std::vector<double> v = r.eta.values;
  double lo = std::numeric_limits<double>::infinity();
  for (Action a : r.eta.actions) lo = std::min(lo, v[a]);
  for (Action a = 0; a < v.size(); ++a)
    if (!r.eta.actions.contains(a)) v[a] = lo;
  return v;
}

}  // namespace polsyn
