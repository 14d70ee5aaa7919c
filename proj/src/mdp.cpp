#include "polsyn/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <stdexcept>

namespace polsyn {

Mdp::Mdp(std::size_t num_states, std::size_t num_actions, std::vector<std::string> label_names)
    : num_actions_(num_actions),
      choices_(num_states),
      action_sets_(num_states),
      terminal_reward_(num_states, 0.0),
      labels_(num_states, 0),
      outcomes_(num_states, Outcome::none),
      absorbing_(num_states, false),
      label_names_(std::move(label_names)) {
  if (num_actions == 0 || num_actions > kMaxActions) throw std::invalid_argument("Mdp: bad action count");
  if (label_names_.size() > 64) throw std::invalid_argument("Mdp: at most 64 atomic propositions");
}

void Mdp::add_choice(StateId s, Action a, std::vector<Transition<StateId>> outcomes) {
  if (s >= choices_.size()) throw std::out_of_range("Mdp::add_choice: state out of range");
  if (a >= num_actions_) throw std::out_of_range("Mdp::add_choice: action out of range");
  auto& cs = choices_[s];
  if (std::any_of(cs.begin(), cs.end(), [a](const Choice& c) { return c.action == a; }))
    throw std::invalid_argument("Mdp::add_choice: duplicate action");
  cs.push_back({a, std::move(outcomes)});
  validated_ = false;
}

void Mdp::add_label(StateId s, const std::string& name) { labels_.at(s) |= 1ULL << label_index(name); }

std::size_t Mdp::label_index(const std::string& label) const {
  for (std::size_t i = 0; i < label_names_.size(); ++i)
    if (label_names_[i] == label) return i;
  throw std::invalid_argument("unknown atomic proposition: " + label);
}

void Mdp::validate() {
  const std::size_t n = choices_.size();
  min_reward_ = std::numeric_limits<double>::infinity();
  max_reward_ = -std::numeric_limits<double>::infinity();
  for (StateId s = 0; s < n; ++s) {
    auto& cs = choices_[s];
    if (cs.empty()) throw std::invalid_argument("Mdp: state " + std::to_string(s) + " has no actions");
    std::sort(cs.begin(), cs.end(), [](const Choice& x, const Choice& y) { return x.action < y.action; });
    ActionSet set;
    bool absorbing = true;
    for (const auto& c : cs) {
      set.insert(c.action);
      if (c.outcomes.empty()) throw std::invalid_argument("Mdp: empty distribution");
      double total = 0.0;
      for (std::size_t i = 0; i < c.outcomes.size(); ++i) {
        const auto& t = c.outcomes[i];
        if (t.next >= n) throw std::invalid_argument("Mdp: successor out of range");
        if (!(t.prob > 0.0 && t.prob <= 1.0 + kProbabilityTolerance))
          throw std::invalid_argument("Mdp: probability outside (0, 1]");
        if (!std::isfinite(t.reward)) throw std::invalid_argument("Mdp: non-finite reward");
        for (std::size_t j = 0; j < i; ++j)
          if (c.outcomes[j].next == t.next) throw std::invalid_argument("Mdp: duplicate successor");
        total += t.prob;
        min_reward_ = std::min(min_reward_, t.reward);
        max_reward_ = std::max(max_reward_, t.reward);
      }
      if (std::abs(total - 1.0) > kProbabilityTolerance)
        throw std::invalid_argument("Mdp: distribution of state " + std::to_string(s) + " sums to " +
                                    std::to_string(total));
      if (!(c.outcomes.size() == 1 && c.outcomes[0].next == s && c.outcomes[0].reward == 0.0)) absorbing = false;
    }
    action_sets_[s] = set;
    absorbing_[s] = absorbing;
  }
  if (n == 0) min_reward_ = max_reward_ = 0.0;
  min_terminal_ = n ? *std::min_element(terminal_reward_.begin(), terminal_reward_.end()) : 0.0;
  max_terminal_ = n ? *std::max_element(terminal_reward_.begin(), terminal_reward_.end()) : 0.0;
  validated_ = true;
}

const Choice& Mdp::choice(StateId s, Action a) const {
  for (const auto& c : choices_.at(s))
    if (c.action == a) return c;
  throw std::invalid_argument("action unavailable");
}

Range Mdp::return_bounds(std::size_t h) const {
  // Absorbing states pay zero, so a path may collect fewer than h rewards.
  const double steps = static_cast<double>(h);
  return {steps * std::min(min_reward_, 0.0) + min_terminal_, steps * std::max(max_reward_, 0.0) + max_terminal_};
}

std::pair<StateId, double> Mdp::sample(StateId s, Action a, Rng& rng) const {
  const auto& outs = choice(s, a).outcomes;
  const double u = rng.uniform();
  double acc = 0.0;
  for (const auto& t : outs) {
    acc += t.prob;
    if (u < acc) return {t.next, t.reward};
  }
  return {outs.back().next, outs.back().reward};
}

std::vector<bool> Mdp::states_with(const std::string& label) const {
  const std::size_t bit = label_index(label);
  std::vector<bool> out(num_states());
  for (StateId s = 0; s < num_states(); ++s) out[s] = (labels_[s] >> bit) & 1u;
  return out;
}

Mc::Mc(std::size_t num_states, std::vector<std::string> label_names)
    : rows_(num_states), labels_(num_states, 0), label_names_(std::move(label_names)) {
  if (label_names_.size() > 64) throw std::invalid_argument("Mc: at most 64 atomic propositions");
}

void Mc::set_transitions(StateId s, std::vector<std::pair<StateId, double>> row) {
  if (s >= rows_.size()) throw std::out_of_range("Mc::set_transitions: state out of range");
  rows_[s] = std::move(row);
}

void Mc::add_label(StateId s, const std::string& name) { labels_.at(s) |= 1ULL << label_index(name); }

std::size_t Mc::label_index(const std::string& label) const {
  for (std::size_t i = 0; i < label_names_.size(); ++i)
    if (label_names_[i] == label) return i;
  throw std::invalid_argument("unknown atomic proposition: " + label);
}

void Mc::validate() const {
  for (StateId s = 0; s < rows_.size(); ++s) {
    const auto& row = rows_[s];
    if (row.empty()) throw std::invalid_argument("Mc: transition function not total");
    double total = 0.0;
    for (const auto& [t, p] : row) {
      if (t >= rows_.size()) throw std::invalid_argument("Mc: successor out of range");
      if (!(p > 0.0 && p <= 1.0 + kProbabilityTolerance)) throw std::invalid_argument("Mc: bad probability");
      total += p;
    }
    if (std::abs(total - 1.0) > kProbabilityTolerance) throw std::invalid_argument("Mc: row does not sum to 1");
  }
}

PolicyTable deterministic_table(const std::vector<Action>& choice) {
  PolicyTable t;
  t.reserve(choice.size());
  for (Action a : choice) t.push_back(Distribution<Action>::point(a));
  return t;
}

Mc induced_mc(const Mdp& mdp, const PolicyTable& policy) {
  if (policy.size() != mdp.num_states()) throw std::invalid_argument("induced_mc: policy size mismatch");
  Mc mc(mdp.num_states(), mdp.label_names());
  for (StateId s = 0; s < mdp.num_states(); ++s) {
    std::map<StateId, double> row;
    for (const auto& [a, pa] : policy[s].entries())
      for (const auto& t : mdp.choice(s, a).outcomes) row[t.next] += pa * t.prob;
    mc.set_transitions(s, {row.begin(), row.end()});
    mc.set_label_mask(s, mdp.label_mask(s));
  }
  mc.validate();
  return mc;
}

Policy<StateId> table_policy(std::string name, std::vector<Action> table) {
  auto shared = std::make_shared<const std::vector<Action>>(std::move(table));
  return Policy<StateId>(
      std::move(name), [shared](const StateId& s, Rng&) { return shared->at(s); }, true,
      [shared](const StateId& s) { return Distribution<Action>::point(shared->at(s)); });
}

}  // namespace polsyn
