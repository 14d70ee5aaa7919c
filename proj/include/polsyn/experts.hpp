#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "polsyn/frozen_lake.hpp"
#include "polsyn/model_check.hpp"
#include "polsyn/pacman.hpp"

namespace polsyn {

/**
 * Exact Frozen Lake expert over every non-wall cell of every layout: maximal
 * probability to reach the target, and among reachability-optimal policies
 * one minimizing the expected number of steps given that the target is reached.
 */
class FrozenLakeExpert {
 public:
  explicit FrozenLakeExpert(const FrozenLake& lake, const CheckOptions& opts = {});

  const Explored<LakeState>& explored() const { return ex_; }
  const ReachResult& reach() const { return reach_; }
  /// Conditional step counts; absent when no state can reach a target.
  const std::optional<ConditionalSteps>& conditional() const { return cond_; }

  double probability(const LakeState& s) const { return reach_.probability[id(s)]; }
  /// Expected steps to the target given it is reached (+inf if p = 0).
  double expected_steps(const LakeState& s) const;
  Action action(const LakeState& s) const { return policy_[id(s)]; }
  /// Q(s, a) = sum P(s, a, s') p(s'); illegal actions get the legal minimum.
  std::vector<double> q_values(const LakeState& s) const;
  /// sum P(s, a, s') p(s') gamma^T(s'), T the conditional step count;
  /// illegal actions get the legal minimum.
  std::vector<double> discounted_scores(const LakeState& s, double gamma = 0.95) const;

  Policy<LakeState> policy() const;

 private:
  StateId id(const LakeState& s) const;

  const FrozenLake* lake_;
  Explored<LakeState> ex_;
  ReachResult reach_;
  std::optional<ConditionalSteps> cond_;
  std::vector<Action> policy_;
};

/// eta_H of the safety abstraction at the projection of s; illegal actions
/// get the legal minimum.
std::vector<double> pacman_eta_scores(const PacmanSafety& safety, const PacmanState& s, std::size_t horizon);

}  // namespace polsyn
