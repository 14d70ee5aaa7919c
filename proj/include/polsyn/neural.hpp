#pragma once

#include <memory>
#include <string>

#include "polsyn/advice.hpp"
#include "polsyn/encoders.hpp"
#include "polsyn/nn.hpp"

namespace polsyn {

/// Network outputs at s, checked against the action count.
template <class S>
std::vector<float> network_scores(const nn::Network& net, const Encoder<S>& enc, const S& s, std::size_t num_actions) {
  auto out = net.infer(enc(s));
  if (out.size() != num_actions)
    throw nn::NnError("network output dimension " + std::to_string(out.size()) + " does not match " +
                      std::to_string(num_actions) + " actions");
  return out;
}

template <Model M>
ActionSet neural_allowed(const M& m, const nn::Network& net, const Encoder<typename M::State>& enc,
                         const typename M::State& s, double t) {
  return neural_filter(m.actions(s), network_scores(net, enc, s, m.num_actions()), t);
}

/// The network and encoder are shared by every copy of the advice.
template <Model M>
Advice<typename M::State> neural_advice(const M& m, std::shared_ptr<const nn::Network> net,
                                        Encoder<typename M::State> enc, double t) {
  using S = typename M::State;
  if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("threshold must lie in [0,1]");
  return Advice<S>(AdviceKind::neural, "NN >= " + std::to_string(t) + " * max",
                   [&m, net, enc, t](const S& s) { return neural_allowed(m, *net, enc, s, t); });
}

enum class ExtractMode { argmax, threshold_random };

/// argmax: lowest-index legal argmax. threshold_random: uniform over the
/// neural_allowed set at threshold t.
template <Model M>
Policy<typename M::State> extract_policy(const M& m, std::shared_ptr<const nn::Network> net,
                                         Encoder<typename M::State> enc, ExtractMode mode, double t = 0.9) {
  using S = typename M::State;
  if (mode == ExtractMode::argmax) {
    return Policy<S>::from_distribution(
        "neural-argmax",
        [&m, net, enc](const S& s) {
          return Distribution<Action>::point(legal_argmax(m.actions(s), network_scores(*net, enc, s, m.num_actions())));
        },
        true);
  }
  return Policy<S>::from_distribution(
      "neural-threshold",
      [&m, net, enc, t](const S& s) {
        return Distribution<Action>::uniform(neural_allowed(m, *net, enc, s, t).to_vector());
      },
      false);
}

}  // namespace polsyn
