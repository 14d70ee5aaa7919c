#pragma once

#include <atomic>
#include <chrono>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "json.hpp"
#include "polsyn/action.hpp"
#include "polsyn/model_check.hpp"

namespace polsyn {

enum class AdviceKind { qualitative, quantitative, neural, custom };

std::string advice_kind_name(AdviceKind k);

/// Per-call latency samples of an advice function.
class LatencyRecorder {
 public:
  void record(double seconds);
  std::size_t count() const { return count_.load(); }
  double total_seconds() const { return static_cast<double>(total_ns_.load()) * 1e-9; }
  double median_seconds() const;
  void reset();

 private:
  std::atomic<std::size_t> count_{0};
  std::atomic<std::int64_t> total_ns_{0};
  mutable std::mutex mu_;
  std::vector<double> samples_;
};

/**
 * Action filter: allowed(s) is a subset of the legal actions of s (it may be
 * empty, in which case the caller decides how to fall back). Copies share the
 * latency recorder.
 */
template <class S>
class Advice {
 public:
  using Fn = std::function<ActionSet(const S&)>;

  Advice(AdviceKind kind, std::string description, Fn fn)
      : kind_(kind),
        description_(std::move(description)),
        fn_(std::move(fn)),
        latency_(std::make_shared<LatencyRecorder>()) {}

  ActionSet allowed(const S& s) const {
    const auto t0 = std::chrono::steady_clock::now();
    ActionSet out = fn_(s);
    latency_->record(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    return out;
  }

  AdviceKind kind() const { return kind_; }
  const std::string& description() const { return description_; }
  LatencyRecorder& latency() const { return *latency_; }

 private:
  AdviceKind kind_;
  std::string description_;
  Fn fn_;
  std::shared_ptr<LatencyRecorder> latency_;
};

/// Actions of `legal` with value >= t * max over `legal` (minus 1e-12).
/// A zero maximum lets every legal action through.
ActionSet threshold_filter(ActionSet legal, const std::vector<double>& values, double t);

/// Neural thresholding: a passes when out[a] >= t * max_b out[b] over all
/// outputs; illegal actions are then removed, and an empty result becomes the
/// legal argmax (lowest index on ties).
ActionSet neural_filter(ActionSet legal, const std::vector<float>& outputs, double t);

/// Lowest-index legal action with the largest output.
Action legal_argmax(ActionSet legal, const std::vector<float>& outputs);

/// eta_H-threshold filter at s, with unsafe states given by a predicate.
template <Model M>
ActionSet quantitative_allowed(const M& m, const typename M::State& s, std::size_t horizon, double t,
                               const std::function<bool(const typename M::State&)>& unsafe) {
  if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("threshold must lie in [0,1]");
  const auto r = eta(m, s, horizon, unsafe);
  return threshold_filter(m.actions(s), r.eta.values, t);
}

/// Unsafe means outcome(s) == loss.
template <Model M>
std::function<bool(const typename M::State&)> loss_predicate(const M& m) {
  return [&m](const typename M::State& s) { return m.outcome(s) == Outcome::loss; };
}

/// Quantitative advice on a model with states S, computed on a safety model
/// through `project` (identity when the model is its own safety model).
template <class S, Model Safety>
Advice<S> quantitative_advice(const Safety& safety, std::size_t horizon, double t,
                              std::function<typename Safety::State(const S&)> project) {
  auto unsafe = loss_predicate(safety);
  const AdviceKind kind = t >= 1.0 ? AdviceKind::qualitative : AdviceKind::quantitative;
  std::string desc = "eta_" + std::to_string(horizon) + " >= " + std::to_string(t) + " * max";
  return Advice<S>(kind, std::move(desc), [&safety, horizon, t, unsafe, project](const S& s) {
    return quantitative_allowed(safety, project(s), horizon, t, unsafe);
  });
}

}  // namespace polsyn
