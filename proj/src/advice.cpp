#include "polsyn/advice.hpp"

#include <algorithm>
#include <stdexcept>

namespace polsyn {

std::string advice_kind_name(AdviceKind k) {
  switch (k) {
    case AdviceKind::qualitative: return "qualitative";
    case AdviceKind::quantitative: return "quantitative";
    case AdviceKind::neural: return "neural";
    case AdviceKind::custom: return "custom";
  }
  return "custom";
}

void LatencyRecorder::record(double seconds) {
  count_.fetch_add(1);
  total_ns_.fetch_add(static_cast<std::int64_t>(seconds * 1e9));
  std::lock_guard lock(mu_);
  samples_.push_back(seconds);
}

double LatencyRecorder::median_seconds() const {
  std::lock_guard lock(mu_);
  if (samples_.empty()) return 0.0;
  std::vector<double> v = samples_;
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  if (v.size() % 2 == 1) return v[mid];
  const double hi = v[mid];
  const double lo = *std::max_element(v.begin(), v.begin() + mid);
  return 0.5 * (lo + hi);
}

void LatencyRecorder::reset() {
  std::lock_guard lock(mu_);
  samples_.clear();
  count_ = 0;
  total_ns_ = 0;
}

ActionSet threshold_filter(ActionSet legal, const std::vector<double>& values, double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("threshold must lie in [0,1]");
  double best = 0.0;
  for (Action a : legal) best = std::max(best, values.at(a));
  if (best <= 0.0) return legal;
  ActionSet out;
  for (Action a : legal)
    if (values[a] >= t * best - 1e-12) out.insert(a);
  return out;
}

Action legal_argmax(ActionSet legal, const std::vector<float>& outputs) {
  if (legal.empty()) throw std::invalid_argument("no legal action");
  Action best = legal.first();
  for (Action a : legal)
    if (outputs.at(a) > outputs[best]) best = a;
  return best;
}

ActionSet neural_filter(ActionSet legal, const std::vector<float>& outputs, double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("threshold must lie in [0,1]");
  if (outputs.empty()) throw std::invalid_argument("empty network output");
  const float best = *std::max_element(outputs.begin(), outputs.end());
  ActionSet out;
  for (Action a : legal) {
    if (a >= outputs.size()) throw std::invalid_argument("network output narrower than the action set");
    if (static_cast<double>(outputs[a]) >= t * static_cast<double>(best)) out.insert(a);
  }
  if (out.empty()) out.insert(legal_argmax(legal, outputs));
  return out;
}

}  // namespace polsyn
