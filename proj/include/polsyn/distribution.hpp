#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "polsyn/rng.hpp"

namespace polsyn {

inline constexpr double kProbabilityTolerance = 1e-9;

/// Finite probability distribution with a non-empty support of distinct outcomes.
template <class T>
class Distribution {
 public:
  using Entry = std::pair<T, double>;

  Distribution() = default;
  explicit Distribution(std::vector<Entry> entries) : entries_(std::move(entries)) { validate(); }

  static Distribution point(T outcome) { return Distribution({{std::move(outcome), 1.0}}); }

  /// Uniform over the given outcomes; they must be distinct.
  static Distribution uniform(const std::vector<T>& outcomes) {
    if (outcomes.empty()) throw std::invalid_argument("Distribution: empty support");
    std::vector<Entry> e;
    e.reserve(outcomes.size());
    const double p = 1.0 / static_cast<double>(outcomes.size());
    for (const auto& o : outcomes) e.emplace_back(o, p);
    return Distribution(std::move(e));
  }

  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

  double probability(const T& outcome) const {
    for (const auto& [o, p] : entries_)
      if (o == outcome) return p;
    return 0.0;
  }

  const T& sample(Rng& rng) const {
    const double u = rng.uniform();
    double acc = 0.0;
    for (const auto& [o, p] : entries_) {
      acc += p;
      if (u < acc) return o;
    }
    return entries_.back().first;
  }

 private:
  void validate() const {
    if (entries_.empty()) throw std::invalid_argument("Distribution: empty support");
    double total = 0.0;
    for (const auto& [o, p] : entries_) {
      if (!(p > 0.0 && p <= 1.0 + kProbabilityTolerance))
        throw std::invalid_argument("Distribution: probability outside (0, 1]");
      total += p;
    }
    if (std::abs(total - 1.0) > kProbabilityTolerance)
      throw std::invalid_argument("Distribution: probabilities sum to " + std::to_string(total));
    for (std::size_t i = 0; i < entries_.size(); ++i)
      for (std::size_t j = i + 1; j < entries_.size(); ++j)
        if (entries_[i].first == entries_[j].first)
          throw std::invalid_argument("Distribution: duplicate outcome");
  }

  std::vector<Entry> entries_;
};

}  // namespace polsyn
