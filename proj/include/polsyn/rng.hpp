#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace polsyn {

/// SplitMix64 step; used for seeding and stream derivation.
std::uint64_t splitmix64(std::uint64_t& state);

/**
 * xoshiro256** generator (Blackman & Vigna). Every draw the library makes goes
 * through this class, so outputs do not depend on the standard library's
 * distribution implementations.
 *
 * Streams: `Rng::stream(master, i)` derives the generator for the i-th
 * independent job (episode, path, game) from a master seed. Derivation is a
 * pure function of (master, i), so jobs can run in any order or on any thread.
 */
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed = 0);

  static Rng stream(std::uint64_t master, std::uint64_t index);
  static Rng stream(std::uint64_t master, std::uint64_t a, std::uint64_t b);

  std::uint64_t next();
  std::uint64_t operator()() { return next(); }

  /// Uniform double in [0, 1) with 53 bits of precision.
  double uniform();
  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);
  bool bernoulli(double p) { return uniform() < p; }

  /// Equivalent to 2^128 calls to next().
  void jump();

  static constexpr std::uint64_t min() { return 0; }
  static constexpr std::uint64_t max() { return std::numeric_limits<std::uint64_t>::max(); }

  const std::array<std::uint64_t, 4>& state() const { return s_; }

 private:
  std::array<std::uint64_t, 4> s_{};
};

}  // namespace polsyn
