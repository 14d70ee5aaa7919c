#pragma once

#include <bit>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace polsyn {

using Action = std::uint32_t;

inline constexpr std::size_t kMaxActions = 32;

/// Set of action indices below kMaxActions, stored as a bitmask.
class ActionSet {
 public:
  constexpr ActionSet() = default;
  constexpr explicit ActionSet(std::uint32_t bits) : bits_(bits) {}

  static constexpr ActionSet all(std::size_t n) {
    return ActionSet(n >= 32 ? ~0u : ((1u << n) - 1u));
  }

  constexpr bool contains(Action a) const { return a < kMaxActions && (bits_ >> a) & 1u; }
  constexpr void insert(Action a) {
    if (a >= kMaxActions) throw std::out_of_range("ActionSet: action index too large");
    bits_ |= (1u << a);
  }
  constexpr void erase(Action a) {
    if (a < kMaxActions) bits_ &= ~(1u << a);
  }
  constexpr std::size_t size() const { return static_cast<std::size_t>(std::popcount(bits_)); }
  constexpr bool empty() const { return bits_ == 0; }
  constexpr std::uint32_t bits() const { return bits_; }

  /// Lowest member. Undefined on an empty set.
  constexpr Action first() const { return static_cast<Action>(std::countr_zero(bits_)); }

  /// k-th smallest member, k < size().
  constexpr Action nth(std::size_t k) const {
    std::uint32_t b = bits_;
    for (std::size_t i = 0; i < k; ++i) b &= b - 1;
    return static_cast<Action>(std::countr_zero(b));
  }

  constexpr ActionSet operator&(ActionSet o) const { return ActionSet(bits_ & o.bits_); }
  constexpr ActionSet operator|(ActionSet o) const { return ActionSet(bits_ | o.bits_); }
  constexpr bool operator==(const ActionSet&) const = default;
  constexpr bool subset_of(ActionSet o) const { return (bits_ & ~o.bits_) == 0; }

  std::vector<Action> to_vector() const {
    std::vector<Action> out;
    out.reserve(size());
    for (Action a : *this) out.push_back(a);
    return out;
  }

  class iterator {
   public:
    using value_type = Action;
    using difference_type = std::ptrdiff_t;
    constexpr iterator() = default;
    constexpr explicit iterator(std::uint32_t b) : b_(b) {}
    constexpr Action operator*() const { return static_cast<Action>(std::countr_zero(b_)); }
    constexpr iterator& operator++() {
      b_ &= b_ - 1;
      return *this;
    }
    constexpr iterator operator++(int) {
      iterator t = *this;
      ++*this;
      return t;
    }
    constexpr bool operator==(const iterator&) const = default;

   private:
    std::uint32_t b_ = 0;
  };

  constexpr iterator begin() const { return iterator(bits_); }
  constexpr iterator end() const { return iterator(0); }

 private:
  std::uint32_t bits_ = 0;
};

}  // namespace polsyn
