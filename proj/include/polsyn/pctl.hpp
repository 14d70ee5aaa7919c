#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <variant>

namespace polsyn::pctl {

struct StateFormula;
struct PathFormula;
using StatePtr = std::shared_ptr<const StateFormula>;
using PathPtr = std::shared_ptr<const PathFormula>;

/// Closed probability interval [lo, hi] within [0, 1].
struct Interval {
  double lo = 0.0;
  double hi = 1.0;
  bool contains(double p, double tol) const { return p >= lo - tol && p <= hi + tol; }
};

/// How a probability operator resolves nondeterminism on an MDP.
/// On Markov chains all three coincide; `standard` means max on MDPs.
enum class Quantifier { standard, max, min };

struct True {};
struct Atom {
  std::string name;
};
struct And {
  StatePtr lhs, rhs;
};
struct Not {
  StatePtr operand;
};
/// P_J(path), or P_J applied to the complement of `path` when `complement`
/// is set (this is how G and G<=n are expressed: P_J(G phi) = P_{1-J}(F !phi)
/// read as "1 - Pr(F !phi) in J").
struct ProbIn {
  Interval bounds;
  PathPtr path;
  Quantifier quantifier = Quantifier::standard;
  bool complement = false;
};

struct StateFormula {
  std::variant<True, Atom, And, Not, ProbIn> node;
};

struct Next {
  StatePtr operand;
};
struct Until {
  StatePtr lhs, rhs;
};
struct BoundedUntil {
  StatePtr lhs, rhs;
  unsigned bound = 0;
};

struct PathFormula {
  std::variant<Next, Until, BoundedUntil> node;
};

StatePtr make_true();
StatePtr make_false();
StatePtr atom(std::string name);
StatePtr land(StatePtr a, StatePtr b);
StatePtr lnot(StatePtr a);
StatePtr lor(StatePtr a, StatePtr b);
StatePtr implies(StatePtr a, StatePtr b);
StatePtr prob(Interval j, PathPtr path, Quantifier q = Quantifier::standard);

PathPtr next(StatePtr a);
PathPtr until(StatePtr a, StatePtr b);
PathPtr bounded_until(StatePtr a, StatePtr b, unsigned n);
PathPtr eventually(StatePtr a);
PathPtr eventually_within(StatePtr a, unsigned n);

/// P_J(G phi) and P_J(G<=n phi), expressed through the complement of F !phi.
StatePtr prob_always(Interval j, StatePtr a, Quantifier q = Quantifier::standard);
StatePtr prob_always_within(Interval j, StatePtr a, unsigned n, Quantifier q = Quantifier::standard);

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& msg, std::size_t pos)
      : std::runtime_error(msg + " at offset " + std::to_string(pos)), position(pos) {}
  std::size_t position;
};

/// Parses the text syntax documented in the README, e.g.
/// `P[0.9,1] (!hole U<=20 target)` or `Pmax[1,1](F target) & !hole`.
StatePtr parse_state(const std::string& text);

std::string to_string(const StateFormula& f);
std::string to_string(const PathFormula& f);

}  // namespace polsyn::pctl
