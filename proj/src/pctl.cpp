#include "polsyn/pctl.hpp"

#include <cctype>
#include <cmath>
#include <sstream>
#include <vector>

namespace polsyn::pctl {

StatePtr make_true() { return std::make_shared<StateFormula>(StateFormula{True{}}); }
StatePtr make_false() { return lnot(make_true()); }
StatePtr atom(std::string name) { return std::make_shared<StateFormula>(StateFormula{Atom{std::move(name)}}); }
StatePtr land(StatePtr a, StatePtr b) {
  return std::make_shared<StateFormula>(StateFormula{And{std::move(a), std::move(b)}});
}
StatePtr lnot(StatePtr a) { return std::make_shared<StateFormula>(StateFormula{Not{std::move(a)}}); }
StatePtr lor(StatePtr a, StatePtr b) { return lnot(land(lnot(std::move(a)), lnot(std::move(b)))); }
StatePtr implies(StatePtr a, StatePtr b) { return lor(lnot(std::move(a)), std::move(b)); }

StatePtr prob(Interval j, PathPtr path, Quantifier q) {
  if (!(0.0 <= j.lo && j.lo <= j.hi && j.hi <= 1.0)) throw std::invalid_argument("pctl: interval outside [0,1]");
  return std::make_shared<StateFormula>(StateFormula{ProbIn{j, std::move(path), q, false}});
}

PathPtr next(StatePtr a) { return std::make_shared<PathFormula>(PathFormula{Next{std::move(a)}}); }
PathPtr until(StatePtr a, StatePtr b) {
  return std::make_shared<PathFormula>(PathFormula{Until{std::move(a), std::move(b)}});
}
PathPtr bounded_until(StatePtr a, StatePtr b, unsigned n) {
  return std::make_shared<PathFormula>(PathFormula{BoundedUntil{std::move(a), std::move(b), n}});
}
PathPtr eventually(StatePtr a) { return until(make_true(), std::move(a)); }
PathPtr eventually_within(StatePtr a, unsigned n) { return bounded_until(make_true(), std::move(a), n); }

namespace {

StatePtr complement_prob(Interval j, PathPtr path, Quantifier q) {
  if (!(0.0 <= j.lo && j.lo <= j.hi && j.hi <= 1.0)) throw std::invalid_argument("pctl: interval outside [0,1]");
  return std::make_shared<StateFormula>(StateFormula{ProbIn{j, std::move(path), q, true}});
}

}  // namespace

StatePtr prob_always(Interval j, StatePtr a, Quantifier q) {
  return complement_prob(j, eventually(lnot(std::move(a))), q);
}

StatePtr prob_always_within(Interval j, StatePtr a, unsigned n, Quantifier q) {
  return complement_prob(j, eventually_within(lnot(std::move(a)), n), q);
}

namespace {

enum class Tok { ident, number, lparen, rparen, lbrack, rbrack, comma, bang, amp, bar, arrow, le, slash, end };

struct Token {
  Tok kind;
  std::string text;
  std::size_t pos;
};

std::vector<Token> tokenize(const std::string& s) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < s.size()) {
    const char c = s[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    const std::size_t start = i;
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      while (i < s.size() && (std::isalnum(static_cast<unsigned char>(s[i])) || s[i] == '_')) ++i;
      out.push_back({Tok::ident, s.substr(start, i - start), start});
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      while (i < s.size() && (std::isdigit(static_cast<unsigned char>(s[i])) || s[i] == '.')) ++i;
      out.push_back({Tok::number, s.substr(start, i - start), start});
      continue;
    }
    auto single = [&](Tok k) {
      out.push_back({k, std::string(1, c), start});
      ++i;
    };
    switch (c) {
      case '(': single(Tok::lparen); break;
      case ')': single(Tok::rparen); break;
      case '[': single(Tok::lbrack); break;
      case ']': single(Tok::rbrack); break;
      case ',': single(Tok::comma); break;
      case '!': single(Tok::bang); break;
      case '&': single(Tok::amp); break;
      case '|': single(Tok::bar); break;
      case '/': single(Tok::slash); break;
      case '-':
        if (i + 1 < s.size() && s[i + 1] == '>') {
          out.push_back({Tok::arrow, "->", start});
          i += 2;
          break;
        }
        throw ParseError("unexpected '-'", start);
      case '<':
        if (i + 1 < s.size() && s[i + 1] == '=') {
          out.push_back({Tok::le, "<=", start});
          i += 2;
          break;
        }
        throw ParseError("unexpected '<'", start);
      default: throw ParseError(std::string("unexpected character '") + c + "'", start);
    }
  }
  out.push_back({Tok::end, "", s.size()});
  return out;
}

bool reserved(const std::string& w) {
  return w == "true" || w == "false" || w == "P" || w == "Pmax" || w == "Pmin" || w == "X" || w == "F" ||
         w == "G" || w == "U";
}

class Parser {
 public:
  explicit Parser(const std::string& text) : toks_(tokenize(text)) {}

  StatePtr parse() {
    auto f = state();
    if (peek().kind != Tok::end) throw ParseError("trailing input '" + peek().text + "'", peek().pos);
    return f;
  }

 private:
  const Token& peek() const { return toks_[i_]; }
  const Token& take() { return toks_[i_++]; }
  bool accept(Tok k) {
    if (peek().kind != k) return false;
    ++i_;
    return true;
  }
  void expect(Tok k, const char* what) {
    if (!accept(k)) throw ParseError(std::string("expected ") + what, peek().pos);
  }
  bool at_word(const char* w) const { return peek().kind == Tok::ident && peek().text == w; }

  StatePtr state() {
    auto lhs = disjunction();
    if (accept(Tok::arrow)) return implies(lhs, state());
    return lhs;
  }

  StatePtr disjunction() {
    auto lhs = conjunction();
    while (accept(Tok::bar)) lhs = lor(lhs, conjunction());
    return lhs;
  }

  StatePtr conjunction() {
    auto lhs = unary();
    while (accept(Tok::amp)) lhs = land(lhs, unary());
    return lhs;
  }

  StatePtr unary() {
    if (accept(Tok::bang)) return lnot(unary());
    return primary();
  }

  StatePtr primary() {
    const Token& t = peek();
    if (accept(Tok::lparen)) {
      auto f = state();
      expect(Tok::rparen, "')'");
      return f;
    }
    if (t.kind != Tok::ident) throw ParseError("expected a state formula", t.pos);
    if (t.text == "true") {
      take();
      return make_true();
    }
    if (t.text == "false") {
      take();
      return make_false();
    }
    if (t.text == "P" || t.text == "Pmax" || t.text == "Pmin") return probability();
    if (reserved(t.text)) throw ParseError("unexpected keyword '" + t.text + "'", t.pos);
    take();
    return atom(t.text);
  }

  double number() {
    const Token& t = peek();
    if (t.kind != Tok::number) throw ParseError("expected a number", t.pos);
    take();
    double v = 0.0;
    try {
      std::size_t used = 0;
      v = std::stod(t.text, &used);
      if (used != t.text.size()) throw std::invalid_argument("");
    } catch (const std::exception&) {
      throw ParseError("malformed number '" + t.text + "'", t.pos);
    }
    if (accept(Tok::slash)) {
      const std::size_t pos = peek().pos;
      const double den = number();
      if (den == 0.0) throw ParseError("zero denominator", pos);
      v /= den;
    }
    return v;
  }

  unsigned bound() {
    const Token& t = peek();
    if (t.kind != Tok::number || t.text.find('.') != std::string::npos)
      throw ParseError("expected a step bound", t.pos);
    take();
    return static_cast<unsigned>(std::stoul(t.text));
  }

  StatePtr probability() {
    const Token op = take();
    const Quantifier q =
        op.text == "Pmax" ? Quantifier::max : (op.text == "Pmin" ? Quantifier::min : Quantifier::standard);
    expect(Tok::lbrack, "'['");
    Interval j;
    j.lo = number();
    expect(Tok::comma, "','");
    j.hi = number();
    expect(Tok::rbrack, "']'");
    if (!(0.0 <= j.lo && j.lo <= j.hi && j.hi <= 1.0)) throw ParseError("interval must satisfy 0<=lo<=hi<=1", op.pos);
    expect(Tok::lparen, "'('");
    StatePtr f;
    if (at_word("G")) {
      take();
      if (accept(Tok::le)) {
        const unsigned n = bound();
        f = prob_always_within(j, unary(), n, q);
      } else {
        f = prob_always(j, unary(), q);
      }
    } else {
      f = prob(j, path_formula(), q);
    }
    expect(Tok::rparen, "')'");
    return f;
  }

  PathPtr path_formula() {
    if (at_word("X")) {
      take();
      return next(unary());
    }
    if (at_word("F")) {
      take();
      if (accept(Tok::le)) {
        const unsigned n = bound();
        return eventually_within(unary(), n);
      }
      return eventually(unary());
    }
    auto lhs = state();
    if (!at_word("U")) throw ParseError("expected 'U' in path formula", peek().pos);
    take();
    if (accept(Tok::le)) {
      const unsigned n = bound();
      return bounded_until(lhs, state(), n);
    }
    return until(lhs, state());
  }

  std::vector<Token> toks_;
  std::size_t i_ = 0;
};

std::string fmt_prob(double v) {
  std::ostringstream ss;
  ss.precision(17);
  ss << v;
  return ss.str();
}

}  // namespace

StatePtr parse_state(const std::string& text) { return Parser(text).parse(); }

std::string to_string(const StateFormula& f) {
  return std::visit(
      [](const auto& n) -> std::string {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, True>) {
          return "true";
        } else if constexpr (std::is_same_v<T, Atom>) {
          return n.name;
        } else if constexpr (std::is_same_v<T, And>) {
          return "(" + to_string(*n.lhs) + " & " + to_string(*n.rhs) + ")";
        } else if constexpr (std::is_same_v<T, Not>) {
          return "!" + to_string(*n.operand);
        } else {
          const char* op = n.quantifier == Quantifier::max ? "Pmax" : (n.quantifier == Quantifier::min ? "Pmin" : "P");
          const std::string j = std::string(op) + "[" + fmt_prob(n.bounds.lo) + "," + fmt_prob(n.bounds.hi) + "]";
          if (!n.complement) return j + " (" + to_string(*n.path) + ")";
          // Complemented probabilities only arise from G and G<=n.
          const auto& body = n.path->node;
          if (const auto* u = std::get_if<Until>(&body)) {
            if (const auto* neg = std::get_if<Not>(&u->rhs->node)) return j + " (G " + to_string(*neg->operand) + ")";
          }
          if (const auto* u = std::get_if<BoundedUntil>(&body)) {
            if (const auto* neg = std::get_if<Not>(&u->rhs->node))
              return j + " (G<=" + std::to_string(u->bound) + " " + to_string(*neg->operand) + ")";
          }
          return "!" + j + " (" + to_string(*n.path) + ")";
        }
      },
      f.node);
}

std::string to_string(const PathFormula& f) {
  return std::visit(
      [](const auto& n) -> std::string {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, Next>) {
          return "X " + to_string(*n.operand);
        } else if constexpr (std::is_same_v<T, Until>) {
          return to_string(*n.lhs) + " U " + to_string(*n.rhs);
        } else {
          return to_string(*n.lhs) + " U<=" + std::to_string(n.bound) + " " + to_string(*n.rhs);
        }
      },
      f.node);
}

}  // namespace polsyn::pctl
