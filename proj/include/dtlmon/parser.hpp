#pragma once

#include <cctype>
#include <charconv>
#include <cstddef>
#include <string>
#include <string_view>

#include "dtlmon/errors.hpp"
#include "dtlmon/logic.hpp"
#include "dtlmon/model.hpp"

namespace dtlmon {

namespace detail {

// Recursive-descent parser for the formula grammar:
//
//   formula := conj { "|" conj }
//   conj    := until { "&" until }
//   until   := unary [ "U" until ]
//   unary   := "X" unary | "F" unary | "!" unary | atom
//            | "(" formula [ "=>" formula ] ")"
//   atom    := "in(" name ")" | "[" bexpr "<" bexpr "]"
//   bexpr   := term { ("+" | "-") term }
//   term    := factor { "*" factor }
//   factor  := number | "-" factor | "P(" name ")" | "H(" name ")" | "(" bexpr ")"
//
// "!" and "=>" are only accepted over temporal-free operands and are pushed
// down to the atoms, so the result is in negation normal form.
class FormulaParser {
public:
  FormulaParser(std::string_view text, const Pomdp& symbols) : text_(text), symbols_(symbols) {}

  Formula parse() {
    Formula f = parse_or();
    skip_space();
    if (pos_ < text_.size()) fail("unexpected '" + std::string(1, text_[pos_]) + "'");
    return f;
  }

private:
  [[noreturn]] void fail(const std::string& message) const { fail_at(pos_, message); }

  [[noreturn]] void fail_at(std::size_t at, const std::string& message) const {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < at && i < text_.size(); ++i) {
      if (text_[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw SyntaxError(at, line, col, message);
  }

  void skip_space() {
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (c == '#') {
        while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  bool peek(std::string_view tok) {
    skip_space();
    return text_.substr(pos_, tok.size()) == tok;
  }

  bool accept(std::string_view tok) {
    if (!peek(tok)) return false;
    pos_ += tok.size();
    return true;
  }

  void expect(std::string_view tok) {
    if (!accept(tok)) {
      if (pos_ >= text_.size()) fail("expected '" + std::string(tok) + "' but reached end of input");
      fail("expected '" + std::string(tok) + "'");
    }
  }

  static bool is_word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

  // Keyword match that does not split a longer identifier.
  bool accept_keyword(std::string_view kw) {
    if (!peek(kw)) return false;
    std::size_t end = pos_ + kw.size();
    if (end < text_.size() && is_word_char(text_[end])) return false;
    pos_ = end;
    return true;
  }

  std::string read_name() {
    skip_space();
    std::size_t start = pos_;
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (is_word_char(c) || c == '.' || c == ':' || c == '-') {
        ++pos_;
      } else {
        break;
      }
    }
    if (start == pos_) fail("expected a name");
    return std::string(text_.substr(start, pos_ - start));
  }

  Formula parse_or() {
    Formula f = parse_and();
    while (accept("|")) f = ltl::disj(f, parse_and());
    return f;
  }

  Formula parse_and() {
    Formula f = parse_until();
    while (accept("&")) f = ltl::conj(f, parse_until());
    return f;
  }

  Formula parse_until() {
    Formula f = parse_unary();
    if (accept_keyword("U")) return ltl::until(f, parse_until());
    return f;
  }

  Formula parse_unary() {
    skip_space();
    const std::size_t start = pos_;
    if (accept_keyword("X")) return ltl::next(parse_unary());
    if (accept_keyword("F")) return ltl::eventually(parse_unary());
    if (accept("!")) {
      Formula operand = parse_unary();
      if (!ltl::is_temporal_free(operand))
        throw NonAtomicNegation("negation at offset " + std::to_string(start) +
                                " applies to a temporal operator; only atoms may be negated");
      return ltl::negate(operand);
    }
    if (accept("(")) {
      Formula f = parse_or();
      if (accept("=>")) {
        if (!ltl::is_temporal_free(f))
          throw NonAtomicNegation("implication antecedent at offset " + std::to_string(start) +
                                  " contains a temporal operator");
        Formula consequent = parse_or();
        expect(")");
        return ltl::implies(f, consequent);
      }
      expect(")");
      return f;
    }
    if (accept_keyword("in")) {
      expect("(");
      std::size_t name_at = (skip_space(), pos_);
      std::string name = read_name();
      expect(")");
      const StateSet* set = symbols_.find_set(name);
      if (!set) throw UnknownSymbol("unknown state set '" + name + "' at offset " + std::to_string(name_at));
      return ltl::state_atom(*set);
    }
    if (accept("[")) {
      BeliefExpr lhs = parse_sum();
      expect("<");
      BeliefExpr rhs = parse_sum();
      expect("]");
      if (rhs->kind == ExprKind::Const && rhs->value == 0.0) return ltl::belief_atom(lhs);
      return ltl::belief_atom(expr::sub(lhs, rhs));
    }
    if (pos_ >= text_.size()) fail("unexpected end of input");
    fail("expected a formula");
  }

  BeliefExpr parse_sum() {
    BeliefExpr e = parse_product();
    for (;;) {
      if (accept("+")) {
        e = expr::add(e, parse_product());
      } else if (accept("-")) {
        e = expr::sub(e, parse_product());
      } else {
        return e;
      }
    }
  }

  BeliefExpr parse_product() {
    BeliefExpr e = parse_factor();
    while (accept("*")) e = expr::mul(e, parse_factor());
    return e;
  }

  BeliefExpr parse_factor() {
    skip_space();
    if (accept("-")) return expr::neg(parse_factor());
    if (accept("(")) {
      BeliefExpr e = parse_sum();
      expect(")");
      return e;
    }
    if (accept_keyword("P")) {
      expect("(");
      std::size_t name_at = (skip_space(), pos_);
      std::string name = read_name();
      expect(")");
      const StateSet* set = symbols_.find_set(name);
      if (!set) throw UnknownSymbol("unknown state set '" + name + "' at offset " + std::to_string(name_at));
      return expr::prob(*set);
    }
    if (accept_keyword("H")) {
      expect("(");
      std::size_t name_at = (skip_space(), pos_);
      std::string name = read_name();
      expect(")");
      const Partition* part = symbols_.find_factor(name);
      if (!part) throw UnknownSymbol("unknown factor '" + name + "' at offset " + std::to_string(name_at));
      return expr::entropy(*part);
    }
    if (pos_ < text_.size() && (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.')) {
      double v = 0.0;
      auto res = std::from_chars(text_.data() + pos_, text_.data() + text_.size(), v);
      if (res.ec != std::errc()) fail("malformed number");
      pos_ = static_cast<std::size_t>(res.ptr - text_.data());
      return expr::constant(v);
    }
    if (pos_ >= text_.size()) fail("unexpected end of input in belief expression");
    fail("expected a number, P(set), H(factor) or '('");
  }

  std::string_view text_;
  const Pomdp& symbols_;
  std::size_t pos_ = 0;
};

} // namespace detail

/// Parses formula text against the set and factor names of `symbols`.
/// Throws SyntaxError, UnknownSymbol or NonAtomicNegation.
inline Formula parse_formula(std::string_view text, const Pomdp& symbols) {
  return detail::FormulaParser(text, symbols).parse();
}

} // namespace dtlmon
