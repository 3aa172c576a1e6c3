#pragma once

#include <charconv>
#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dtlmon/errors.hpp"
#include "dtlmon/model.hpp"

namespace dtlmon {

// ---------------------------------------------------------------------------
// Belief expressions: real-valued functions of the belief state.

enum class ExprKind { Const, Prob, Entropy, Neg, Add, Sub, Mul, Custom };

struct ExprNode;
using BeliefExpr = std::shared_ptr<const ExprNode>;
using BeliefFunction = std::function<double(const Belief&)>;

struct ExprNode {
  ExprKind kind = ExprKind::Const;
  double value = 0.0;
  StateSet set;          // Prob
  Partition factor;      // Entropy
  std::string name;      // Custom
  BeliefFunction fn;     // Custom
  BeliefExpr lhs, rhs;   // Neg uses lhs only
};

namespace expr {
inline BeliefExpr constant(double v) {
  auto n = std::make_shared<ExprNode>();
  n->value = v;
  return n;
}
inline BeliefExpr prob(StateSet set) {
  auto n = std::make_shared<ExprNode>();
  n->kind = ExprKind::Prob;
  n->set = std::move(set);
  return n;
}
inline BeliefExpr entropy(Partition factor) {
  auto n = std::make_shared<ExprNode>();
  n->kind = ExprKind::Entropy;
  n->factor = std::move(factor);
  return n;
}
/// Externally supplied predicate function. `name` identifies it in printed
/// formulas and must be unique per function.
inline BeliefExpr custom(std::string name, BeliefFunction fn) {
  auto n = std::make_shared<ExprNode>();
  n->kind = ExprKind::Custom;
  n->name = std::move(name);
  n->fn = std::move(fn);
  return n;
}
inline BeliefExpr unary(ExprKind kind, BeliefExpr a) {
  auto n = std::make_shared<ExprNode>();
  n->kind = kind;
  n->lhs = std::move(a);
  return n;
}
inline BeliefExpr binary(ExprKind kind, BeliefExpr a, BeliefExpr b) {
  auto n = std::make_shared<ExprNode>();
  n->kind = kind;
  n->lhs = std::move(a);
  n->rhs = std::move(b);
  return n;
}
/// Negation; folds constants so that printed and parsed trees coincide.
inline BeliefExpr neg(BeliefExpr a) {
  if (a->kind == ExprKind::Const) return constant(-a->value);
  return unary(ExprKind::Neg, std::move(a));
}
inline BeliefExpr add(BeliefExpr a, BeliefExpr b) { return binary(ExprKind::Add, std::move(a), std::move(b)); }
inline BeliefExpr sub(BeliefExpr a, BeliefExpr b) { return binary(ExprKind::Sub, std::move(a), std::move(b)); }
inline BeliefExpr mul(BeliefExpr a, BeliefExpr b) { return binary(ExprKind::Mul, std::move(a), std::move(b)); }
} // namespace expr

inline double eval_belief_expr(const BeliefExpr& e, const Belief& belief) {
  switch (e->kind) {
  case ExprKind::Const: return e->value;
  case ExprKind::Prob: return marginal_prob(belief, e->set);
  case ExprKind::Entropy: {
    auto cells = marginal_dist(belief, e->factor);
    return entropy_bits(cells);
  }
  case ExprKind::Neg: return -eval_belief_expr(e->lhs, belief);
  case ExprKind::Add: return eval_belief_expr(e->lhs, belief) + eval_belief_expr(e->rhs, belief);
  case ExprKind::Sub: return eval_belief_expr(e->lhs, belief) - eval_belief_expr(e->rhs, belief);
  case ExprKind::Mul: return eval_belief_expr(e->lhs, belief) * eval_belief_expr(e->rhs, belief);
  case ExprKind::Custom: return e->fn(belief);
  }
  return 0.0;
}

/// Shortest decimal text that reads back to exactly `v`.
inline std::string format_number(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace detail {
inline int expr_precedence(ExprKind k) {
  switch (k) {
  case ExprKind::Add:
  case ExprKind::Sub: return 1;
  case ExprKind::Mul: return 2;
  case ExprKind::Neg: return 3;
  default: return 4;
  }
}
} // namespace detail

/// Text in the formula grammar; parses back to the same tree.
inline std::string to_string(const BeliefExpr& e) {
  auto wrap = [](const BeliefExpr& child, int min_prec) {
    std::string s = to_string(child);
    return detail::expr_precedence(child->kind) < min_prec ? "(" + s + ")" : s;
  };
  switch (e->kind) {
  case ExprKind::Const: return e->value < 0 ? "(" + format_number(e->value) + ")" : format_number(e->value);
  case ExprKind::Prob: return "P(" + e->set.name + ")";
  case ExprKind::Entropy: return "H(" + e->factor.name + ")";
  case ExprKind::Custom: return "@" + e->name;
  case ExprKind::Neg: return "-" + wrap(e->lhs, 3);
  case ExprKind::Add: return wrap(e->lhs, 1) + " + " + wrap(e->rhs, 2);
  case ExprKind::Sub: return wrap(e->lhs, 1) + " - " + wrap(e->rhs, 2);
  case ExprKind::Mul: return wrap(e->lhs, 2) + " * " + wrap(e->rhs, 3);
  }
  return {};
}

// ---------------------------------------------------------------------------
// scLDTL formulas in negation normal form.

enum class FormulaKind { StateAtom, BeliefAtom, And, Or, Until, Next, Eventually };

struct FormulaNode;
using Formula = std::shared_ptr<const FormulaNode>;

struct FormulaNode {
  FormulaKind kind = FormulaKind::StateAtom;
  bool negated = false;  // atoms only
  StateSet set;          // StateAtom
  BeliefExpr expr;       // BeliefAtom: satisfied iff expr < 0
  Formula lhs, rhs;      // Next/Eventually use lhs only

  bool is_atom() const noexcept { return kind == FormulaKind::StateAtom || kind == FormulaKind::BeliefAtom; }
};

namespace ltl {
inline Formula state_atom(StateSet set, bool negated = false) {
  auto n = std::make_shared<FormulaNode>();
  n->set = std::move(set);
  n->negated = negated;
  return n;
}
inline Formula belief_atom(BeliefExpr e, bool negated = false) {
  auto n = std::make_shared<FormulaNode>();
  n->kind = FormulaKind::BeliefAtom;
  n->expr = std::move(e);
  n->negated = negated;
  return n;
}
inline Formula make(FormulaKind kind, Formula a, Formula b = nullptr) {
  auto n = std::make_shared<FormulaNode>();
  n->kind = kind;
  n->lhs = std::move(a);
  n->rhs = std::move(b);
  return n;
}
inline Formula conj(Formula a, Formula b) { return make(FormulaKind::And, std::move(a), std::move(b)); }
inline Formula disj(Formula a, Formula b) { return make(FormulaKind::Or, std::move(a), std::move(b)); }
inline Formula until(Formula a, Formula b) { return make(FormulaKind::Until, std::move(a), std::move(b)); }
inline Formula next(Formula a) { return make(FormulaKind::Next, std::move(a)); }
inline Formula eventually(Formula a) { return make(FormulaKind::Eventually, std::move(a)); }

inline bool is_temporal_free(const Formula& f) {
  switch (f->kind) {
  case FormulaKind::StateAtom:
  case FormulaKind::BeliefAtom: return true;
  case FormulaKind::And:
  case FormulaKind::Or: return is_temporal_free(f->lhs) && is_temporal_free(f->rhs);
  default: return false;
  }
}

/// Negation of a Boolean combination of atoms, pushed down to the atoms.
inline Formula negate(const Formula& f) {
  switch (f->kind) {
  case FormulaKind::StateAtom: return state_atom(f->set, !f->negated);
  case FormulaKind::BeliefAtom: return belief_atom(f->expr, !f->negated);
  case FormulaKind::And: return disj(negate(f->lhs), negate(f->rhs));
  case FormulaKind::Or: return conj(negate(f->lhs), negate(f->rhs));
  default: throw NonAtomicNegation("negation of a temporal operator is not co-safe");
  }
}

/// antecedent => consequent, for temporal-free antecedents.
inline Formula implies(const Formula& antecedent, Formula consequent) {
  if (!is_temporal_free(antecedent))
    throw NonAtomicNegation("implication antecedent contains a temporal operator");
  return disj(negate(antecedent), std::move(consequent));
}

/// Left-nested conjunction of a nonempty list.
inline Formula conj_all(std::span<const Formula> parts) {
  if (parts.empty()) throw Error("empty conjunction");
  Formula acc = parts[0];
  for (std::size_t i = 1; i < parts.size(); ++i) acc = conj(acc, parts[i]);
  return acc;
}
} // namespace ltl

/// Canonical text in the formula grammar; fully parenthesized for binary
/// operators so that parse(to_string(f)) reproduces `f`.
inline std::string to_string(const Formula& f) {
  switch (f->kind) {
  case FormulaKind::StateAtom: return std::string(f->negated ? "!" : "") + "in(" + f->set.name + ")";
  case FormulaKind::BeliefAtom: return std::string(f->negated ? "!" : "") + "[" + to_string(f->expr) + " < 0]";
  case FormulaKind::And: return "(" + to_string(f->lhs) + " & " + to_string(f->rhs) + ")";
  case FormulaKind::Or: return "(" + to_string(f->lhs) + " | " + to_string(f->rhs) + ")";
  case FormulaKind::Until: return "(" + to_string(f->lhs) + " U " + to_string(f->rhs) + ")";
  case FormulaKind::Next: return "X " + to_string(f->lhs);
  case FormulaKind::Eventually: return "F " + to_string(f->lhs);
  }
  return {};
}

/// Calls `visit` on every atom, left to right.
template <typename Visit>
void for_each_atom(const Formula& f, Visit&& visit) {
  if (f->is_atom()) {
    visit(*f);
    return;
  }
  if (f->lhs) for_each_atom(f->lhs, visit);
  if (f->rhs) for_each_atom(f->rhs, visit);
}

// ---------------------------------------------------------------------------
// Finite-word semantics

/// Word over (hidden state, belief) pairs. Non-owning view; both spans must
/// have the same nonzero length.
struct TraceWord {
  std::span<const StateIndex> states;
  std::span<const Belief> beliefs;

  std::size_t size() const noexcept { return states.size(); }
};

inline bool atom_holds(const FormulaNode& atom, StateIndex s, const Belief& belief) {
  bool v = atom.kind == FormulaKind::StateAtom ? atom.set.contains(s) : eval_belief_expr(atom.expr, belief) < 0.0;
  return v != atom.negated;
}

/// Direct recursive evaluation of `f` at `pos`. Next at the last position is
/// false; Until and Eventually need their witness inside the word.
inline bool semantics_eval(const Formula& f, const TraceWord& w, std::size_t pos) {
  const std::size_t n = w.size();
  switch (f->kind) {
  case FormulaKind::StateAtom:
  case FormulaKind::BeliefAtom: return atom_holds(*f, w.states[pos], w.beliefs[pos]);
  case FormulaKind::And: return semantics_eval(f->lhs, w, pos) && semantics_eval(f->rhs, w, pos);
  case FormulaKind::Or: return semantics_eval(f->lhs, w, pos) || semantics_eval(f->rhs, w, pos);
  case FormulaKind::Next: return pos + 1 < n && semantics_eval(f->lhs, w, pos + 1);
  case FormulaKind::Eventually:
    for (std::size_t j = pos; j < n; ++j)
      if (semantics_eval(f->lhs, w, j)) return true;
    return false;
  case FormulaKind::Until:
    for (std::size_t j = pos; j < n; ++j) {
      if (semantics_eval(f->rhs, w, j)) return true;
      if (!semantics_eval(f->lhs, w, j)) return false;
    }
    return false;
  }
  return false;
}

} // namespace dtlmon
