#pragma once

// Random instance generators and brute-force reference implementations that
// the library is checked against. Nothing here calls the code under test
// except to build inputs.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "dtlmon/dtlmon.hpp"

namespace testing_support {

using namespace dtlmon;

struct Gen {
  std::mt19937_64 eng;
  explicit Gen(std::uint64_t seed) : eng(seed) {}

  std::size_t below(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(eng); }
  std::size_t between(std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(eng);
  }
  double unit() { return std::uniform_real_distribution<double>(0.0, 1.0)(eng); }
  bool coin(double p = 0.5) { return unit() < p; }

  // A probability vector with some entries forced to zero (at least one kept).
  std::vector<double> sparse_pmf(std::size_t n, double zero_rate) {
    std::vector<double> w(n, 0.0);
    double total = 0.0;
    for (auto& x : w) {
      x = coin(zero_rate) ? 0.0 : 0.05 + unit();
      total += x;
    }
    if (total == 0.0) {
      w[below(n)] = 1.0;
      total = 1.0;
    }
    for (auto& x : w) x /= total;
    return w;
  }
};

struct RandomModelOptions {
  std::size_t max_states = 4;
  std::size_t max_actions = 2;
  std::size_t max_observations = 2;
  double transition_zero_rate = 0.4;
  double observation_zero_rate = 0.25;
  double prior_zero_rate = 0.2;
};

// States s0..; sets A, B, C (random members), full, none; tag "g" with a
// two-cell factor "g" and "G0" = {g = 0}.
inline Pomdp random_pomdp(Gen& g, const RandomModelOptions& o = {}) {
  PomdpBuilder b;
  const std::size_t ns = g.between(1, o.max_states);
  const std::size_t na = g.between(1, o.max_actions);
  const std::size_t no = g.between(1, o.max_observations);
  for (std::size_t s = 0; s < ns; ++s) b.add_state("s" + std::to_string(s), {{"g", std::to_string(g.below(2))}});
  for (std::size_t a = 0; a < na; ++a) b.add_action("a" + std::to_string(a));
  for (std::size_t z = 0; z < no; ++z) b.add_observation("o" + std::to_string(z));
  for (std::size_t s = 0; s < ns; ++s)
    for (std::size_t a = 0; a < na; ++a) {
      auto row = g.sparse_pmf(ns, o.transition_zero_rate);
      for (std::size_t t = 0; t < ns; ++t)
        if (row[t] > 0.0) b.add_transition(s, a, t, row[t]);
    }
  for (std::size_t t = 0; t < ns; ++t)
    for (std::size_t a = 0; a < na; ++a) {
      auto row = g.sparse_pmf(no, o.observation_zero_rate);
      for (std::size_t z = 0; z < no; ++z) b.add_observation_prob(t, a, z, row[z]);
    }
  b.set_prior(g.sparse_pmf(ns, o.prior_zero_rate));
  for (const char* name : {"A", "B", "C"}) {
    std::vector<StateIndex> members;
    for (std::size_t s = 0; s < ns; ++s)
      if (g.coin()) members.push_back(s);
    b.add_set(name, members);
  }
  std::vector<StateIndex> all(ns);
  for (std::size_t s = 0; s < ns; ++s) all[s] = s;
  b.add_set("full", all);
  b.add_set("none", {});
  b.add_tag_set("G0", "g", "0");
  b.add_factor("g", {"g"});
  return b.build();
}

// Simulated execution under uniformly random actions, so every step has
// positive likelihood.
inline Execution random_execution(Gen& g, const Pomdp& m, std::size_t horizon) {
  if (horizon == 0) return make_execution(m, {}, {});
  std::uint64_t policy_seed = g.eng();
  std::mt19937_64 pick(policy_seed);
  FunctionPolicy policy([&pick, &m](const Belief&, std::size_t) {
    return static_cast<ActionIndex>(std::uniform_int_distribution<std::size_t>(0, m.num_actions() - 1)(pick));
  });
  return simulate(m, policy, horizon, g.eng()).execution;
}

// ---------------------------------------------------------------------------
// Formulas

struct AtomPool {
  std::vector<Formula> atoms;
};

// Up to 3 distinct state atoms and up to 2 belief atoms, each possibly negated.
inline AtomPool random_atoms(Gen& g, const Pomdp& m) {
  AtomPool pool;
  std::vector<std::string> names = {"A", "B", "C", "full", "G0"};
  std::shuffle(names.begin(), names.end(), g.eng);
  const std::size_t n_state = g.between(1, 3);
  for (std::size_t i = 0; i < n_state; ++i) pool.atoms.push_back(ltl::state_atom(*m.find_set(names[i]), g.coin(0.3)));
  const std::size_t n_belief = g.between(0, 2);
  for (std::size_t i = 0; i < n_belief; ++i) {
    BeliefExpr e;
    switch (g.below(3)) {
    case 0: e = expr::sub(expr::prob(*m.find_set(names[g.below(names.size())])), expr::constant(0.2 + 0.6 * g.unit())); break;
    case 1: e = expr::sub(expr::entropy(*m.find_factor("g")), expr::constant(0.3 + 0.6 * g.unit())); break;
    default:
      e = expr::sub(expr::prob(*m.find_set("A")), expr::prob(*m.find_set("B")));
      break;
    }
    pool.atoms.push_back(ltl::belief_atom(e, g.coin(0.3)));
  }
  return pool;
}

inline Formula random_formula(Gen& g, const AtomPool& pool, int depth) {
  if (depth == 0 || g.coin(0.25)) return pool.atoms[g.below(pool.atoms.size())];
  switch (g.below(5)) {
  case 0: return ltl::conj(random_formula(g, pool, depth - 1), random_formula(g, pool, depth - 1));
  case 1: return ltl::disj(random_formula(g, pool, depth - 1), random_formula(g, pool, depth - 1));
  case 2: return ltl::until(random_formula(g, pool, depth - 1), random_formula(g, pool, depth - 1));
  case 3: return ltl::next(random_formula(g, pool, depth - 1));
  default: return ltl::eventually(random_formula(g, pool, depth - 1));
  }
}

// ---------------------------------------------------------------------------
// Reference semantics

// Direct finite-trace evaluation over proposition bitmasks.
inline bool ref_prop_eval(const PropFormula& f, const std::vector<Letter>& w, std::size_t i) {
  switch (f->kind) {
  case PropKind::True: return true;
  case PropKind::False: return false;
  case PropKind::Prop: return (((w[i] >> f->prop) & 1U) != 0) != f->negated;
  case PropKind::And: return ref_prop_eval(f->lhs, w, i) && ref_prop_eval(f->rhs, w, i);
  case PropKind::Or: return ref_prop_eval(f->lhs, w, i) || ref_prop_eval(f->rhs, w, i);
  case PropKind::Next: return i + 1 < w.size() && ref_prop_eval(f->lhs, w, i + 1);
  case PropKind::Eventually:
    for (std::size_t k = i; k < w.size(); ++k)
      if (ref_prop_eval(f->lhs, w, k)) return true;
    return false;
  case PropKind::Until:
    for (std::size_t k = i; k < w.size(); ++k) {
      if (ref_prop_eval(f->rhs, w, k)) return true;
      if (!ref_prop_eval(f->lhs, w, k)) return false;
    }
    return false;
  }
  return false;
}

inline PropFormula random_prop_formula(Gen& g, std::size_t props, int depth) {
  if (depth == 0 || g.coin(0.2)) {
    switch (g.below(12)) {
    case 0: return pl::truth();
    case 1: return pl::falsity();
    default: return pl::prop(g.below(props), g.coin(0.3));
    }
  }
  switch (g.below(5)) {
  case 0: return pl::conj(random_prop_formula(g, props, depth - 1), random_prop_formula(g, props, depth - 1));
  case 1: return pl::disj(random_prop_formula(g, props, depth - 1), random_prop_formula(g, props, depth - 1));
  case 2: return pl::until(random_prop_formula(g, props, depth - 1), random_prop_formula(g, props, depth - 1));
  case 3: return pl::next(random_prop_formula(g, props, depth - 1));
  default: return pl::eventually(random_prop_formula(g, props, depth - 1));
  }
}

// Belief-expression evaluation written out from the definitions.
inline double ref_expr(const BeliefExpr& e, const Belief& b) {
  switch (e->kind) {
  case ExprKind::Const: return e->value;
  case ExprKind::Prob: {
    double p = 0.0;
    for (std::size_t s = 0; s < b.size(); ++s)
      if (e->set.members[s]) p += b[s];
    return p;
  }
  case ExprKind::Entropy: {
    std::vector<double> cell(e->factor.num_cells(), 0.0);
    for (std::size_t s = 0; s < b.size(); ++s) cell[e->factor.cell_of[s]] += b[s];
    double h = 0.0;
    for (double p : cell)
      if (p > 0.0) h -= p * std::log2(p);
    return h;
  }
  case ExprKind::Neg: return -ref_expr(e->lhs, b);
  case ExprKind::Add: return ref_expr(e->lhs, b) + ref_expr(e->rhs, b);
  case ExprKind::Sub: return ref_expr(e->lhs, b) - ref_expr(e->rhs, b);
  case ExprKind::Mul: return ref_expr(e->lhs, b) * ref_expr(e->rhs, b);
  case ExprKind::Custom: return e->fn(b);
  }
  return 0.0;
}

inline bool ref_formula_eval(const Formula& f, const std::vector<StateIndex>& path, const std::vector<Belief>& beliefs,
                             std::size_t i) {
  switch (f->kind) {
  case FormulaKind::StateAtom: return static_cast<bool>(f->set.members[path[i]]) != f->negated;
  case FormulaKind::BeliefAtom: return (ref_expr(f->expr, beliefs[i]) < 0.0) != f->negated;
  case FormulaKind::And: return ref_formula_eval(f->lhs, path, beliefs, i) && ref_formula_eval(f->rhs, path, beliefs, i);
  case FormulaKind::Or: return ref_formula_eval(f->lhs, path, beliefs, i) || ref_formula_eval(f->rhs, path, beliefs, i);
  case FormulaKind::Next: return i + 1 < path.size() && ref_formula_eval(f->lhs, path, beliefs, i + 1);
  case FormulaKind::Eventually:
    for (std::size_t k = i; k < path.size(); ++k)
      if (ref_formula_eval(f->lhs, path, beliefs, k)) return true;
    return false;
  case FormulaKind::Until:
    for (std::size_t k = i; k < path.size(); ++k) {
      if (ref_formula_eval(f->rhs, path, beliefs, k)) return true;
      if (!ref_formula_eval(f->lhs, path, beliefs, k)) return false;
    }
    return false;
  }
  return false;
}

// Enumerates every hidden path s^0..s^t with its joint weight
// prior(s^0) * prod T(s^i, a^i, s^{i+1}) h(s^{i+1}, a^i, o^{i+1}).
template <class Visit>
void for_each_joint_path(const Pomdp& m, const std::vector<ActionIndex>& actions,
                         const std::vector<ObservationIndex>& observations, std::size_t upto, Visit&& visit) {
  const std::size_t n = m.num_states();
  std::vector<StateIndex> path(upto + 1, 0);
  std::size_t total = 1;
  for (std::size_t i = 0; i <= upto; ++i) total *= n;
  for (std::size_t code = 0; code < total; ++code) {
    std::size_t c = code;
    for (std::size_t i = 0; i <= upto; ++i) {
      path[i] = c % n;
      c /= n;
    }
    double w = m.prior()[path[0]];
    for (std::size_t i = 0; i < upto && w > 0.0; ++i)
      w *= m.transition(path[i], actions[i], path[i + 1]) * m.observation(path[i + 1], actions[i], observations[i]);
    visit(path, w);
  }
}

// Posterior over s^k given the first k steps, by summing joint path weights.
inline std::vector<double> brute_force_filter(const Pomdp& m, const std::vector<ActionIndex>& actions,
                                              const std::vector<ObservationIndex>& observations, std::size_t k) {
  std::vector<double> post(m.num_states(), 0.0);
  double z = 0.0;
  for_each_joint_path(m, actions, observations, k, [&](const std::vector<StateIndex>& p, double w) {
    post[p[k]] += w;
    z += w;
  });
  for (auto& x : post) x /= z;
  return post;
}

// Satisfaction probability as a normalized sum of joint path weights.
inline double brute_force_probability(const Pomdp& m, const Formula& f, const Execution& exec) {
  double sat = 0.0, z = 0.0;
  for_each_joint_path(m, exec.actions, exec.observations, exec.length(),
                      [&](const std::vector<StateIndex>& p, double w) {
                        if (!(w > 0.0)) return;
                        z += w;
                        if (ref_formula_eval(f, p, exec.beliefs, 0)) sat += w;
                      });
  return sat / z;
}

} // namespace testing_support
