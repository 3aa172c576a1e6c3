#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "dtlmon/automaton.hpp"
#include "dtlmon/errors.hpp"
#include "dtlmon/logic.hpp"
#include "dtlmon/model.hpp"

namespace dtlmon {

// ---------------------------------------------------------------------------
// Predicate-to-proposition maps

struct BeliefProposition {
  BeliefExpr expr;
  std::size_t index;
  std::string text;
};

struct StateProposition {
  StateSet set;
  std::size_t index;
};

/// Belief predicates and state sets of a formula, each bound to a proposition
/// index. Belief propositions come first, state propositions after them.
struct PropositionMaps {
  std::vector<BeliefProposition> belief_props;
  std::vector<StateProposition> state_props;

  std::size_t size() const noexcept { return belief_props.size() + state_props.size(); }

  /// Mask selecting the belief propositions.
  Letter belief_mask() const noexcept {
    return belief_props.size() >= 64 ? ~Letter{0} : (Letter{1} << belief_props.size()) - 1;
  }

  std::size_t index_of(const BeliefExpr& e) const {
    const std::string text = to_string(e);
    for (const auto& p : belief_props)
      if (p.text == text) return p.index;
    throw Error("belief predicate '" + text + "' has no proposition");
  }

  std::size_t index_of(const StateSet& set) const {
    for (const auto& p : state_props)
      if (p.set.name == set.name) return p.index;
    throw Error("state set '" + set.name + "' has no proposition");
  }

  /// Human-readable proposition labels, by index.
  std::vector<std::string> names() const {
    std::vector<std::string> out(size());
    for (const auto& p : belief_props) out[p.index] = "[" + p.text + " < 0]";
    for (const auto& p : state_props) out[p.index] = "in(" + p.set.name + ")";
    return out;
  }

  void add_belief(const BeliefExpr& e) {
    std::string text = to_string(e);
    for (const auto& p : belief_props)
      if (p.text == text) return;
    if (!state_props.empty()) throw Error("belief propositions must be added before state propositions");
    belief_props.push_back({e, belief_props.size(), std::move(text)});
  }

  void add_state(const StateSet& set) {
    for (const auto& p : state_props)
      if (p.set.name == set.name) return;
    state_props.push_back({set, size()});
  }
};

/// Replaces each state predicate by its belief relaxation: in(A) becomes
/// [-P(A) < 0] and !in(A) becomes [-P(S \ A) < 0].
inline Formula relax(const Formula& f) {
  switch (f->kind) {
  case FormulaKind::StateAtom: {
    StateSet target = f->negated ? f->set.complement() : f->set;
    return ltl::belief_atom(expr::neg(expr::prob(std::move(target))));
  }
  case FormulaKind::BeliefAtom: return f;
  case FormulaKind::Next:
  case FormulaKind::Eventually: return ltl::make(f->kind, relax(f->lhs));
  default: return ltl::make(f->kind, relax(f->lhs), relax(f->rhs));
  }
}

/// Belief predicates (in order of first appearance) then state sets.
inline PropositionMaps collect_propositions(const Formula& f) {
  PropositionMaps maps;
  for_each_atom(f, [&](const FormulaNode& a) {
    if (a.kind == FormulaKind::BeliefAtom) maps.add_belief(a.expr);
  });
  for_each_atom(f, [&](const FormulaNode& a) {
    if (a.kind == FormulaKind::StateAtom) maps.add_state(a.set);
  });
  if (maps.size() > kMaxPropositions)
    throw Error("formula has " + std::to_string(maps.size()) + " distinct predicates; at most " +
                std::to_string(kMaxPropositions) + " are supported");
  return maps;
}

/// Propositional skeleton of `f` with atoms replaced through `maps`.
inline PropFormula skeleton(const Formula& f, const PropositionMaps& maps) {
  switch (f->kind) {
  case FormulaKind::StateAtom: return pl::prop(maps.index_of(f->set), f->negated);
  case FormulaKind::BeliefAtom: return pl::prop(maps.index_of(f->expr), f->negated);
  case FormulaKind::And: return pl::conj(skeleton(f->lhs, maps), skeleton(f->rhs, maps));
  case FormulaKind::Or: return pl::disj(skeleton(f->lhs, maps), skeleton(f->rhs, maps));
  case FormulaKind::Until: return pl::until(skeleton(f->lhs, maps), skeleton(f->rhs, maps));
  case FormulaKind::Next: return pl::next(skeleton(f->lhs, maps));
  case FormulaKind::Eventually: return pl::eventually(skeleton(f->lhs, maps));
  }
  return pl::falsity();
}

/// Sign vector of the belief predicates: bit j set iff f_j(belief) < 0.
/// Identifies the region of the simplex partition containing `belief`.
inline Letter region_signature(const Belief& belief, const PropositionMaps& maps) {
  Letter sig = 0;
  for (const auto& p : maps.belief_props)
    if (eval_belief_expr(p.expr, belief) < 0.0) sig |= Letter{1} << p.index;
  return sig;
}

/// State-predicate bits of hidden state `s`.
inline Letter state_letter(StateIndex s, const PropositionMaps& maps) {
  Letter l = 0;
  for (const auto& p : maps.state_props)
    if (p.set.contains(s)) l |= Letter{1} << p.index;
  return l;
}

// ---------------------------------------------------------------------------
// Smoothing

/// B_i(s) = Pr[o^{i+1..t} | s^i = s, a^{i..t-1}], for i = 0..t.
struct BackwardLikelihoods {
  std::vector<std::vector<double>> values;
  std::vector<ActionIndex> actions;
  std::vector<ObservationIndex> observations;

  std::size_t horizon() const noexcept { return actions.size(); }
  double at(std::size_t i, StateIndex s) const { return values[i][s]; }
};

inline BackwardLikelihoods backward_likelihoods(const Pomdp& m, std::span<const ActionIndex> actions,
                                                std::span<const ObservationIndex> observations) {
  if (actions.size() != observations.size())
    throw ModelError("action and observation sequences differ in length");
  const std::size_t t = actions.size(), n = m.num_states();
  BackwardLikelihoods b;
  b.actions.assign(actions.begin(), actions.end());
  b.observations.assign(observations.begin(), observations.end());
  b.values.assign(t + 1, std::vector<double>(n, 0.0));
  std::fill(b.values[t].begin(), b.values[t].end(), 1.0);
  for (std::size_t i = t; i-- > 0;) {
    const auto& later = b.values[i + 1];
    for (StateIndex s = 0; s < n; ++s) {
      double acc = 0.0;
      for (const auto& e : m.successors(s, actions[i]))
        acc += e.prob * m.observation(e.target, actions[i], observations[i]) * later[e.target];
      b.values[i][s] = acc;
    }
  }
  double support = 0.0;
  for (StateIndex s = 0; s < n; ++s) support += m.prior()[s] * b.values[0][s];
  if (!(support > 0.0)) throw AllZero("the execution has zero probability under the model");
  return b;
}

/// Pr[s^0 = s | actions, observations].
inline std::vector<double> smoothed_initial(const Pomdp& m, const BackwardLikelihoods& b) {
  std::vector<double> out(m.num_states());
  double z = 0.0;
  for (StateIndex s = 0; s < out.size(); ++s) {
    out[s] = m.prior()[s] * b.values[0][s];
    z += out[s];
  }
  if (!(z > 0.0)) throw AllZero("the execution has zero probability under the model");
  for (double& p : out) p /= z;
  return out;
}

/// Pr[s^{i+1} = next | s^i = s, actions, observations]: one edge of the
/// smoothed path chain, conditioned on the source state.
inline double path_transition(const Pomdp& m, const BackwardLikelihoods& b, std::size_t i, StateIndex s,
                              StateIndex next) {
  const double denom = b.values.at(i)[s];
  if (!(denom > 0.0))
    throw InconsistentState("state " + m.states()[s].name + " at step " + std::to_string(i) +
                            " is inconsistent with the remaining observations");
  const ActionIndex a = b.actions[i];
  return m.observation(next, a, b.observations[i]) * b.values[i + 1][next] * m.transition(s, a, next) / denom;
}

// ---------------------------------------------------------------------------
// Monitoring

struct MonitorOptions {
  std::size_t dfa_state_cap = Dfa::kDefaultStateCap;
  /// Upper bound on |S|^(t+1) for the enumeration oracle.
  std::uint64_t oracle_path_cap = 1'000'000;
  /// Run the product DP even when the feasibility check fails.
  bool skip_feasibility = false;
};

struct FeasibilityResult {
  bool feasible = false;
  /// Per step, the satisfied belief propositions (indices into maps()).
  std::vector<Letter> step_labels;
};

struct MonitorDiagnostics {
  std::size_t dp_states = 0;
  std::uint64_t consistent_paths = 0;
  std::size_t relaxed_dfa_states = 0;
  std::size_t product_dfa_states = 0;
};

struct MonitorReport {
  bool feasible = false;
  double probability = 0.0;
  std::vector<Letter> step_labels;
  MonitorDiagnostics diagnostics;
};

/// Feasibility and exact satisfaction probability of one formula over
/// executions of one model. Both automata are compiled once and shared by
/// every check, so a Monitor can serve many executions concurrently. The
/// model must outlive the monitor.
class Monitor {
public:
  Monitor(const Pomdp& model, Formula formula, MonitorOptions options = {})
      : model_(&model), formula_(std::move(formula)), options_(options), maps_(collect_propositions(formula_)),
        relaxed_formula_(relax(formula_)), relaxed_maps_(relaxed_propositions()),
        relaxed_dfa_(skeleton(relaxed_formula_, relaxed_maps_), relaxed_maps_.size(), options.dfa_state_cap),
        product_dfa_(skeleton(formula_, maps_), maps_.size(), options.dfa_state_cap) {}

  const Pomdp& model() const noexcept { return *model_; }
  const Formula& formula() const noexcept { return formula_; }
  const Formula& relaxed_formula() const noexcept { return relaxed_formula_; }
  /// Belief predicates then state sets of the formula.
  const PropositionMaps& maps() const noexcept { return maps_; }
  /// Belief predicates of the relaxed formula; shares its leading indices
  /// with maps().
  const PropositionMaps& relaxed_maps() const noexcept { return relaxed_maps_; }
  const Dfa& relaxed_dfa() const noexcept { return relaxed_dfa_; }
  const Dfa& product_dfa() const noexcept { return product_dfa_; }

  /// Necessary condition for positive satisfaction probability: the belief
  /// trajectory's region word is accepted by the relaxed automaton.
  FeasibilityResult feasibility(const Execution& exec) const {
    FeasibilityResult r;
    std::vector<Letter> word;
    word.reserve(exec.beliefs.size());
    for (const auto& b : exec.beliefs) {
      Letter sig = region_signature(b, relaxed_maps_);
      word.push_back(sig);
      r.step_labels.push_back(sig & maps_.belief_mask());
    }
    r.feasible = relaxed_dfa_.accepts(word);
    return r;
  }

  /// Probability that the hidden path, paired with the belief trajectory,
  /// satisfies the formula. Forward DP over (hidden state, automaton state)
  /// under the smoothed path measure.
  MonitorReport check(const Execution& exec) const {
    const Pomdp& m = *model_;
    MonitorReport report;
    FeasibilityResult feas = feasibility(exec);
    report.feasible = feas.feasible;
    report.step_labels = std::move(feas.step_labels);
    report.diagnostics.relaxed_dfa_states = relaxed_dfa_.num_states();
    if (!report.feasible && !options_.skip_feasibility) {
      report.diagnostics.product_dfa_states = product_dfa_.num_states();
      return report;
    }

    const std::size_t n = m.num_states(), t = exec.length();
    BackwardLikelihoods b = backward_likelihoods(m, exec.actions, exec.observations);
    std::vector<double> init = smoothed_initial(m, b);

    std::vector<Letter> belief_bits(t + 1);
    for (std::size_t i = 0; i <= t; ++i) belief_bits[i] = region_signature(exec.beliefs[i], maps_);
    std::vector<Letter> state_bits(n);
    for (StateIndex s = 0; s < n; ++s) state_bits[s] = state_letter(s, maps_);

    using Layer = std::vector<std::map<Dfa::State, double>>;
    Layer cur(n);
    std::vector<std::uint64_t> paths(n, 0);
    for (StateIndex s = 0; s < n; ++s) {
      if (!(init[s] > 0.0)) continue;
      paths[s] = 1;
      Dfa::State q = product_dfa_.step(product_dfa_.initial(), belief_bits[0] | state_bits[s]);
      if (!product_dfa_.is_rejecting_sink(q)) cur[s][q] += init[s];
    }
    report.diagnostics.dp_states = count_entries(cur);

    for (std::size_t i = 0; i < t; ++i) {
      Layer nxt(n);
      std::vector<std::uint64_t> next_paths(n, 0);
      const ActionIndex a = exec.actions[i];
      const ObservationIndex o = exec.observations[i];
      for (StateIndex s = 0; s < n; ++s) {
        if (paths[s] == 0) continue;
        const double denom = b.values[i][s];
        for (const auto& e : m.successors(s, a)) {
          const double w = m.observation(e.target, a, o) * b.values[i + 1][e.target] * e.prob / denom;
          if (!(w > 0.0)) continue;
          next_paths[e.target] = saturating_add(next_paths[e.target], paths[s]);
          for (const auto& [q, mass] : cur[s]) {
            Dfa::State q2 = product_dfa_.step(q, belief_bits[i + 1] | state_bits[e.target]);
            if (product_dfa_.is_rejecting_sink(q2)) continue;
            nxt[e.target][q2] += mass * w;
          }
        }
      }
      cur = std::move(nxt);
      paths = std::move(next_paths);
      report.diagnostics.dp_states += count_entries(cur);
    }

    double prob = 0.0;
    for (StateIndex s = 0; s < n; ++s)
      for (const auto& [q, mass] : cur[s])
        if (product_dfa_.is_accepting(q)) prob += mass;
    for (auto c : paths) report.diagnostics.consistent_paths = saturating_add(report.diagnostics.consistent_paths, c);
    report.probability = std::clamp(prob, 0.0, 1.0);
    report.diagnostics.product_dfa_states = product_dfa_.num_states();
    return report;
  }

  /// Reference value by explicit enumeration of every positive-probability
  /// hidden path and direct evaluation of the formula on each.
  double oracle(const Execution& exec, std::uint64_t* paths_visited = nullptr) const {
    const Pomdp& m = *model_;
    const std::size_t n = m.num_states(), t = exec.length();
    std::uint64_t bound = 1;
    for (std::size_t i = 0; i <= t; ++i) {
      if (bound > options_.oracle_path_cap / n)
        throw CapExceeded("enumerating |S|^(t+1) paths exceeds the cap of " + std::to_string(options_.oracle_path_cap));
      bound *= n;
    }

    BackwardLikelihoods b = backward_likelihoods(m, exec.actions, exec.observations);
    std::vector<double> init = smoothed_initial(m, b);
    std::vector<StateIndex> path(t + 1);
    double total = 0.0;
    std::uint64_t visited = 0;

    auto visit = [&](auto&& self, std::size_t depth, double weight) -> void {
      if (depth == t) {
        ++visited;
        TraceWord word{path, exec.beliefs};
        if (semantics_eval(formula_, word, 0)) total += weight;
        return;
      }
      for (StateIndex next = 0; next < n; ++next) {
        double w = path_transition(m, b, depth, path[depth], next);
        if (!(w > 0.0)) continue;
        path[depth + 1] = next;
        self(self, depth + 1, weight * w);
      }
    };
    for (StateIndex s = 0; s < n; ++s) {
      if (!(init[s] > 0.0)) continue;
      path[0] = s;
      visit(visit, 0, init[s]);
    }
    if (paths_visited) *paths_visited = visited;
    return total;
  }

private:
  PropositionMaps relaxed_propositions() const {
    PropositionMaps r;
    for (const auto& p : maps_.belief_props) r.add_belief(p.expr);
    for_each_atom(relaxed_formula_, [&](const FormulaNode& a) { r.add_belief(a.expr); });
    if (r.size() > kMaxPropositions) throw Error("relaxed formula has too many distinct predicates");
    return r;
  }

  static std::size_t count_entries(const std::vector<std::map<Dfa::State, double>>& layer) {
    std::size_t c = 0;
    for (const auto& row : layer) c += row.size();
    return c;
  }

  static std::uint64_t saturating_add(std::uint64_t a, std::uint64_t b) {
    return a > std::numeric_limits<std::uint64_t>::max() - b ? std::numeric_limits<std::uint64_t>::max() : a + b;
  }

  const Pomdp* model_;
  Formula formula_;
  MonitorOptions options_;
  PropositionMaps maps_;
  Formula relaxed_formula_;
  PropositionMaps relaxed_maps_;
  Dfa relaxed_dfa_;
  Dfa product_dfa_;
};

inline FeasibilityResult feasibility_check(const Pomdp& m, const Formula& f, const Execution& exec) {
  return Monitor(m, f).feasibility(exec);
}

inline MonitorReport acceptance_probability(const Pomdp& m, const Formula& f, const Execution& exec,
                                            MonitorOptions options = {}) {
  return Monitor(m, f, options).check(exec);
}

inline double acceptance_probability_oracle(const Pomdp& m, const Formula& f, const Execution& exec,
                                            MonitorOptions options = {}) {
  return Monitor(m, f, options).oracle(exec);
}

} // namespace dtlmon
