#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <iterator>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <span>
#include <sstream>
#include <string>
#include <tuple>
#include <unordered_map>
#include <utility>
#include <vector>

#include "dtlmon/errors.hpp"

namespace dtlmon {

/// Letter of the automaton alphabet 2^AP: bit p set iff proposition p holds.
using Letter = std::uint64_t;

inline constexpr std::size_t kMaxPropositions = 64;

// ---------------------------------------------------------------------------
// Propositional co-safe skeleton

enum class PropKind { True, False, Prop, And, Or, Next, Until, Eventually };

struct PropNode;
using PropFormula = std::shared_ptr<const PropNode>;

struct PropNode {
  PropKind kind = PropKind::True;
  std::size_t prop = 0;
  bool negated = false;
  PropFormula lhs, rhs;
};

namespace pl {
inline PropFormula make(PropKind kind, PropFormula a = nullptr, PropFormula b = nullptr) {
  auto n = std::make_shared<PropNode>();
  n->kind = kind;
  n->lhs = std::move(a);
  n->rhs = std::move(b);
  return n;
}
inline PropFormula truth() { return make(PropKind::True); }
inline PropFormula falsity() { return make(PropKind::False); }
inline PropFormula prop(std::size_t p, bool negated = false) {
  auto n = std::make_shared<PropNode>();
  n->kind = PropKind::Prop;
  n->prop = p;
  n->negated = negated;
  return n;
}
inline PropFormula conj(PropFormula a, PropFormula b) { return make(PropKind::And, std::move(a), std::move(b)); }
inline PropFormula disj(PropFormula a, PropFormula b) { return make(PropKind::Or, std::move(a), std::move(b)); }
inline PropFormula next(PropFormula a) { return make(PropKind::Next, std::move(a)); }
inline PropFormula until(PropFormula a, PropFormula b) { return make(PropKind::Until, std::move(a), std::move(b)); }
inline PropFormula eventually(PropFormula a) { return make(PropKind::Eventually, std::move(a)); }
} // namespace pl

inline std::string to_string(const PropFormula& f) {
  switch (f->kind) {
  case PropKind::True: return "true";
  case PropKind::False: return "false";
  case PropKind::Prop: return std::string(f->negated ? "!" : "") + "p" + std::to_string(f->prop);
  case PropKind::And: return "(" + to_string(f->lhs) + " & " + to_string(f->rhs) + ")";
  case PropKind::Or: return "(" + to_string(f->lhs) + " | " + to_string(f->rhs) + ")";
  case PropKind::Next: return "X " + to_string(f->lhs);
  case PropKind::Until: return "(" + to_string(f->lhs) + " U " + to_string(f->rhs) + ")";
  case PropKind::Eventually: return "F " + to_string(f->lhs);
  }
  return {};
}

inline std::size_t max_prop_index(const PropFormula& f) {
  std::size_t m = f->kind == PropKind::Prop ? f->prop + 1 : 0;
  if (f->lhs) m = std::max(m, max_prop_index(f->lhs));
  if (f->rhs) m = std::max(m, max_prop_index(f->rhs));
  return m;
}

/// Finite-word semantics of the skeleton at `pos`, evaluated directly.
inline bool evaluate(const PropFormula& f, std::span<const Letter> word, std::size_t pos) {
  switch (f->kind) {
  case PropKind::True: return true;
  case PropKind::False: return false;
  case PropKind::Prop: return (((word[pos] >> f->prop) & 1U) != 0) != f->negated;
  case PropKind::And: return evaluate(f->lhs, word, pos) && evaluate(f->rhs, word, pos);
  case PropKind::Or: return evaluate(f->lhs, word, pos) || evaluate(f->rhs, word, pos);
  case PropKind::Next: return pos + 1 < word.size() && evaluate(f->lhs, word, pos + 1);
  case PropKind::Eventually:
    for (std::size_t j = pos; j < word.size(); ++j)
      if (evaluate(f->lhs, word, j)) return true;
    return false;
  case PropKind::Until:
    for (std::size_t j = pos; j < word.size(); ++j) {
      if (evaluate(f->rhs, word, j)) return true;
      if (!evaluate(f->lhs, word, j)) return false;
    }
    return false;
  }
  return false;
}

// ---------------------------------------------------------------------------
// DFA

namespace detail {

// Positive Boolean combination of obligations in minimal DNF. For monotone
// functions the set of minimal terms is canonical, so equal functions get
// equal representations. {} is false, {{}} is true.
using Term = std::vector<std::uint32_t>;
using Dnf = std::vector<Term>;

inline void minimize(Dnf& d) {
  std::sort(d.begin(), d.end(), [](const Term& a, const Term& b) {
    return a.size() != b.size() ? a.size() < b.size() : a < b;
  });
  d.erase(std::unique(d.begin(), d.end()), d.end());
  Dnf kept;
  for (auto& t : d) {
    bool subsumed = false;
    for (const auto& k : kept) {
      if (std::includes(t.begin(), t.end(), k.begin(), k.end())) {
        subsumed = true;
        break;
      }
    }
    if (!subsumed) kept.push_back(std::move(t));
  }
  std::sort(kept.begin(), kept.end());
  d = std::move(kept);
}

inline Dnf dnf_or(const Dnf& a, const Dnf& b) {
  Dnf out = a;
  out.insert(out.end(), b.begin(), b.end());
  minimize(out);
  return out;
}

inline Dnf dnf_and(const Dnf& a, const Dnf& b) {
  Dnf out;
  out.reserve(a.size() * b.size());
  for (const auto& x : a) {
    for (const auto& y : b) {
      Term t;
      std::set_union(x.begin(), x.end(), y.begin(), y.end(), std::back_inserter(t));
      out.push_back(std::move(t));
    }
  }
  minimize(out);
  return out;
}

inline const Dnf& dnf_true() {
  static const Dnf t{Term{}};
  return t;
}
inline const Dnf& dnf_false() {
  static const Dnf f{};
  return f;
}

// Hash-consed subformula table; node ids index obligations.
struct Closure {
  struct Node {
    PropKind kind;
    std::size_t prop;
    bool negated;
    std::uint32_t lhs, rhs;
    friend bool operator<(const Node& a, const Node& b) {
      return std::tie(a.kind, a.prop, a.negated, a.lhs, a.rhs) < std::tie(b.kind, b.prop, b.negated, b.lhs, b.rhs);
    }
  };
  static constexpr std::uint32_t kNone = UINT32_MAX;

  std::vector<Node> nodes;
  std::map<Node, std::uint32_t> index;

  std::uint32_t intern(const PropFormula& f) {
    Node n{f->kind, f->kind == PropKind::Prop ? f->prop : 0, f->kind == PropKind::Prop && f->negated, kNone, kNone};
    if (f->lhs) n.lhs = intern(f->lhs);
    if (f->rhs) n.rhs = intern(f->rhs);
    auto [it, inserted] = index.emplace(n, static_cast<std::uint32_t>(nodes.size()));
    if (inserted) nodes.push_back(n);
    return it->second;
  }
};

// One progression step: the obligations for the next position implied by
// requiring node `id` now, given the current letter.
class Progressor {
public:
  Progressor(const Closure& c, Letter letter) : c_(c), letter_(letter), memo_(c.nodes.size()), done_(c.nodes.size(), false) {}

  const Dnf& progress(std::uint32_t id) {
    if (done_[id]) return memo_[id];
    const auto& n = c_.nodes[id];
    Dnf r;
    switch (n.kind) {
    case PropKind::True: r = dnf_true(); break;
    case PropKind::False: r = dnf_false(); break;
    case PropKind::Prop: r = ((((letter_ >> n.prop) & 1U) != 0) != n.negated) ? dnf_true() : dnf_false(); break;
    case PropKind::And: r = dnf_and(progress(n.lhs), progress(n.rhs)); break;
    case PropKind::Or: r = dnf_or(progress(n.lhs), progress(n.rhs)); break;
    case PropKind::Next: r = Dnf{Term{n.lhs}}; break;
    case PropKind::Until: r = dnf_or(progress(n.rhs), dnf_and(progress(n.lhs), Dnf{Term{id}})); break;
    case PropKind::Eventually: r = dnf_or(progress(n.lhs), Dnf{Term{id}}); break;
    }
    memo_[id] = std::move(r);
    done_[id] = true;
    return memo_[id];
  }

  Dnf progress(const Dnf& state) {
    Dnf out;
    for (const auto& term : state) {
      Dnf acc = dnf_true();
      for (std::uint32_t id : term) {
        acc = dnf_and(acc, progress(id));
        if (acc.empty()) break;
      }
      out.insert(out.end(), acc.begin(), acc.end());
    }
    minimize(out);
    return out;
  }

private:
  const Closure& c_;
  Letter letter_;
  std::vector<Dnf> memo_;
  std::vector<bool> done_;
};

} // namespace detail

/// Deterministic, total automaton accepting exactly the finite words that
/// satisfy a co-safe skeleton.
///
/// States are the residual obligations left after reading a prefix (formula
/// progression, i.e. the subset construction of the alternating automaton
/// over subformulas). The accepting state is the residual `true`, which is
/// absorbing. States and transitions are discovered on demand, per letter,
/// and cached; queries are safe to run concurrently.
class Dfa {
public:
  using State = std::uint32_t;
  static constexpr std::size_t kDefaultStateCap = std::size_t{1} << 20;

  Dfa(const PropFormula& phi, std::size_t num_props, std::size_t state_cap = kDefaultStateCap)
      : impl_(std::make_shared<Impl>()) {
    const std::size_t used = max_prop_index(phi);
    if (num_props < used)
      throw Error("formula references proposition " + std::to_string(used - 1) + " but only " +
                  std::to_string(num_props) + " propositions were declared");
    if (num_props > kMaxPropositions)
      throw Error("at most " + std::to_string(kMaxPropositions) + " propositions are supported");
    impl_->num_props = num_props;
    impl_->cap = state_cap;
    impl_->formula = phi;
    std::uint32_t root = impl_->closure.intern(phi);
    impl_->add_state(detail::Dnf{detail::Term{root}});
  }

  std::size_t num_props() const noexcept { return impl_->num_props; }
  State initial() const noexcept { return 0; }
  const PropFormula& formula() const noexcept { return impl_->formula; }

  /// States discovered so far.
  std::size_t num_states() const {
    std::shared_lock lock(impl_->mutex);
    return impl_->states.size();
  }

  bool is_accepting(State q) const {
    std::shared_lock lock(impl_->mutex);
    return impl_->states.at(q) == detail::dnf_true();
  }

  /// True when no word leads from `q` to acceptance.
  bool is_rejecting_sink(State q) const {
    std::shared_lock lock(impl_->mutex);
    return impl_->states.at(q).empty();
  }

  State step(State q, Letter letter) const {
    if (impl_->num_props < 64 && (letter >> impl_->num_props) != 0)
      throw Error("letter uses propositions beyond the alphabet");
    {
      std::shared_lock lock(impl_->mutex);
      const auto& row = impl_->delta.at(q);
      auto it = row.find(letter);
      if (it != row.end()) return it->second;
    }
    std::unique_lock lock(impl_->mutex);
    auto& row = impl_->delta.at(q);
    if (auto it = row.find(letter); it != row.end()) return it->second;
    detail::Progressor prog(impl_->closure, letter);
    State target = impl_->add_state(prog.progress(impl_->states[q]));
    impl_->delta[q].emplace(letter, target);
    return target;
  }

  bool accepts(std::span<const Letter> word) const {
    State q = initial();
    for (Letter l : word) q = step(q, l);
    return is_accepting(q);
  }

  /// Explores every letter from every reachable state, so that transitions()
  /// lists the complete transition function. Limited to 20 propositions.
  void materialize() const {
    if (impl_->num_props > 20) throw StateBlowup("alphabet too large to materialize (more than 2^20 letters)");
    const Letter letters = Letter{1} << impl_->num_props;
    for (State q = 0; q < num_states(); ++q)
      for (Letter l = 0; l < letters; ++l) step(q, l);
  }

  struct Edge {
    State from;
    Letter letter;
    State to;
  };

  /// Cached transitions ordered by (from, letter).
  std::vector<Edge> transitions() const {
    std::shared_lock lock(impl_->mutex);
    std::vector<Edge> out;
    for (State q = 0; q < impl_->delta.size(); ++q) {
      std::vector<std::pair<Letter, State>> row(impl_->delta[q].begin(), impl_->delta[q].end());
      std::sort(row.begin(), row.end());
      for (const auto& [l, t] : row) out.push_back({q, l, t});
    }
    return out;
  }

  std::vector<State> accepting_states() const {
    std::shared_lock lock(impl_->mutex);
    std::vector<State> out;
    for (State q = 0; q < impl_->states.size(); ++q)
      if (impl_->states[q] == detail::dnf_true()) out.push_back(q);
    return out;
  }

private:
  struct Impl {
    std::size_t num_props = 0;
    std::size_t cap = kDefaultStateCap;
    PropFormula formula;
    detail::Closure closure;
    std::vector<detail::Dnf> states;
    std::map<detail::Dnf, State> state_index;
    std::vector<std::unordered_map<Letter, State>> delta;
    mutable std::shared_mutex mutex;

    State add_state(detail::Dnf d) {
      auto it = state_index.find(d);
      if (it != state_index.end()) return it->second;
      if (states.size() >= cap)
        throw StateBlowup("determinization exceeded the cap of " + std::to_string(cap) + " states");
      State id = static_cast<State>(states.size());
      state_index.emplace(d, id);
      states.push_back(std::move(d));
      delta.emplace_back();
      return id;
    }
  };

  std::shared_ptr<Impl> impl_;
};

inline Dfa formula_to_dfa(const PropFormula& phi, std::size_t num_props,
                          std::size_t state_cap = Dfa::kDefaultStateCap) {
  return Dfa(phi, num_props, state_cap);
}

inline bool dfa_accepts(const Dfa& dfa, std::span<const Letter> word) { return dfa.accepts(word); }

/// Letter rendered as the set of proposition names it contains.
inline std::string letter_to_string(Letter letter, std::span<const std::string> names) {
  std::string s = "{";
  bool first = true;
  for (std::size_t p = 0; p < kMaxPropositions; ++p) {
    if (!((letter >> p) & 1U)) continue;
    if (!first) s += ",";
    first = false;
    s += p < names.size() ? names[p] : "p" + std::to_string(p);
  }
  return s + "}";
}

/// GraphViz rendering. With up to 12 propositions the full transition function
/// is materialized first; beyond that only explored transitions are drawn.
/// Parallel letters between the same pair of states share one edge.
inline std::string export_dot(const Dfa& dfa, std::span<const std::string> prop_names = {}) {
  const bool complete = dfa.num_props() <= 12;
  if (complete) dfa.materialize();
  auto edges = dfa.transitions();
  auto accepting = dfa.accepting_states();
  std::ostringstream os;
  auto escape = [](const std::string& s) {
    std::string out;
    for (char c : s) {
      if (c == '"' || c == '\\') out += '\\';
      out += c;
    }
    return out;
  };
  os << "digraph dfa {\n";
  os << "  rankdir=LR;\n";
  if (!complete) os << "  // partial: only transitions explored so far are shown\n";
  os << "  start [shape=point];\n";
  for (Dfa::State q = 0; q < dfa.num_states(); ++q) {
    bool acc = std::binary_search(accepting.begin(), accepting.end(), q);
    os << "  q" << q << " [shape=" << (acc ? "doublecircle" : "circle") << "];\n";
  }
  os << "  start -> q" << dfa.initial() << ";\n";
  std::map<std::pair<Dfa::State, Dfa::State>, std::vector<Letter>> grouped;
  for (const auto& e : edges) grouped[{e.from, e.to}].push_back(e.letter);
  for (const auto& [key, letters] : grouped) {
    std::string label;
    for (std::size_t i = 0; i < letters.size(); ++i) {
      if (i) label += "\\n";
      label += escape(letter_to_string(letters[i], prop_names));
    }
    os << "  q" << key.first << " -> q" << key.second << " [label=\"" << label << "\"];\n";
  }
  os << "}\n";
  return os.str();
}

} // namespace dtlmon
