#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "dtlmon/errors.hpp"

namespace dtlmon {

/// Tolerance used for stochasticity checks and belief comparisons.
inline constexpr double kProbTolerance = 1e-9;

using StateIndex = std::size_t;
using ActionIndex = std::size_t;
using ObservationIndex = std::size_t;

/// Probability mass function over hidden states.
class Belief {
public:
  Belief() = default;
  explicit Belief(std::vector<double> probs) : probs_(std::move(probs)) {}

  static Belief uniform(std::size_t n) {
    return Belief(std::vector<double>(n, n == 0 ? 0.0 : 1.0 / static_cast<double>(n)));
  }
  static Belief point_mass(std::size_t n, StateIndex s) {
    std::vector<double> p(n, 0.0);
    p.at(s) = 1.0;
    return Belief(std::move(p));
  }

  std::size_t size() const noexcept { return probs_.size(); }
  double operator[](StateIndex s) const { return probs_[s]; }
  std::span<const double> probs() const noexcept { return probs_; }

  double total() const {
    double sum = 0.0;
    for (double p : probs_) sum += p;
    return sum;
  }

  /// True when entries are nonnegative and sum to one within `tol`.
  bool is_valid(double tol = kProbTolerance) const {
    if (probs_.empty()) return false;
    for (double p : probs_)
      if (!(p >= 0.0)) return false;
    return std::abs(total() - 1.0) <= tol;
  }

  friend bool operator==(const Belief&, const Belief&) = default;

private:
  std::vector<double> probs_;
};

/// Largest per-entry difference; infinity on size mismatch.
inline double max_abs_diff(const Belief& a, const Belief& b) {
  if (a.size() != b.size()) return INFINITY;
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

/// Named subset of the state range, stored as a membership mask.
struct StateSet {
  std::string name;
  std::vector<bool> members;

  bool contains(StateIndex s) const { return s < members.size() && members[s]; }
  std::size_t count() const { return static_cast<std::size_t>(std::count(members.begin(), members.end(), true)); }

  StateSet complement() const {
    StateSet out{"~" + name, members};
    out.members.flip();
    return out;
  }
};

/// Partition of the state range (e.g. induced by a factor tag).
struct Partition {
  std::string name;
  std::vector<std::string> keys;  // tag keys inducing the partition, if any
  std::vector<std::size_t> cell_of;
  std::vector<std::string> cell_labels;

  std::size_t num_cells() const noexcept { return cell_labels.size(); }
};

struct StateInfo {
  std::string name;
  std::map<std::string, std::string> tags;
};

struct TransitionEntry {
  StateIndex target;
  double prob;
};

/// Finite POMDP with sparse transitions. Immutable once built; construct
/// through PomdpBuilder, which validates every invariant.
class Pomdp {
public:
  std::size_t num_states() const noexcept { return states_.size(); }
  std::size_t num_actions() const noexcept { return actions_.size(); }
  std::size_t num_observations() const noexcept { return observations_.size(); }

  const std::vector<StateInfo>& states() const noexcept { return states_; }
  const std::vector<std::string>& actions() const noexcept { return actions_; }
  const std::vector<std::string>& observations() const noexcept { return observations_; }
  const Belief& prior() const noexcept { return prior_; }
  const std::map<std::string, StateSet>& named_sets() const noexcept { return sets_; }
  const std::map<std::string, Partition>& factors() const noexcept { return factors_; }

  /// Nonzero successors of (s, a), sorted by target index.
  std::span<const TransitionEntry> successors(StateIndex s, ActionIndex a) const {
    return rows_[s * actions_.size() + a];
  }

  double transition(StateIndex s, ActionIndex a, StateIndex next) const {
    for (const auto& e : successors(s, a))
      if (e.target == next) return e.prob;
    return 0.0;
  }

  double observation(StateIndex next, ActionIndex a, ObservationIndex o) const {
    return obs_[(next * actions_.size() + a) * observations_.size() + o];
  }

  std::optional<StateIndex> find_state(const std::string& name) const { return lookup(state_index_, name); }
  std::optional<ActionIndex> find_action(const std::string& name) const { return lookup(action_index_, name); }
  std::optional<ObservationIndex> find_observation(const std::string& name) const { return lookup(obs_index_, name); }

  const StateSet* find_set(const std::string& name) const {
    auto it = sets_.find(name);
    return it == sets_.end() ? nullptr : &it->second;
  }
  const Partition* find_factor(const std::string& name) const {
    auto it = factors_.find(name);
    return it == factors_.end() ? nullptr : &it->second;
  }

  StateSet all_states() const { return StateSet{"all", std::vector<bool>(num_states(), true)}; }

private:
  friend class PomdpBuilder;

  static std::optional<std::size_t> lookup(const std::unordered_map<std::string, std::size_t>& m,
                                           const std::string& name) {
    auto it = m.find(name);
    if (it == m.end()) return std::nullopt;
    return it->second;
  }

  std::vector<StateInfo> states_;
  std::vector<std::string> actions_;
  std::vector<std::string> observations_;
  Belief prior_;
  std::vector<std::vector<TransitionEntry>> rows_;
  // dense (s', a, o) table; observation alphabets are small
  std::vector<double> obs_;
  std::map<std::string, StateSet> sets_;
  std::map<std::string, Partition> factors_;
  std::unordered_map<std::string, std::size_t> state_index_;
  std::unordered_map<std::string, std::size_t> action_index_;
  std::unordered_map<std::string, std::size_t> obs_index_;
};

/// Incremental construction of a Pomdp. Entries are addressed by index;
/// states, actions and observations must be declared first.
class PomdpBuilder {
public:
  StateIndex add_state(std::string name, std::map<std::string, std::string> tags = {}) {
    states_.push_back({std::move(name), std::move(tags)});
    return states_.size() - 1;
  }
  ActionIndex add_action(std::string name) {
    actions_.push_back(std::move(name));
    return actions_.size() - 1;
  }
  ObservationIndex add_observation(std::string name) {
    observations_.push_back(std::move(name));
    return observations_.size() - 1;
  }

  std::size_t num_states() const noexcept { return states_.size(); }
  const std::vector<StateInfo>& states() const noexcept { return states_; }

  PomdpBuilder& set_prior(std::vector<double> probs) {
    prior_ = std::move(probs);
    return *this;
  }

  /// Accumulates into (s, a, s'); repeated entries add up.
  PomdpBuilder& add_transition(StateIndex s, ActionIndex a, StateIndex next, double p) {
    trans_.push_back({s, a, next, p});
    return *this;
  }

  PomdpBuilder& add_observation_prob(StateIndex next, ActionIndex a, ObservationIndex o, double p) {
    obs_entries_.push_back({next, a, o, p});
    return *this;
  }

  PomdpBuilder& add_set(std::string name, const std::vector<StateIndex>& members) {
    std::vector<bool> mask(states_.size(), false);
    for (StateIndex s : members) {
      if (s >= states_.size()) throw ModelError("set '" + name + "' references state index " + std::to_string(s) + " out of range");
      mask[s] = true;
    }
    sets_[name] = StateSet{name, std::move(mask)};
    return *this;
  }

  /// Set of states whose tag `key` equals `value`.
  PomdpBuilder& add_tag_set(std::string name, const std::string& key, const std::string& value) {
    std::vector<StateIndex> members;
    for (std::size_t s = 0; s < states_.size(); ++s) {
      auto it = states_[s].tags.find(key);
      if (it != states_[s].tags.end() && it->second == value) members.push_back(s);
    }
    return add_set(std::move(name), members);
  }

  /// Partition by the joint value of one or more tags. Cells are ordered by
  /// the lexicographic order of their joint tag values.
  PomdpBuilder& add_factor(std::string name, const std::vector<std::string>& keys) {
    if (keys.empty()) throw ModelError("factor '" + name + "' has no tag keys");
    std::vector<std::string> label(states_.size());
    for (std::size_t s = 0; s < states_.size(); ++s) {
      for (std::size_t k = 0; k < keys.size(); ++k) {
        auto it = states_[s].tags.find(keys[k]);
        if (it == states_[s].tags.end())
          throw ModelError("state '" + states_[s].name + "' lacks tag '" + keys[k] + "' required by factor '" + name + "'");
        if (k) label[s] += ",";
        label[s] += it->second;
      }
    }
    std::vector<std::string> cells(label.begin(), label.end());
    std::sort(cells.begin(), cells.end());
    cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
    Partition part{name, keys, std::vector<std::size_t>(states_.size()), cells};
    for (std::size_t s = 0; s < states_.size(); ++s)
      part.cell_of[s] = static_cast<std::size_t>(std::lower_bound(cells.begin(), cells.end(), label[s]) - cells.begin());
    factors_[name] = std::move(part);
    return *this;
  }

  /// Partition given explicitly by the cell index of every state.
  PomdpBuilder& add_partition(std::string name, std::vector<std::size_t> cell_of) {
    if (cell_of.size() != states_.size()) throw ModelError("partition '" + name + "' does not cover every state");
    std::size_t cells = 0;
    for (std::size_t c : cell_of) cells = std::max(cells, c + 1);
    std::vector<std::string> labels(cells);
    for (std::size_t c = 0; c < cells; ++c) labels[c] = std::to_string(c);
    factors_[name] = Partition{name, {}, std::move(cell_of), std::move(labels)};
    return *this;
  }

  /// Validates every invariant and produces the immutable model.
  Pomdp build() const {
    Pomdp m;
    m.states_ = states_;
    m.actions_ = actions_;
    m.observations_ = observations_;
    const std::size_t ns = states_.size(), na = actions_.size(), no = observations_.size();
    if (ns == 0) throw ModelError("model has no states");
    if (na == 0) throw ModelError("model has no actions");
    if (no == 0) throw ModelError("model has no observations");

    index_names(m.state_index_, states_, "state", [](const StateInfo& s) -> const std::string& { return s.name; });
    index_names(m.action_index_, actions_, "action", [](const std::string& s) -> const std::string& { return s; });
    index_names(m.obs_index_, observations_, "observation", [](const std::string& s) -> const std::string& { return s; });

    if (prior_.size() != ns) throw ModelError("prior has " + std::to_string(prior_.size()) + " entries, expected " + std::to_string(ns));
    m.prior_ = Belief(prior_);
    if (!m.prior_.is_valid()) throw ModelError("prior is not a probability distribution");

    std::vector<std::map<StateIndex, double>> rows(ns * na);
    for (const auto& t : trans_) {
      check_range(t.s, ns, "transition source");
      check_range(t.a, na, "transition action");
      check_range(t.next, ns, "transition target");
      check_prob(t.p, "transition");
      if (t.p > 0.0) rows[t.s * na + t.a][t.next] += t.p;
    }
    m.rows_.resize(ns * na);
    for (std::size_t s = 0; s < ns; ++s) {
      for (std::size_t a = 0; a < na; ++a) {
        double sum = 0.0;
        auto& row = m.rows_[s * na + a];
        for (const auto& [next, p] : rows[s * na + a]) {
          row.push_back({next, p});
          sum += p;
        }
        if (std::abs(sum - 1.0) > kProbTolerance)
          throw ModelError("transition row (" + states_[s].name + ", " + actions_[a] + ") sums to " + std::to_string(sum));
      }
    }

    m.obs_.assign(ns * na * no, 0.0);
    for (const auto& e : obs_entries_) {
      check_range(e.s, ns, "observation state");
      check_range(e.a, na, "observation action");
      check_range(e.o, no, "observation symbol");
      check_prob(e.p, "observation");
      m.obs_[(e.s * na + e.a) * no + e.o] += e.p;
    }
    for (std::size_t s = 0; s < ns; ++s) {
      for (std::size_t a = 0; a < na; ++a) {
        double sum = 0.0;
        for (std::size_t o = 0; o < no; ++o) sum += m.obs_[(s * na + a) * no + o];
        if (std::abs(sum - 1.0) > kProbTolerance)
          throw ModelError("observation row (" + states_[s].name + ", " + actions_[a] + ") sums to " + std::to_string(sum));
      }
    }

    m.sets_ = sets_;
    for (const auto& [name, set] : m.sets_)
      if (set.members.size() != ns) throw ModelError("set '" + name + "' was declared before all states were added");
    m.factors_ = factors_;
    for (const auto& [name, part] : m.factors_)
      if (part.cell_of.size() != ns) throw ModelError("factor '" + name + "' was declared before all states were added");
    return m;
  }

private:
  struct Trans {
    StateIndex s;
    ActionIndex a;
    StateIndex next;
    double p;
  };
  struct ObsEntry {
    StateIndex s;
    ActionIndex a;
    ObservationIndex o;
    double p;
  };

  template <typename T, typename NameOf>
  static void index_names(std::unordered_map<std::string, std::size_t>& out, const std::vector<T>& items,
                          const char* kind, NameOf name_of) {
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (!out.emplace(name_of(items[i]), i).second)
        throw ModelError(std::string("duplicate ") + kind + " name '" + name_of(items[i]) + "'");
    }
  }
  static void check_range(std::size_t v, std::size_t n, const char* what) {
    if (v >= n) throw ModelError(std::string(what) + " index " + std::to_string(v) + " out of range");
  }
  static void check_prob(double p, const char* what) {
    if (!(p >= 0.0 && p <= 1.0 + kProbTolerance))
      throw ModelError(std::string(what) + " probability " + std::to_string(p) + " outside [0, 1]");
  }

  std::vector<StateInfo> states_;
  std::vector<std::string> actions_;
  std::vector<std::string> observations_;
  std::vector<double> prior_;
  std::vector<Trans> trans_;
  std::vector<ObsEntry> obs_entries_;
  std::map<std::string, StateSet> sets_;
  std::map<std::string, Partition> factors_;
};

/// Aligned record of one run: beliefs p^0..p^t, actions a^0..a^{t-1} and
/// observations o^1..o^t.
struct Execution {
  std::vector<Belief> beliefs;
  std::vector<ActionIndex> actions;
  std::vector<ObservationIndex> observations;

  std::size_t length() const noexcept { return actions.size(); }
};

// ---------------------------------------------------------------------------
// Belief arithmetic

inline double marginal_prob(const Belief& belief, const StateSet& set) {
  double mass = 0.0;
  for (std::size_t s = 0; s < belief.size(); ++s)
    if (set.contains(s)) mass += belief[s];
  return mass;
}

inline std::vector<double> marginal_dist(const Belief& belief, const Partition& factor) {
  std::vector<double> cells(factor.num_cells(), 0.0);
  for (std::size_t s = 0; s < belief.size(); ++s) cells[factor.cell_of[s]] += belief[s];
  return cells;
}

/// Shannon entropy in bits, with 0 log 0 = 0.
inline double entropy_bits(std::span<const double> pmf) {
  double h = 0.0;
  for (double p : pmf)
    if (p > 0.0) h -= p * std::log2(p);
  return h;
}

// ---------------------------------------------------------------------------
// Filtering

/// One step of the recursive Bayes filter: predict through the transition
/// model, correct with the observation likelihood, normalize.
inline Belief bayes_update(const Pomdp& m, const Belief& belief, ActionIndex a, ObservationIndex o,
                           std::size_t step = 0) {
  if (belief.size() != m.num_states()) throw ModelError("belief dimension does not match model");
  if (a >= m.num_actions()) throw ModelError("action index out of range");
  if (o >= m.num_observations()) throw ModelError("observation index out of range");

  std::vector<double> next(m.num_states(), 0.0);
  for (std::size_t s = 0; s < m.num_states(); ++s) {
    const double w = belief[s];
    if (w == 0.0) continue;
    for (const auto& e : m.successors(s, a)) next[e.target] += w * e.prob;
  }
  double z = 0.0;
  for (std::size_t s = 0; s < next.size(); ++s) {
    next[s] *= m.observation(s, a, o);
    z += next[s];
  }
  if (!(z > 0.0))
    throw ZeroLikelihood(step, "observation '" + m.observations()[o] + "' after action '" + m.actions()[a] +
                                   "' has zero likelihood at step " + std::to_string(step));
  for (double& p : next) p /= z;
  return Belief(std::move(next));
}

/// Beliefs p^0..p^t from the prior and an action/observation record.
inline std::vector<Belief> filter_run(const Pomdp& m, std::span<const ActionIndex> actions,
                                      std::span<const ObservationIndex> observations) {
  if (actions.size() != observations.size())
    throw ModelError("action and observation sequences differ in length");
  std::vector<Belief> beliefs;
  beliefs.reserve(actions.size() + 1);
  beliefs.push_back(m.prior());
  for (std::size_t i = 0; i < actions.size(); ++i)
    beliefs.push_back(bayes_update(m, beliefs.back(), actions[i], observations[i], i));
  return beliefs;
}

inline Execution make_execution(const Pomdp& m, std::vector<ActionIndex> actions,
                                std::vector<ObservationIndex> observations) {
  Execution exec;
  exec.beliefs = filter_run(m, actions, observations);
  exec.actions = std::move(actions);
  exec.observations = std::move(observations);
  return exec;
}

/// Throws TraceError unless `exec` is self-consistent under `m`.
inline void validate_execution(const Pomdp& m, const Execution& exec, double tol = kProbTolerance) {
  if (exec.observations.size() != exec.actions.size())
    throw TraceError("execution has " + std::to_string(exec.actions.size()) + " actions but " +
                     std::to_string(exec.observations.size()) + " observations");
  if (exec.beliefs.size() != exec.actions.size() + 1)
    throw TraceError("execution has " + std::to_string(exec.beliefs.size()) + " beliefs, expected " +
                     std::to_string(exec.actions.size() + 1));
  for (ActionIndex a : exec.actions)
    if (a >= m.num_actions()) throw TraceError("action index out of range");
  for (ObservationIndex o : exec.observations)
    if (o >= m.num_observations()) throw TraceError("observation index out of range");
  if (max_abs_diff(exec.beliefs[0], m.prior()) > tol) throw TraceError("belief 0 differs from the prior");
  for (std::size_t i = 0; i < exec.actions.size(); ++i) {
    Belief expected = bayes_update(m, exec.beliefs[i], exec.actions[i], exec.observations[i], i);
    if (max_abs_diff(expected, exec.beliefs[i + 1]) > tol)
      throw TraceError("belief " + std::to_string(i + 1) + " is not the Bayes update of belief " + std::to_string(i));
  }
}

} // namespace dtlmon
