#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "dtlmon/errors.hpp"
#include "dtlmon/logic.hpp"
#include "dtlmon/model.hpp"
#include "dtlmon/monitor.hpp"
#include "dtlmon/parser.hpp"
#include "dtlmon/simulate.hpp"

namespace dtlmon {

/// A model together with its specification, as text and parsed.
struct CaseStudy {
  Pomdp model;
  std::string formula_text;
  Formula formula;
};

// ---------------------------------------------------------------------------
// Multiple hypothesis testing: one of three coins is flipped repeatedly; the
// agent either observes a flip or commits to a hypothesis.

/// How the entropy-triggered selection rule is anchored in time.
enum class MhtReading {
  AtStart,     // the implication must hold at step 0
  Eventually,  // F of the implication
  Triggered,   // F (entropy low & every most-likely rule), a nonvacuous reading
};

struct MhtParams {
  double p1 = 0.25;
  double p2 = 0.5;
  double p3 = 0.75;
  double h = 0.8;
  MhtReading reading = MhtReading::AtStart;
};

inline std::string mht_formula_text(double h, MhtReading reading) {
  auto rule = [](int i) {
    std::string ante;
    for (int j = 1; j <= 3; ++j) {
      if (j == i) continue;
      if (!ante.empty()) ante += " & ";
      ante += "[P(hyp" + std::to_string(j) + ") - P(hyp" + std::to_string(i) + ") < 0]";
    }
    return "(" + ante + " => X in(chosen" + std::to_string(i) + "))";
  };
  const std::string rules = rule(1) + " & " + rule(2) + " & " + rule(3);
  const std::string low = "[H(hyp) - " + format_number(h) + " < 0]";
  switch (reading) {
  case MhtReading::AtStart: return "(" + low + " => (" + rules + "))";
  case MhtReading::Eventually: return "F (" + low + " => (" + rules + "))";
  case MhtReading::Triggered: return "F (" + low + " & " + rules + ")";
  }
  return {};
}

inline CaseStudy build_mht(const MhtParams& params = {}) {
  const double p[3] = {params.p1, params.p2, params.p3};
  for (double v : p)
    if (!(v > 0.0 && v < 1.0)) throw ModelError("coin parameters must lie in (0, 1)");

  PomdpBuilder b;
  // index = 4 * (i - 1) + d, where d = 0 observes and d = j commits to s_j
  for (int i = 1; i <= 3; ++i) {
    b.add_state("s" + std::to_string(i) + "_O", {{"hyp", std::to_string(i)}, {"dec", "O"}});
    for (int j = 1; j <= 3; ++j)
      b.add_state("s" + std::to_string(i) + "_c" + std::to_string(j),
                  {{"hyp", std::to_string(i)}, {"dec", "c" + std::to_string(j)}});
  }
  const ActionIndex observe = b.add_action("a_O");
  for (int j = 1; j <= 3; ++j) b.add_action("a_" + std::to_string(j));
  const ObservationIndex heads = b.add_observation("heads");
  const ObservationIndex tails = b.add_observation("tails");
  const ObservationIndex none = b.add_observation("null");

  auto idx = [](int i, int d) { return static_cast<StateIndex>(4 * (i - 1) + d); };
  std::vector<double> prior(12, 0.0);
  for (int i = 1; i <= 3; ++i) {
    prior[idx(i, 0)] = 1.0 / 3.0;
    b.add_transition(idx(i, 0), observe, idx(i, 0), 1.0);
    b.add_observation_prob(idx(i, 0), observe, heads, p[i - 1]);
    b.add_observation_prob(idx(i, 0), observe, tails, 1.0 - p[i - 1]);
    for (int j = 1; j <= 3; ++j) {
      b.add_transition(idx(i, 0), static_cast<ActionIndex>(j), idx(i, j), 1.0);
      b.add_observation_prob(idx(i, 0), static_cast<ActionIndex>(j), none, 1.0);
      for (ActionIndex a = 0; a < 4; ++a) {
        // a committed choice is final
        b.add_transition(idx(i, j), a, idx(i, j), 1.0);
        b.add_observation_prob(idx(i, j), a, none, 1.0);
      }
    }
  }
  b.set_prior(prior);
  for (int i = 1; i <= 3; ++i) {
    b.add_tag_set("hyp" + std::to_string(i), "hyp", std::to_string(i));
    b.add_tag_set("chosen" + std::to_string(i), "dec", "c" + std::to_string(i));
  }
  b.add_tag_set("observing", "dec", "O");
  b.add_factor("hyp", {"hyp"});

  CaseStudy cs{b.build(), mht_formula_text(params.h, params.reading), nullptr};
  cs.formula = parse_formula(cs.formula_text, cs.model);
  return cs;
}

/// Observe until the hypothesis entropy drops below `h`, then commit to the
/// most likely coin.
class MhtSequentialPolicy final : public Policy {
public:
  MhtSequentialPolicy(const Pomdp& mht, double h) : h_(h), hyp_(*mht.find_factor("hyp")) {}

  ActionIndex act(const Belief& belief, std::size_t) override {
    auto cells = marginal_dist(belief, hyp_);
    if (entropy_bits(cells) >= h_) return 0;
    auto best = std::max_element(cells.begin(), cells.end()) - cells.begin();
    return static_cast<ActionIndex>(best + 1);
  }
  std::unique_ptr<Policy> clone() const override { return std::make_unique<MhtSequentialPolicy>(*this); }

private:
  double h_;
  Partition hyp_;
};

// ---------------------------------------------------------------------------
// Two-room rescue robot

struct RescueParams {
  double p_fail = 0.4;
  double fa_safe = 0.1;
  double fa_surv = 0.1;
  double det_safe = 0.8;
  double det_surv = 0.9;
  double p1 = 0.9;
  double p2 = 0.25;
  double h1 = 0.375;
  double h2 = 0.375;
};

inline std::string rescue_formula_text(const RescueParams& p) {
  auto trigger_rule = [&](int j) {
    const std::string js = std::to_string(j), other = std::to_string(3 - j);
    return "((in(room" + js + ") & [" + format_number(p.p1) + " - P(surv" + js + ") < 0] & [" +
           format_number(p.p2) + " - P(unsafe" + js + ") < 0]) => X (in(carrying) U (in(room" + other +
           ") & X in(not_carrying))))";
  };
  auto goal = [&](int i) {
    const std::string is = std::to_string(i);
    return "[H(safe" + is + ") - " + format_number(p.h1) + " < 0] & [H(surv" + is + ") - " + format_number(p.h2) +
           " < 0] & ((in(safe" + is + ") & in(surv" + is + ")) | in(no_surv" + is + "))";
  };
  return "(" + trigger_rule(1) + " & " + trigger_rule(2) + ") U (" + goal(1) + " & " + goal(2) + ")";
}

/// State [room, carrying, safe1, safe2, surv1, surv2] with room in {1, 2}
/// and binary flags; index = 32 (room - 1) + 16 carry + 8 e1 + 4 e2 + 2 s1 + s2.
struct RescueState {
  int room = 1;
  int carry = 0;
  int safe[2] = {0, 0};
  int surv[2] = {0, 0};

  StateIndex index() const {
    return static_cast<StateIndex>(32 * (room - 1) + 16 * carry + 8 * safe[0] + 4 * safe[1] + 2 * surv[0] + surv[1]);
  }
  static RescueState from_index(StateIndex s) {
    RescueState r;
    r.room = static_cast<int>(s / 32) + 1;
    r.carry = static_cast<int>((s >> 4) & 1U);
    r.safe[0] = static_cast<int>((s >> 3) & 1U);
    r.safe[1] = static_cast<int>((s >> 2) & 1U);
    r.surv[0] = static_cast<int>((s >> 1) & 1U);
    r.surv[1] = static_cast<int>(s & 1U);
    return r;
  }
};

inline CaseStudy build_rescue(const RescueParams& p = {}) {
  for (double v : {p.p_fail, p.fa_safe, p.fa_surv, p.det_safe, p.det_surv, p.p1, p.p2})
    if (!(v > 0.0 && v < 1.0)) throw ModelError("rescue probabilities must lie in (0, 1)");

  PomdpBuilder b;
  for (StateIndex s = 0; s < 64; ++s) {
    RescueState r = RescueState::from_index(s);
    std::string name = "r" + std::to_string(r.room) + "_c" + std::to_string(r.carry) + "_e" + std::to_string(r.safe[0]) +
                       std::to_string(r.safe[1]) + "_s" + std::to_string(r.surv[0]) + std::to_string(r.surv[1]);
    b.add_state(name, {{"room", std::to_string(r.room)},
                       {"carry", std::to_string(r.carry)},
                       {"safe1", std::to_string(r.safe[0])},
                       {"safe2", std::to_string(r.safe[1])},
                       {"surv1", std::to_string(r.surv[0])},
                       {"surv2", std::to_string(r.surv[1])}});
  }
  const ActionIndex stay = b.add_action("Stay");
  const ActionIndex swap = b.add_action("Switch");
  const ActionIndex pick = b.add_action("PickUp");
  const ActionIndex put = b.add_action("PutDown");
  // report "o<safety><survivor>" about the current room; non-sensing actions emit null
  std::vector<ObservationIndex> report(4);
  for (int e = 0; e < 2; ++e)
    for (int v = 0; v < 2; ++v) report[2 * e + v] = b.add_observation("o" + std::to_string(e) + std::to_string(v));
  const ObservationIndex none = b.add_observation("null");

  for (StateIndex s = 0; s < 64; ++s) {
    const RescueState r = RescueState::from_index(s);
    const int here = r.room - 1;

    b.add_transition(s, stay, s, 1.0);

    RescueState moved = r;
    moved.room = 3 - r.room;
    b.add_transition(s, swap, moved.index(), 1.0);

    if (r.carry == 0 && r.surv[here] == 1) {
      RescueState lifted = r;
      lifted.carry = 1;
      lifted.surv[here] = 0;
      b.add_transition(s, pick, lifted.index(), 1.0 - p.p_fail);
      b.add_transition(s, pick, s, p.p_fail);
    } else {
      b.add_transition(s, pick, s, 1.0);
    }

    if (r.carry == 1) {
      RescueState dropped = r;
      dropped.carry = 0;
      dropped.surv[here] = 1;
      b.add_transition(s, put, dropped.index(), 1.0);
    } else {
      b.add_transition(s, put, s, 1.0);
    }

    // observation model, indexed by the post-transition state
    const double p_safe_report = r.safe[here] ? p.det_safe : p.fa_safe;
    const double p_surv_report = r.surv[here] ? p.det_surv : p.fa_surv;
    for (int e = 0; e < 2; ++e) {
      for (int v = 0; v < 2; ++v) {
        const double pe = e ? p_safe_report : 1.0 - p_safe_report;
        const double pv = v ? p_surv_report : 1.0 - p_surv_report;
        b.add_observation_prob(s, stay, report[2 * e + v], pe * pv);
      }
    }
    for (ActionIndex a : {swap, pick, put}) b.add_observation_prob(s, a, none, 1.0);
  }

  // robot starts in room 1, empty-handed, ignorant of the environment
  std::vector<double> prior(64, 0.0);
  for (StateIndex env = 0; env < 16; ++env) prior[env] = 1.0 / 16.0;
  b.set_prior(prior);

  b.add_tag_set("room1", "room", "1");
  b.add_tag_set("room2", "room", "2");
  b.add_tag_set("carrying", "carry", "1");
  b.add_tag_set("not_carrying", "carry", "0");
  for (int i = 1; i <= 2; ++i) {
    const std::string is = std::to_string(i);
    b.add_tag_set("safe" + is, "safe" + is, "1");
    b.add_tag_set("unsafe" + is, "safe" + is, "0");
    b.add_tag_set("surv" + is, "surv" + is, "1");
    b.add_tag_set("no_surv" + is, "surv" + is, "0");
    b.add_factor("safe" + is, {"safe" + is});
    b.add_factor("surv" + is, {"surv" + is});
  }
  b.add_factor("room", {"room"});
  b.add_factor("carry", {"carry"});
  b.add_factor("env", {"safe1", "safe2", "surv1", "surv2"});

  CaseStudy cs{b.build(), rescue_formula_text(p), nullptr};
  cs.formula = parse_formula(cs.formula_text, cs.model);
  return cs;
}

/// At the final hidden state the robot carries nobody and every room holding
/// a survivor is safe.
inline bool rescue_success(StateIndex final_state) {
  const RescueState r = RescueState::from_index(final_state);
  if (r.carry) return false;
  for (int i = 0; i < 2; ++i)
    if (r.surv[i] && !r.safe[i]) return false;
  return true;
}

/// Shared pieces of the two rescue policies: belief queries about the current
/// room and the reactive rescue overlay. When the robot is confident a
/// survivor sits in an unsafe room it picks up, switches rooms and puts down
/// on three consecutive steps, then returns to the base rule.
class RescuePolicy : public Policy {
public:
  RescuePolicy(const Pomdp& rescue, const RescueParams& params) : p1_(params.p1), p2_(params.p2) {
    auto set = [&](const std::string& n) {
      const StateSet* s = rescue.find_set(n);
      if (!s) throw ModelError("rescue policy needs set '" + n + "'");
      return *s;
    };
    auto factor = [&](const std::string& n) {
      const Partition* f = rescue.find_factor(n);
      if (!f) throw ModelError("rescue policy needs factor '" + n + "'");
      return *f;
    };
    for (int i = 0; i < 2; ++i) {
      const std::string is = std::to_string(i + 1);
      room_[i] = set("room" + is);
      surv_[i] = set("surv" + is);
      unsafe_[i] = set("unsafe" + is);
      safe_factor_[i] = factor("safe" + is);
      surv_factor_[i] = factor("surv" + is);
    }
    auto action = [&](const std::string& n) {
      auto a = rescue.find_action(n);
      if (!a) throw ModelError("rescue policy needs action '" + n + "'");
      return *a;
    };
    stay_ = action("Stay");
    switch_ = action("Switch");
    pick_ = action("PickUp");
    put_ = action("PutDown");
  }

  ActionIndex act(const Belief& belief, std::size_t step) final {
    ActionIndex a;
    if (!pending_.empty()) {
      a = pending_.front();
      pending_.pop_front();
    } else if (triggered(belief)) {
      pending_ = {switch_, put_};
      a = pick_;
    } else {
      a = base_action(belief, step);
    }
    if (a == switch_) last_switch_ = step;
    return a;
  }

  /// Room (0 or 1) the belief places the robot in.
  int current_room(const Belief& belief) const {
    return marginal_prob(belief, room_[0]) >= marginal_prob(belief, room_[1]) ? 0 : 1;
  }

  bool triggered(const Belief& belief) const {
    const int j = current_room(belief);
    return p1_ - marginal_prob(belief, surv_[j]) < 0.0 && p2_ - marginal_prob(belief, unsafe_[j]) < 0.0;
  }

  double safety_entropy(const Belief& belief, int room) const {
    auto cells = marginal_dist(belief, safe_factor_[room]);
    return entropy_bits(cells);
  }
  double survivor_entropy(const Belief& belief, int room) const {
    auto cells = marginal_dist(belief, surv_factor_[room]);
    return entropy_bits(cells);
  }

protected:
  virtual ActionIndex base_action(const Belief& belief, std::size_t step) = 0;

  std::size_t last_switch() const noexcept { return last_switch_; }

  ActionIndex stay_ = 0, switch_ = 0, pick_ = 0, put_ = 0;

private:
  double p1_, p2_;
  StateSet room_[2], surv_[2], unsafe_[2];
  Partition safe_factor_[2], surv_factor_[2];
  std::deque<ActionIndex> pending_;
  std::size_t last_switch_ = 0;
};

/// Switches rooms every ceil(horizon / a) steps, otherwise stays.
class TimeSharePolicy final : public RescuePolicy {
public:
  TimeSharePolicy(const Pomdp& rescue, const RescueParams& params, std::size_t a, std::size_t horizon)
      : RescuePolicy(rescue, params), period_(a == 0 ? 0 : (horizon + a - 1) / a) {
    if (a < 1) throw ModelError("time-share parameter must be at least 1");
    if (period_ == 0) period_ = 1;
  }

  std::size_t period() const noexcept { return period_; }
  std::unique_ptr<Policy> clone() const override { return std::make_unique<TimeSharePolicy>(*this); }

protected:
  ActionIndex base_action(const Belief&, std::size_t step) override {
    return step > 0 && step % period_ == 0 ? switch_ : stay_;
  }

private:
  std::size_t period_;
};

/// Stays until the current room's safety and survivor entropies drop below
/// (h3, h4), then switches. Once both rooms meet the thresholds it waits rho
/// steps between switches.
class EntropyCutoffPolicy final : public RescuePolicy {
public:
  EntropyCutoffPolicy(const Pomdp& rescue, const RescueParams& params, double h3, double h4, std::size_t rho)
      : RescuePolicy(rescue, params), h3_(h3), h4_(h4), rho_(rho) {}

  std::unique_ptr<Policy> clone() const override { return std::make_unique<EntropyCutoffPolicy>(*this); }

protected:
  ActionIndex base_action(const Belief& belief, std::size_t step) override {
    const int here = current_room(belief);
    auto resolved = [&](int room) {
      return safety_entropy(belief, room) < h3_ && survivor_entropy(belief, room) < h4_;
    };
    if (!resolved(here)) return stay_;
    if (!resolved(1 - here)) return switch_;
    return step >= last_switch() + rho_ ? switch_ : stay_;
  }

private:
  double h3_, h4_;
  std::size_t rho_;
};

// ---------------------------------------------------------------------------
// Statistics

/// Sample correlation coefficient. Throws DegeneratePearson on fewer than two
/// samples or a zero variance.
inline double pearson_r(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw DegeneratePearson("samples differ in length");
  const std::size_t n = xs.size();
  if (n < 2) throw DegeneratePearson("need at least two samples");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) throw DegeneratePearson("a sample has zero variance");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

struct TrialRecord {
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  double probability = 0.0;
  double terminal_entropy_bits = 0.0;
  bool success = false;
};

struct StudyStats {
  std::size_t trials = 0;
  double mean_prob = 0.0;
  double var_prob = 0.0;
  double mean_entropy = 0.0;
  double var_entropy = 0.0;
  double success_rate = 0.0;
  /// Empty when either sample has zero variance.
  std::optional<double> pearson_r;
};

namespace detail {
inline void mean_var(std::span<const double> xs, double& mean, double& var) {
  mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  var = xs.size() > 1 ? var / static_cast<double>(xs.size() - 1) : 0.0;
}
} // namespace detail

/// Means, sample variances (n - 1 denominator), success rate and the
/// correlation between satisfaction probability and terminal entropy.
inline StudyStats compute_stats(std::span<const TrialRecord> records) {
  StudyStats st;
  st.trials = records.size();
  if (records.empty()) return st;
  std::vector<double> probs, ents;
  std::size_t wins = 0;
  for (const auto& r : records) {
    probs.push_back(r.probability);
    ents.push_back(r.terminal_entropy_bits);
    wins += r.success ? 1 : 0;
  }
  detail::mean_var(probs, st.mean_prob, st.var_prob);
  detail::mean_var(ents, st.mean_entropy, st.var_entropy);
  st.success_rate = static_cast<double>(wins) / static_cast<double>(records.size());
  try {
    st.pearson_r = pearson_r(probs, ents);
  } catch (const DegeneratePearson&) {
    st.pearson_r.reset();
  }
  return st;
}

// ---------------------------------------------------------------------------
// Monte Carlo harness

struct MonteCarloConfig {
  std::size_t trials = 250;
  std::size_t horizon = 16;
  std::uint64_t master_seed = 0;
  /// Worker threads; results do not depend on this.
  std::size_t threads = 1;
  /// Factor whose marginal entropy is recorded at the horizon; empty means
  /// the entropy of the full belief.
  std::string entropy_factor;
  /// Success predicate on the final hidden state. When unset, a trial
  /// succeeds if its hidden path satisfies the formula.
  std::function<bool(StateIndex)> success;
  /// Keep every simulated trajectory in the result.
  bool keep_runs = false;
};

struct MonteCarloResult {
  std::vector<TrialRecord> records;
  StudyStats stats;
  std::vector<SimulationResult> runs;
};

/// Runs independent seeded trials: simulate under a fresh copy of `policy`,
/// monitor the execution, and record probability, terminal entropy and
/// success. Trial i always uses derive_seed(master_seed, i).
inline MonteCarloResult monte_carlo(const Monitor& monitor, const Policy& policy, const MonteCarloConfig& cfg) {
  if (cfg.trials < 2) throw Error("monte carlo needs at least two trials");
  const Pomdp& m = monitor.model();
  const Partition* factor = nullptr;
  if (!cfg.entropy_factor.empty()) {
    factor = m.find_factor(cfg.entropy_factor);
    if (!factor) throw UnknownSymbol("unknown factor '" + cfg.entropy_factor + "'");
  }

  MonteCarloResult out;
  out.records.resize(cfg.trials);
  if (cfg.keep_runs) out.runs.resize(cfg.trials);

  auto run_trial = [&](std::size_t i) {
    TrialRecord rec;
    rec.trial = i;
    rec.seed = derive_seed(cfg.master_seed, i);
    auto local = policy.clone();
    SimulationResult sim = simulate(m, *local, cfg.horizon, rec.seed);
    rec.probability = monitor.check(sim.execution).probability;
    const Belief& last = sim.execution.beliefs.back();
    if (factor) {
      auto cells = marginal_dist(last, *factor);
      rec.terminal_entropy_bits = entropy_bits(cells);
    } else {
      rec.terminal_entropy_bits = entropy_bits(last.probs());
    }
    if (cfg.success) {
      rec.success = cfg.success(sim.hidden_path.back());
    } else {
      TraceWord word{sim.hidden_path, sim.execution.beliefs};
      rec.success = semantics_eval(monitor.formula(), word, 0);
    }
    out.records[i] = rec;
    if (cfg.keep_runs) out.runs[i] = std::move(sim);
  };

  const std::size_t workers = std::max<std::size_t>(1, std::min(cfg.threads, cfg.trials));
  if (workers == 1) {
    for (std::size_t i = 0; i < cfg.trials; ++i) run_trial(i);
  } else {
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = w; i < cfg.trials; i += workers) run_trial(i);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }
  out.stats = compute_stats(out.records);
  return out;
}

// ---------------------------------------------------------------------------
// Output formats

inline std::string records_to_csv(std::span<const TrialRecord> records) {
  std::string out = "trial,seed,probability,entropy_bits,success\n";
  for (const auto& r : records) {
    out += std::to_string(r.trial) + "," + std::to_string(r.seed) + "," + format_number(r.probability) + "," +
           format_number(r.terminal_entropy_bits) + "," + (r.success ? "1" : "0") + "\n";
  }
  return out;
}

inline nlohmann::json stats_to_json(const StudyStats& s) {
  nlohmann::json j = {{"trials", s.trials},
                      {"mean_prob", s.mean_prob},
                      {"var_prob", s.var_prob},
                      {"mean_entropy", s.mean_entropy},
                      {"var_entropy", s.var_entropy},
                      {"success_rate", s.success_rate}};
  j["pearson_r"] = s.pearson_r ? nlohmann::json(*s.pearson_r) : nlohmann::json(nullptr);
  return j;
}

/// Rescue study settings; every field is optional in the JSON form and
/// defaults to the reference configuration.
struct RescueStudyConfig {
  RescueParams model;
  std::size_t time_share_a = 3;
  double h3 = 0.3;
  double h4 = 0.3;
  std::size_t rho = 2;
  std::size_t trials = 250;
  std::size_t horizon = 16;
  std::string entropy_factor = "env";
};

inline RescueStudyConfig rescue_config_from_json(const nlohmann::json& j) {
  RescueStudyConfig c;
  auto get = [](const nlohmann::json& obj, const char* key, auto& field) {
    if (obj.contains(key)) field = obj.at(key).get<std::remove_reference_t<decltype(field)>>();
  };
  if (j.contains("model")) {
    const auto& m = j.at("model");
    get(m, "p_fail", c.model.p_fail);
    get(m, "fa_safe", c.model.fa_safe);
    get(m, "fa_surv", c.model.fa_surv);
    get(m, "det_safe", c.model.det_safe);
    get(m, "det_surv", c.model.det_surv);
    get(m, "p1", c.model.p1);
    get(m, "p2", c.model.p2);
    get(m, "h1", c.model.h1);
    get(m, "h2", c.model.h2);
  }
  if (j.contains("time_share")) get(j.at("time_share"), "a", c.time_share_a);
  if (j.contains("entropy_cutoff")) {
    get(j.at("entropy_cutoff"), "h3", c.h3);
    get(j.at("entropy_cutoff"), "h4", c.h4);
    get(j.at("entropy_cutoff"), "rho", c.rho);
  }
  get(j, "trials", c.trials);
  get(j, "horizon", c.horizon);
  get(j, "terminal_entropy", c.entropy_factor);
  return c;
}

} // namespace dtlmon
