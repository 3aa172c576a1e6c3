#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "dtlmon/model.hpp"

namespace dtlmon {

/// SplitMix64 finalizer; used to derive independent stream seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Seed of trial `index` under `master`. Depends only on the pair, so trials
/// can run in any order.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return splitmix64(splitmix64(master) ^ (index + 1) * 0xD1B54A32D192ED03ULL);
}

/// Seeded generator with a portable uniform mapping (std distributions are
/// implementation-defined, which would break cross-platform replay).
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Index drawn from the (possibly unnormalized) weights.
  std::size_t categorical(std::span<const double> weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    double u = uniform() * total;
    std::size_t last = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      if (weights[i] <= 0.0) continue;
      last = i;
      if (u < weights[i]) return i;
      u -= weights[i];
    }
    return last;
  }

  std::uint64_t next() { return engine_(); }

private:
  std::mt19937_64 engine_;
};

/// Decision rule mapping the current belief and step index to an action.
/// Policies may keep internal memory; `clone()` yields a fresh copy in its
/// initial state so each trajectory starts clean.
class Policy {
public:
  virtual ~Policy() = default;
  virtual ActionIndex act(const Belief& belief, std::size_t step) = 0;
  virtual std::unique_ptr<Policy> clone() const = 0;
};

/// Wraps a stateless callable.
class FunctionPolicy final : public Policy {
public:
  using Fn = std::function<ActionIndex(const Belief&, std::size_t)>;
  explicit FunctionPolicy(Fn fn) : fn_(std::move(fn)) {}

  ActionIndex act(const Belief& belief, std::size_t step) override { return fn_(belief, step); }
  std::unique_ptr<Policy> clone() const override { return std::make_unique<FunctionPolicy>(fn_); }

private:
  Fn fn_;
};

/// Open-loop policy cycling through a fixed action list.
class CyclicPolicy final : public Policy {
public:
  explicit CyclicPolicy(std::vector<ActionIndex> actions) : actions_(std::move(actions)) {
    if (actions_.empty()) throw ModelError("cyclic policy needs at least one action");
  }

  ActionIndex act(const Belief&, std::size_t step) override { return actions_[step % actions_.size()]; }
  std::unique_ptr<Policy> clone() const override { return std::make_unique<CyclicPolicy>(actions_); }

private:
  std::vector<ActionIndex> actions_;
};

struct SimulationResult {
  std::vector<StateIndex> hidden_path;  // s^0..s^t
  Execution execution;
};

namespace detail {
inline StateIndex sample_successor(const Pomdp& m, Rng& rng, StateIndex s, ActionIndex a) {
  auto row = m.successors(s, a);
  std::vector<double> w;
  w.reserve(row.size());
  for (const auto& e : row) w.push_back(e.prob);
  return row[rng.categorical(w)].target;
}

inline ObservationIndex sample_observation(const Pomdp& m, Rng& rng, StateIndex next, ActionIndex a) {
  std::vector<double> w(m.num_observations());
  for (std::size_t o = 0; o < w.size(); ++o) w[o] = m.observation(next, a, o);
  return rng.categorical(w);
}
} // namespace detail

/// Samples a hidden trajectory and its observations for `horizon` steps,
/// filtering the belief online and querying `policy` at every step.
/// Identical seeds give identical results.
inline SimulationResult simulate(const Pomdp& m, Policy& policy, std::size_t horizon, std::uint64_t seed) {
  if (horizon < 1) throw ModelError("simulation horizon must be at least 1");
  Rng rng(seed);
  SimulationResult out;
  auto& exec = out.execution;
  StateIndex s = rng.categorical(m.prior().probs());
  out.hidden_path.push_back(s);
  exec.beliefs.push_back(m.prior());
  for (std::size_t i = 0; i < horizon; ++i) {
    ActionIndex a = policy.act(exec.beliefs.back(), i);
    if (a >= m.num_actions()) throw ModelError("policy returned an out-of-range action");
    s = detail::sample_successor(m, rng, s, a);
    ObservationIndex o = detail::sample_observation(m, rng, s, a);
    exec.beliefs.push_back(bayes_update(m, exec.beliefs.back(), a, o, i));
    exec.actions.push_back(a);
    exec.observations.push_back(o);
    out.hidden_path.push_back(s);
  }
  return out;
}

} // namespace dtlmon
