#include <gtest/gtest.h>

#include <thread>

#include "test_support.hpp"

using namespace dtlmon;
using testing_support::Gen;

namespace {

struct Instance {
  Pomdp m;
  Formula f;
  Execution ex;
};

Instance random_instance(Gen& g, int depth = 3) {
  Instance in;
  in.m = testing_support::random_pomdp(g);
  auto pool = testing_support::random_atoms(g, in.m);
  in.f = testing_support::random_formula(g, pool, depth);
  in.ex = testing_support::random_execution(g, in.m, g.between(0, 6));
  return in;
}

} // namespace

TEST(Relax, StateAtomsBecomePositiveMass) {
  Gen g(1);
  Pomdp m = testing_support::random_pomdp(g);
  auto f = ltl::until(ltl::state_atom(*m.find_set("A")), ltl::state_atom(*m.find_set("B"), true));
  auto r = relax(f);
  EXPECT_EQ(to_string(r), "([-P(A) < 0] U [-P(~B) < 0])");
}

TEST(Propositions, BeliefPropsComeFirstAndDedupe) {
  Gen g(2);
  Pomdp m = testing_support::random_pomdp(g);
  auto low = ltl::belief_atom(expr::sub(expr::entropy(*m.find_factor("g")), expr::constant(0.5)));
  auto f = ltl::conj(ltl::state_atom(*m.find_set("A")), ltl::disj(low, ltl::eventually(low)));
  auto maps = collect_propositions(f);
  ASSERT_EQ(maps.belief_props.size(), 1u);
  ASSERT_EQ(maps.state_props.size(), 1u);
  EXPECT_EQ(maps.belief_props[0].index, 0u);
  EXPECT_EQ(maps.state_props[0].index, 1u);
  EXPECT_EQ(maps.belief_mask(), Letter{1});
}

TEST(Smoothing, DistributionsNormalize) {
  Gen g(3);
  for (int trial = 0; trial < 100; ++trial) {
    auto in = random_instance(g);
    auto b = backward_likelihoods(in.m, in.ex.actions, in.ex.observations);
    auto init = smoothed_initial(in.m, b);
    double z = 0.0;
    for (double x : init) z += x;
    ASSERT_NEAR(z, 1.0, 1e-9);
    for (std::size_t i = 0; i < in.ex.length(); ++i)
      for (StateIndex s = 0; s < in.m.num_states(); ++s) {
        if (!(b.values[i][s] > 0.0)) continue;
        double row = 0.0;
        for (StateIndex t = 0; t < in.m.num_states(); ++t) row += path_transition(in.m, b, i, s, t);
        ASSERT_NEAR(row, 1.0, 1e-9);
      }
  }
}

TEST(Smoothing, InitialMatchesBruteForce) {
  Gen g(4);
  for (int trial = 0; trial < 50; ++trial) {
    auto in = random_instance(g);
    auto b = backward_likelihoods(in.m, in.ex.actions, in.ex.observations);
    auto init = smoothed_initial(in.m, b);
    std::vector<double> ref(in.m.num_states(), 0.0);
    double z = 0.0;
    testing_support::for_each_joint_path(in.m, in.ex.actions, in.ex.observations, in.ex.length(),
                                         [&](const std::vector<StateIndex>& p, double w) {
                                           ref[p[0]] += w;
                                           z += w;
                                         });
    for (StateIndex s = 0; s < in.m.num_states(); ++s) EXPECT_NEAR(init[s], ref[s] / z, 1e-9);
  }
}

TEST(Smoothing, ErrorsOnImpossibleData) {
  PomdpBuilder b;
  b.add_state("u");
  b.add_state("v");
  b.add_action("a");
  b.add_observation("seen");
  b.add_observation("never");
  b.add_transition(0, 0, 0, 1.0).add_transition(1, 0, 1, 1.0);
  b.add_observation_prob(0, 0, 0, 1.0).add_observation_prob(1, 0, 0, 0.5).add_observation_prob(1, 0, 1, 0.5);
  b.set_prior({0.5, 0.5});
  Pomdp m = b.build();
  std::vector<ActionIndex> acts = {0};
  std::vector<ObservationIndex> never = {1}, seen = {0};
  // "never" is only possible from v; the prior covers it, so the record is consistent
  EXPECT_NO_THROW(backward_likelihoods(m, acts, never));

  PomdpBuilder c;
  c.add_state("u");
  c.add_action("a");
  c.add_observation("seen");
  c.add_observation("never");
  c.add_transition(0, 0, 0, 1.0);
  c.add_observation_prob(0, 0, 0, 1.0);
  c.set_prior({1.0});
  Pomdp m2 = c.build();
  EXPECT_THROW(backward_likelihoods(m2, acts, never), AllZero);

  auto bl = backward_likelihoods(m, acts, never);
  EXPECT_THROW(path_transition(m, bl, 0, 0, 0), InconsistentState);
  (void)seen;
}

TEST(Monitor, FullSetIsCertainAndEmptySetImpossible) {
  Gen g(5);
  for (int trial = 0; trial < 40; ++trial) {
    Pomdp m = testing_support::random_pomdp(g);
    auto ex = testing_support::random_execution(g, m, g.between(0, 5));
    auto full = acceptance_probability(m, ltl::state_atom(*m.find_set("full")), ex);
    EXPECT_TRUE(full.feasible);
    EXPECT_NEAR(full.probability, 1.0, 1e-9);
    auto none = acceptance_probability(m, ltl::eventually(ltl::state_atom(*m.find_set("none"))), ex);
    EXPECT_FALSE(none.feasible);
    EXPECT_EQ(none.probability, 0.0);
  }
}

TEST(Monitor, DynamicProgramMatchesOracles) {
  Gen g(6);
  for (int trial = 0; trial < 150; ++trial) {
    auto in = random_instance(g);
    MonitorOptions opt;
    opt.skip_feasibility = true;
    Monitor mon(in.m, in.f, opt);
    const double dp = mon.check(in.ex).probability;
    const double oracle = mon.oracle(in.ex);
    const double brute = testing_support::brute_force_probability(in.m, in.f, in.ex);
    ASSERT_NEAR(dp, oracle, 1e-9) << to_string(in.f);
    ASSERT_NEAR(dp, brute, 1e-9) << to_string(in.f);
    ASSERT_GE(dp, 0.0);
    ASSERT_LE(dp, 1.0);
  }
}

TEST(Monitor, FeasibilityIsNecessary) {
  Gen g(7);
  int infeasible = 0;
  for (int trial = 0; trial < 300; ++trial) {
    auto in = random_instance(g);
    MonitorOptions opt;
    opt.skip_feasibility = true;
    Monitor mon(in.m, in.f, opt);
    auto feas = mon.feasibility(in.ex);
    if (feas.feasible) continue;
    ++infeasible;
    ASSERT_EQ(mon.check(in.ex).probability, 0.0) << to_string(in.f);
  }
  EXPECT_GT(infeasible, 0);
}

TEST(Monitor, StepLabelsAreBeliefSignatures) {
  Gen g(8);
  for (int trial = 0; trial < 100; ++trial) {
    auto in = random_instance(g);
    Monitor mon(in.m, in.f);
    auto r = mon.check(in.ex);
    ASSERT_EQ(r.step_labels.size(), in.ex.beliefs.size());
    for (std::size_t i = 0; i < in.ex.beliefs.size(); ++i) {
      Letter expected = 0;
      for (const auto& bp : mon.maps().belief_props)
        if (testing_support::ref_expr(bp.expr, in.ex.beliefs[i]) < 0.0) expected |= Letter{1} << bp.index;
      ASSERT_EQ(r.step_labels[i], expected);
    }
  }
}

TEST(Monitor, OracleCapIsEnforced) {
  Gen g(9);
  Pomdp m;
  do {
    m = testing_support::random_pomdp(g);
  } while (m.num_states() < 4);
  auto ex = testing_support::random_execution(g, m, 6);
  MonitorOptions opt;
  opt.oracle_path_cap = 100;
  Monitor mon(m, ltl::state_atom(*m.find_set("full")), opt);
  EXPECT_THROW(mon.oracle(ex), CapExceeded);
}

TEST(Monitor, OracleCountsConsistentPaths) {
  Gen g(10);
  for (int trial = 0; trial < 30; ++trial) {
    auto in = random_instance(g);
    Monitor mon(in.m, ltl::state_atom(*in.m.find_set("full")));
    std::uint64_t visited = 0;
    EXPECT_NEAR(mon.oracle(in.ex, &visited), 1.0, 1e-9);
    std::uint64_t positive = 0;
    testing_support::for_each_joint_path(in.m, in.ex.actions, in.ex.observations, in.ex.length(),
                                         [&](const std::vector<StateIndex>&, double w) { positive += w > 0.0; });
    EXPECT_EQ(visited, positive);
    EXPECT_EQ(mon.check(in.ex).diagnostics.consistent_paths, positive);
  }
}

TEST(Monitor, ConcurrentChecksMatchSequential) {
  Gen g(12);
  Instance in;
  do {
    in = random_instance(g, 4);
  } while (in.m.num_states() < 3);
  Monitor mon(in.m, in.f);
  std::vector<Execution> runs;
  for (int i = 0; i < 64; ++i) runs.push_back(testing_support::random_execution(g, in.m, 6));
  std::vector<double> seq, par(runs.size());
  for (const auto& r : runs) seq.push_back(mon.check(r).probability);
  std::vector<std::thread> pool;
  for (int t = 0; t < 4; ++t)
    pool.emplace_back([&, t] {
      for (std::size_t i = t; i < runs.size(); i += 4) par[i] = mon.check(runs[i]).probability;
    });
  for (auto& th : pool) th.join();
  EXPECT_EQ(seq, par);
}
