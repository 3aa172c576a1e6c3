// dtlmon: monitor, simulate and compile distribution temporal logic
// specifications over POMDP models.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dtlmon/dtlmon.hpp"

namespace fs = std::filesystem;
using namespace dtlmon;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitInfeasible = 2;

std::uint64_t default_seed() {
  if (const char* env = std::getenv("DTLMON_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw Error(std::string("DTLMON_SEED is not an unsigned integer: '") + env + "'");
    }
  }
  return 1;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

void write_file(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  write_text_file(p.string(), text);
}

struct FormulaSource {
  std::string file;
  std::string text;

  Formula load(const Pomdp& m) const {
    if (file.empty() == text.empty()) throw Error("give exactly one of --formula FILE or --expr TEXT");
    return parse_formula(file.empty() ? text : read_text_file(file), m);
  }
};

void add_formula_options(CLI::App* cmd, FormulaSource& src) {
  cmd->add_option("--formula", src.file, "Formula file")->check(CLI::ExistingFile);
  cmd->add_option("--expr", src.text, "Formula text");
}

// ---------------------------------------------------------------------------
// check

struct CheckArgs {
  std::string model, trace, report;
  FormulaSource formula;
  bool oracle = false;
  bool strict = false;
  std::uint64_t oracle_cap = 1'000'000;
};

int cmd_check(const CheckArgs& a) {
  Pomdp m = read_model_file(a.model);
  Formula f = a.formula.load(m);
  Execution exec = execution_from_json(read_json_file(a.trace), m);
  MonitorOptions opt;
  opt.oracle_path_cap = a.oracle_cap;
  Monitor mon(m, f, opt);
  MonitorReport r = mon.check(exec);
  json out = report_to_json(r, mon.maps());
  out["formula"] = to_string(f);
  int status = kExitOk;
  if (a.oracle) {
    const double ref = mon.oracle(exec);
    out["oracle_probability"] = ref;
    if (std::abs(ref - r.probability) > 1e-9) {
      std::cerr << "error: dynamic program (" << format_number(r.probability) << ") and oracle ("
                << format_number(ref) << ") disagree\n";
      status = kExitError;
    }
  }
  const std::string text = dump(out);
  std::cout << text;
  if (!a.report.empty()) write_file(a.report, text);
  if (status == kExitOk && a.strict && !r.feasible) status = kExitInfeasible;
  return status;
}

// ---------------------------------------------------------------------------
// compile

struct CompileArgs {
  std::string model, dot, json_out;
  FormulaSource formula;
  bool relaxed = false;
};

int cmd_compile(const CompileArgs& a) {
  Pomdp m = read_model_file(a.model);
  Formula f = a.formula.load(m);
  Monitor mon(m, f);
  const Dfa& dfa = a.relaxed ? mon.relaxed_dfa() : mon.product_dfa();
  const PropositionMaps& maps = a.relaxed ? mon.relaxed_maps() : mon.maps();
  const bool complete = dfa.num_props() <= 20;
  if (complete) dfa.materialize();
  const auto names = maps.names();

  json summary = {{"formula", to_string(a.relaxed ? mon.relaxed_formula() : f)},
                  {"propositions", names},
                  {"states", dfa.num_states()},
                  {"accepting", dfa.accepting_states()},
                  {"complete", complete}};
  std::cout << dump(summary);
  if (!a.dot.empty()) write_file(a.dot, export_dot(dfa, names));
  if (!a.json_out.empty()) {
    json j = dfa_to_json(dfa);
    j["propositions"] = names;
    write_file(a.json_out, dump(j));
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateArgs {
  std::string model, casestudy, policy, out, config, entropy_factor;
  FormulaSource formula;
  std::size_t trials = 250;
  std::size_t horizon = 16;
  std::optional<std::uint64_t> seed;
  std::size_t threads = 1;
  bool emit_traces = false;
  double mht_h = 0.8;
};

std::vector<ActionIndex> parse_cycle(const std::string& spec, const Pomdp& m) {
  std::vector<ActionIndex> out;
  std::size_t start = 0;
  while (start <= spec.size()) {
    std::size_t comma = spec.find(',', start);
    std::string name = spec.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    auto a = m.find_action(name);
    if (!a) throw Error("policy names unknown action '" + name + "'");
    out.push_back(*a);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

void write_study(const fs::path& dir, const Pomdp& m, const std::string& formula_text, const MonteCarloResult& r,
                 const json& meta) {
  fs::create_directories(dir);
  write_file(dir / "trials.csv", records_to_csv(r.records));
  json summary = meta;
  summary["stats"] = stats_to_json(r.stats);
  write_file(dir / "summary.json", dump(summary));
  write_file(dir / "model.json", dump(model_to_json(m)));
  write_file(dir / "formula.txt", formula_text + "\n");
  for (std::size_t i = 0; i < r.runs.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "trial_%05zu.json", i);
    write_file(dir / "traces" / name, dump(execution_to_json(m, r.runs[i].execution, &r.runs[i].hidden_path)));
  }
}

int cmd_simulate(const SimulateArgs& a) {
  if (a.trials < 2) throw Error("--trials must be at least 2");
  if (a.horizon < 1) throw Error("--horizon must be at least 1");
  const std::uint64_t seed = a.seed ? *a.seed : default_seed();

  MonteCarloConfig cfg;
  cfg.trials = a.trials;
  cfg.horizon = a.horizon;
  cfg.master_seed = seed;
  cfg.threads = a.threads;
  cfg.keep_runs = a.emit_traces;
  cfg.entropy_factor = a.entropy_factor;

  std::optional<CaseStudy> cs;
  std::unique_ptr<Policy> policy;
  RescueStudyConfig rc = a.config.empty() ? RescueStudyConfig{} : rescue_config_from_json(read_json_file(a.config));

  if (a.casestudy == "rescue") {
    cs = build_rescue(rc.model);
    cfg.success = rescue_success;
    if (cfg.entropy_factor.empty()) cfg.entropy_factor = rc.entropy_factor;
    if (a.policy == "timeshare" || a.policy.empty())
      policy = std::make_unique<TimeSharePolicy>(cs->model, rc.model, rc.time_share_a, a.horizon);
    else if (a.policy == "entropy-cutoff")
      policy = std::make_unique<EntropyCutoffPolicy>(cs->model, rc.model, rc.h3, rc.h4, rc.rho);
    else
      throw Error("rescue policies are 'timeshare' and 'entropy-cutoff'");
  } else if (a.casestudy == "mht") {
    MhtParams mp;
    mp.h = a.mht_h;
    mp.reading = MhtReading::Triggered;
    cs = build_mht(mp);
    if (cfg.entropy_factor.empty()) cfg.entropy_factor = "hyp";
    if (!a.policy.empty() && a.policy != "sequential") throw Error("the mht policy is 'sequential'");
    policy = std::make_unique<MhtSequentialPolicy>(cs->model, a.mht_h);
  } else if (!a.casestudy.empty()) {
    throw Error("unknown case study '" + a.casestudy + "' (expected mht or rescue)");
  }

  if (!cs) {
    if (a.model.empty()) throw Error("simulate needs --model or --casestudy");
    Pomdp m = read_model_file(a.model);
    Formula f = a.formula.load(m);
    std::string text = to_string(f);
    cs = CaseStudy{std::move(m), std::move(text), nullptr};
    cs->formula = parse_formula(cs->formula_text, cs->model);
    const std::string prefix = "cycle:";
    if (a.policy.rfind(prefix, 0) != 0) throw Error("model policies are given as cycle:ACTION[,ACTION...]");
    policy = std::make_unique<CyclicPolicy>(parse_cycle(a.policy.substr(prefix.size()), cs->model));
  }

  Monitor mon(cs->model, cs->formula);
  MonteCarloResult r = monte_carlo(mon, *policy, cfg);
  json meta = {{"trials", a.trials},
               {"horizon", a.horizon},
               {"master_seed", seed},
               {"policy", a.policy.empty() ? "default" : a.policy},
               {"entropy_factor", cfg.entropy_factor.empty() ? "full" : cfg.entropy_factor}};
  if (!a.out.empty()) write_study(a.out, cs->model, cs->formula_text, r, meta);
  meta["stats"] = stats_to_json(r.stats);
  std::cout << dump(meta);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// casestudy

struct CaseStudyArgs {
  std::string name, out, config;
  std::size_t trials = 250;
  std::size_t horizon = 16;
  std::optional<std::uint64_t> seed;
  std::size_t threads = 1;
};

int casestudy_mht(const CaseStudyArgs& a) {
  MhtParams params;
  params.reading = MhtReading::Triggered;
  CaseStudy cs = build_mht(params);
  const Pomdp& m = cs.model;
  const auto aO = *m.find_action("a_O");
  const auto tails = *m.find_observation("tails");
  // four tails make coin 1 the most likely; the agent then commits to it
  Execution exec = make_execution(m, {aO, aO, aO, aO, *m.find_action("a_1")},
                                  {tails, tails, tails, tails, *m.find_observation("null")});
  MonitorOptions opt;
  opt.oracle_path_cap = 10'000'000;
  Monitor mon(m, cs.formula, opt);
  MonitorReport r = mon.check(exec);
  json report = report_to_json(r, mon.maps());
  report["oracle_probability"] = mon.oracle(exec);

  json steps = json::array();
  const Partition& hyp = *m.find_factor("hyp");
  for (std::size_t i = 0; i < exec.beliefs.size(); ++i) {
    auto cells = marginal_dist(exec.beliefs[i], hyp);
    steps.push_back({{"step", i}, {"hypotheses", cells}, {"entropy_bits", entropy_bits(cells)}});
  }
  json out = {{"formula", cs.formula_text}, {"trajectory", steps}, {"report", report}};
  std::cout << dump(out);
  if (!a.out.empty()) {
    fs::path dir(a.out);
    write_file(dir / "model.json", dump(model_to_json(m)));
    write_file(dir / "formula.txt", cs.formula_text + "\n");
    write_file(dir / "trace.json", dump(execution_to_json(m, exec)));
    write_file(dir / "report.json", dump(out));
  }
  return kExitOk;
}

int casestudy_rescue(const CaseStudyArgs& a) {
  RescueStudyConfig rc = a.config.empty() ? RescueStudyConfig{} : rescue_config_from_json(read_json_file(a.config));
  const std::size_t trials = a.trials, horizon = a.horizon;
  if (trials < 2) throw Error("--trials must be at least 2");
  const std::uint64_t seed = a.seed ? *a.seed : default_seed();
  CaseStudy cs = build_rescue(rc.model);
  Monitor mon(cs.model, cs.formula);

  MonteCarloConfig cfg;
  cfg.trials = trials;
  cfg.horizon = horizon;
  cfg.master_seed = seed;
  cfg.threads = a.threads;
  cfg.entropy_factor = rc.entropy_factor;
  cfg.success = rescue_success;

  TimeSharePolicy ts(cs.model, rc.model, rc.time_share_a, horizon);
  EntropyCutoffPolicy ec(cs.model, rc.model, rc.h3, rc.h4, rc.rho);
  MonteCarloResult ts_r = monte_carlo(mon, ts, cfg);
  MonteCarloResult ec_r = monte_carlo(mon, ec, cfg);

  json summary = {{"trials", trials},
                  {"horizon", horizon},
                  {"master_seed", seed},
                  {"entropy_factor", rc.entropy_factor},
                  {"formula", cs.formula_text},
                  {"time_share", {{"a", rc.time_share_a}, {"stats", stats_to_json(ts_r.stats)}}},
                  {"entropy_cutoff",
                   {{"h3", rc.h3}, {"h4", rc.h4}, {"rho", rc.rho}, {"stats", stats_to_json(ec_r.stats)}}}};
  std::cout << dump(summary);
  if (!a.out.empty()) {
    fs::path dir(a.out);
    write_file(dir / "summary.json", dump(summary));
    write_file(dir / "time_share.csv", records_to_csv(ts_r.records));
    write_file(dir / "entropy_cutoff.csv", records_to_csv(ec_r.records));
    write_file(dir / "model.json", dump(model_to_json(cs.model)));
    write_file(dir / "formula.txt", cs.formula_text + "\n");
  }
  return kExitOk;
}

int cmd_casestudy(const CaseStudyArgs& a) {
  if (a.name == "mht") return casestudy_mht(a);
  if (a.name == "rescue") return casestudy_rescue(a);
  throw Error("unknown case study '" + a.name + "' (expected mht or rescue)");
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Monitor distribution temporal logic specifications over POMDP executions"};
  app.require_subcommand(1);

  CheckArgs check;
  auto* c = app.add_subcommand("check", "Feasibility and satisfaction probability of one trace");
  c->add_option("--model", check.model, "Model JSON")->required()->check(CLI::ExistingFile);
  add_formula_options(c, check.formula);
  c->add_option("--trace", check.trace, "Trace JSON")->required()->check(CLI::ExistingFile);
  c->add_option("--report", check.report, "Write the report JSON here");
  c->add_flag("--oracle", check.oracle, "Cross-check against path enumeration");
  c->add_option("--oracle-cap", check.oracle_cap, "Largest |S|^(t+1) the oracle will enumerate");
  c->add_flag("--strict", check.strict, "Exit 2 when the trace is infeasible");

  CompileArgs compile;
  auto* k = app.add_subcommand("compile", "Compile a formula to its automaton");
  k->add_option("--model", compile.model, "Model JSON (symbol table)")->required()->check(CLI::ExistingFile);
  add_formula_options(k, compile.formula);
  k->add_flag("--relaxed", compile.relaxed, "Compile the relaxed (belief-only) formula");
  k->add_option("--dot", compile.dot, "Write Graphviz DOT here");
  k->add_option("--json", compile.json_out, "Write the transition table as JSON here");

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "Monte Carlo trials: simulate, monitor, summarize");
  s->add_option("--model", sim.model, "Model JSON")->check(CLI::ExistingFile);
  add_formula_options(s, sim.formula);
  s->add_option("--casestudy", sim.casestudy, "Built-in model: mht or rescue");
  s->add_option("--policy", sim.policy, "cycle:A,B,... | timeshare | entropy-cutoff | sequential");
  s->add_option("--config", sim.config, "Rescue study JSON config")->check(CLI::ExistingFile);
  s->add_option("--trials", sim.trials, "Number of trials");
  s->add_option("--horizon", sim.horizon, "Steps per trial");
  s->add_option("--seed", sim.seed, "Master seed (default: DTLMON_SEED or 1)");
  s->add_option("--threads", sim.threads, "Worker threads");
  s->add_option("--entropy-factor", sim.entropy_factor, "Factor for terminal entropy");
  s->add_option("--mht-threshold", sim.mht_h, "Entropy threshold of the mht policy and formula");
  s->add_option("--out", sim.out, "Output directory");
  s->add_flag("--emit-traces", sim.emit_traces, "Write every trial's trace under OUT/traces");

  CaseStudyArgs cstudy;
  auto* cs = app.add_subcommand("casestudy", "Reproduce a built-in case study");
  cs->add_option("name", cstudy.name, "mht or rescue")->required();
  cs->add_option("--config", cstudy.config, "Rescue study JSON config")->check(CLI::ExistingFile);
  cs->add_option("--trials", cstudy.trials, "Trials per policy");
  cs->add_option("--horizon", cstudy.horizon, "Steps per trial");
  cs->add_option("--seed", cstudy.seed, "Master seed (default: DTLMON_SEED or 1)");
  cs->add_option("--threads", cstudy.threads, "Worker threads");
  cs->add_option("--out", cstudy.out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitError;
  }

  try {
    if (*c) return cmd_check(check);
    if (*k) return cmd_compile(compile);
    if (*s) return cmd_simulate(sim);
    if (*cs) return cmd_casestudy(cstudy);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
