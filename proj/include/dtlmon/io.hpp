#pragma once

#include <cstddef>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dtlmon/automaton.hpp"
#include "dtlmon/errors.hpp"
#include "dtlmon/model.hpp"
#include "dtlmon/monitor.hpp"

namespace dtlmon {

using json = nlohmann::json;

namespace detail {

// Tag values may be strings, numbers or booleans; all compare as text.
inline std::string scalar_text(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  if (v.is_number_unsigned()) return std::to_string(v.get<unsigned long long>());
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_float()) return format_number(v.get<double>());
  throw ModelError("tag values must be scalars, got " + v.dump());
}

template <typename Find>
std::size_t resolve(const json& v, Find find, const char* kind) {
  if (!v.is_string()) throw ModelError(std::string(kind) + " reference must be a name, got " + v.dump());
  auto idx = find(v.get<std::string>());
  if (!idx) throw ModelError(std::string("unknown ") + kind + " '" + v.get<std::string>() + "'");
  return *idx;
}

inline const json& require(const json& doc, const char* key) {
  if (!doc.contains(key)) throw ModelError(std::string("model is missing '") + key + "'");
  return doc.at(key);
}

} // namespace detail

/// Reads a model document: states, actions, observations, prior,
/// transitions, observation_model, sets, factors.
inline Pomdp model_from_json(const json& doc) {
  try {
    PomdpBuilder b;
    std::unordered_map<std::string, std::size_t> state_idx, action_idx, obs_idx;
    for (const auto& s : detail::require(doc, "states")) {
      std::map<std::string, std::string> tags;
      if (s.contains("tags"))
        for (const auto& [k, v] : s.at("tags").items()) tags[k] = detail::scalar_text(v);
      std::string name = s.at("name").get<std::string>();
      state_idx[name] = b.add_state(name, std::move(tags));
    }
    for (const auto& a : detail::require(doc, "actions")) action_idx[a.get<std::string>()] = b.add_action(a.get<std::string>());
    for (const auto& o : detail::require(doc, "observations"))
      obs_idx[o.get<std::string>()] = b.add_observation(o.get<std::string>());

    auto find_in = [](const std::unordered_map<std::string, std::size_t>& m) {
      return [&m](const std::string& n) -> std::optional<std::size_t> {
        auto it = m.find(n);
        if (it == m.end()) return std::nullopt;
        return it->second;
      };
    };
    auto state_of = find_in(state_idx);
    auto action_of = find_in(action_idx);
    auto obs_of = find_in(obs_idx);

    std::vector<double> prior(b.num_states(), 0.0);
    for (const auto& [name, p] : detail::require(doc, "prior").items())
      prior[detail::resolve(json(name), state_of, "state")] = p.get<double>();
    b.set_prior(std::move(prior));

    for (const auto& t : detail::require(doc, "transitions")) {
      if (!t.is_array() || t.size() != 4) throw ModelError("transition entries are [s, a, s', p], got " + t.dump());
      b.add_transition(detail::resolve(t[0], state_of, "state"), detail::resolve(t[1], action_of, "action"),
                       detail::resolve(t[2], state_of, "state"), t[3].get<double>());
    }
    for (const auto& t : detail::require(doc, "observation_model")) {
      if (!t.is_array() || t.size() != 4)
        throw ModelError("observation entries are [s', a, o, p], got " + t.dump());
      b.add_observation_prob(detail::resolve(t[0], state_of, "state"), detail::resolve(t[1], action_of, "action"),
                             detail::resolve(t[2], obs_of, "observation"), t[3].get<double>());
    }

    if (doc.contains("sets")) {
      for (const auto& [name, spec] : doc.at("sets").items()) {
        if (spec.is_array()) {
          std::vector<StateIndex> members;
          for (const auto& s : spec) members.push_back(detail::resolve(s, state_of, "state"));
          b.add_set(name, members);
        } else if (spec.is_object() && spec.contains("tag") && spec.contains("value")) {
          b.add_tag_set(name, spec.at("tag").get<std::string>(), detail::scalar_text(spec.at("value")));
        } else {
          throw ModelError("set '" + name + "' must be a list of state names or {tag, value}");
        }
      }
    }
    if (doc.contains("factors")) {
      for (const auto& [name, spec] : doc.at("factors").items()) {
        if (spec.is_string()) {
          b.add_factor(name, {spec.get<std::string>()});
        } else if (spec.is_array()) {
          b.add_factor(name, spec.get<std::vector<std::string>>());
        } else {
          throw ModelError("factor '" + name + "' must name a tag key or a list of keys");
        }
      }
    }
    return b.build();
  } catch (const json::exception& e) {
    throw ModelError(std::string("malformed model document: ") + e.what());
  }
}

inline json model_to_json(const Pomdp& m) {
  json doc;
  json states = json::array();
  for (const auto& s : m.states()) {
    json tags = json::object();
    for (const auto& [k, v] : s.tags) tags[k] = v;
    states.push_back({{"name", s.name}, {"tags", tags}});
  }
  doc["states"] = states;
  doc["actions"] = m.actions();
  doc["observations"] = m.observations();
  json prior = json::object();
  for (StateIndex s = 0; s < m.num_states(); ++s)
    if (m.prior()[s] > 0.0) prior[m.states()[s].name] = m.prior()[s];
  doc["prior"] = prior;
  json trans = json::array();
  for (StateIndex s = 0; s < m.num_states(); ++s)
    for (ActionIndex a = 0; a < m.num_actions(); ++a)
      for (const auto& e : m.successors(s, a))
        trans.push_back({m.states()[s].name, m.actions()[a], m.states()[e.target].name, e.prob});
  doc["transitions"] = trans;
  json obs = json::array();
  for (StateIndex s = 0; s < m.num_states(); ++s)
    for (ActionIndex a = 0; a < m.num_actions(); ++a)
      for (ObservationIndex o = 0; o < m.num_observations(); ++o)
        if (double p = m.observation(s, a, o); p > 0.0)
          obs.push_back({m.states()[s].name, m.actions()[a], m.observations()[o], p});
  doc["observation_model"] = obs;
  json sets = json::object();
  for (const auto& [name, set] : m.named_sets()) {
    json members = json::array();
    for (StateIndex s = 0; s < m.num_states(); ++s)
      if (set.contains(s)) members.push_back(m.states()[s].name);
    sets[name] = members;
  }
  doc["sets"] = sets;
  json factors = json::object();
  for (const auto& [name, part] : m.factors()) {
    if (part.keys.empty()) continue;  // explicit partitions have no tag form
    factors[name] = part.keys.size() == 1 ? json(part.keys[0]) : json(part.keys);
  }
  doc["factors"] = factors;
  return doc;
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error("'" + path + "' is not valid JSON: " + e.what());
  }
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << text;
}

inline Pomdp read_model_file(const std::string& path) { return model_from_json(read_json_file(path)); }

// ---------------------------------------------------------------------------
// Traces

/// Reads {actions, observations, beliefs?}. Beliefs are always recomputed by
/// the filter; when present in the document they must agree within `tol`.
inline Execution execution_from_json(const json& doc, const Pomdp& m, double tol = kProbTolerance) {
  try {
    std::vector<ActionIndex> actions;
    std::vector<ObservationIndex> observations;
    for (const auto& a : doc.at("actions")) {
      auto idx = m.find_action(a.get<std::string>());
      if (!idx) throw TraceError("trace uses unknown action '" + a.get<std::string>() + "'");
      actions.push_back(*idx);
    }
    for (const auto& o : doc.at("observations")) {
      auto idx = m.find_observation(o.get<std::string>());
      if (!idx) throw TraceError("trace uses unknown observation '" + o.get<std::string>() + "'");
      observations.push_back(*idx);
    }
    if (actions.size() != observations.size())
      throw TraceError("trace has " + std::to_string(actions.size()) + " actions but " +
                       std::to_string(observations.size()) + " observations");
    Execution exec = make_execution(m, std::move(actions), std::move(observations));
    if (doc.contains("beliefs") && !doc.at("beliefs").is_null()) {
      const auto& given = doc.at("beliefs");
      if (given.size() != exec.beliefs.size())
        throw TraceError("trace lists " + std::to_string(given.size()) + " beliefs, expected " +
                         std::to_string(exec.beliefs.size()));
      for (std::size_t i = 0; i < given.size(); ++i) {
        std::vector<double> probs(m.num_states(), 0.0);
        for (const auto& [name, p] : given[i].items()) {
          auto s = m.find_state(name);
          if (!s) throw TraceError("belief " + std::to_string(i) + " names unknown state '" + name + "'");
          probs[*s] = p.get<double>();
        }
        if (max_abs_diff(Belief(probs), exec.beliefs[i]) > tol)
          throw TraceError("belief " + std::to_string(i) + " disagrees with the Bayes filter");
      }
    }
    return exec;
  } catch (const json::exception& e) {
    throw TraceError(std::string("malformed trace document: ") + e.what());
  }
}

inline json belief_to_json(const Pomdp& m, const Belief& b) {
  json out = json::object();
  for (StateIndex s = 0; s < m.num_states(); ++s)
    if (b[s] > 0.0) out[m.states()[s].name] = b[s];
  return out;
}

inline json execution_to_json(const Pomdp& m, const Execution& exec,
                              const std::vector<StateIndex>* hidden_path = nullptr) {
  json doc;
  json actions = json::array(), observations = json::array(), beliefs = json::array();
  for (ActionIndex a : exec.actions) actions.push_back(m.actions()[a]);
  for (ObservationIndex o : exec.observations) observations.push_back(m.observations()[o]);
  for (const auto& b : exec.beliefs) beliefs.push_back(belief_to_json(m, b));
  doc["actions"] = actions;
  doc["observations"] = observations;
  doc["beliefs"] = beliefs;
  if (hidden_path) {
    json path = json::array();
    for (StateIndex s : *hidden_path) path.push_back(m.states()[s].name);
    doc["hidden_path"] = path;
  }
  return doc;
}

// ---------------------------------------------------------------------------
// Reports and automata

inline json report_to_json(const MonitorReport& r, const PropositionMaps& maps) {
  json props = json::array();
  for (const auto& p : maps.belief_props) props.push_back({{"index", p.index}, {"predicate", p.text}});
  json labels = json::array();
  for (Letter l : r.step_labels) {
    json step = json::array();
    for (const auto& p : maps.belief_props)
      if ((l >> p.index) & 1U) step.push_back(p.index);
    labels.push_back(step);
  }
  return {{"feasible", r.feasible},
          {"probability", r.probability},
          {"belief_propositions", props},
          {"step_labels", labels},
          {"diagnostics",
           {{"dp_states", r.diagnostics.dp_states},
            {"consistent_paths", r.diagnostics.consistent_paths},
            {"relaxed_dfa_states", r.diagnostics.relaxed_dfa_states},
            {"product_dfa_states", r.diagnostics.product_dfa_states}}}};
}

/// {num_props, states, initial, accepting, transitions: [[from, letter, to]]}
/// over the transitions explored so far (call materialize() first for the
/// complete function).
inline json dfa_to_json(const Dfa& dfa) {
  json trans = json::array();
  for (const auto& e : dfa.transitions()) trans.push_back({e.from, e.letter, e.to});
  return {{"num_props", dfa.num_props()},
          {"states", dfa.num_states()},
          {"initial", dfa.initial()},
          {"accepting", dfa.accepting_states()},
          {"transitions", trans}};
}

} // namespace dtlmon
