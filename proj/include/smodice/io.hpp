// Copyright 2026 The smodice-tabular Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "smodice/dataset.hpp"
#include "smodice/discriminator.hpp"
#include "smodice/error.hpp"
#include "smodice/eval.hpp"
#include "smodice/gridworld.hpp"
#include "smodice/mdp.hpp"
#include "smodice/smodice.hpp"

namespace smodice::io {

using json = nlohmann::json;

inline json to_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

inline Vector vector_from_json(const json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

inline json to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) rows.push_back(to_json(Vector(m.row(r).transpose())));
  return rows;
}

inline Matrix matrix_from_json(const json& j) {
  const auto rows = j.get<std::vector<std::vector<double>>>();
  if (rows.empty()) return Matrix(0, 0);
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != rows[0].size()) throw ValidationError("ragged matrix");
    for (std::size_t c = 0; c < rows[r].size(); ++c) m(Eigen::Index(r), Eigen::Index(c)) = rows[r][c];
  }
  return m;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << contents;
  if (!out) throw IoError("failed writing '" + path + "'");
}

inline json parse_json(const std::string& text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(source, 0, e.what());
  }
}

// Wraps nlohmann type/key errors as ParseError so callers see one error family.
template <typename F>
auto decode(const std::string& source, std::size_t line, F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw ParseError(source, line, e.what());
  } catch (const ValidationError& e) {
    throw ParseError(source, line, e.what());
  }
}

// ---- MDP ----

inline json mdp_to_json(const TabularMdp& mdp) {
  json transition = json::array();
  for (int s = 0; s < mdp.num_states(); ++s) {
    json per_action = json::array();
    for (int a = 0; a < mdp.num_actions(); ++a)
      per_action.push_back(to_json(Vector(mdp.transition().row(mdp.pair(s, a)).transpose())));
    transition.push_back(std::move(per_action));
  }
  return {{"num_states", mdp.num_states()},
          {"num_actions", mdp.num_actions()},
          {"gamma", mdp.discount()},
          {"initial_dist", to_json(mdp.initial_dist())},
          {"transition", std::move(transition)}};
}

inline TabularMdp mdp_from_json(const json& j, const std::string& source = "<mdp>") {
  return decode(source, 0, [&] {
    const int ns = j.at("num_states").get<int>();
    const int na = j.at("num_actions").get<int>();
    if (ns < 1 || na < 1) throw ValidationError("num_states and num_actions must be positive");
    const auto& tr = j.at("transition");
    if (tr.size() != std::size_t(ns)) throw ValidationError("transition must have num_states rows");
    Matrix t(Eigen::Index(ns) * na, ns);
    for (int s = 0; s < ns; ++s) {
      if (tr[s].size() != std::size_t(na))
        throw ValidationError("transition[" + std::to_string(s) + "] must have num_actions rows");
      for (int a = 0; a < na; ++a) {
        const Vector row = vector_from_json(tr[s][a]);
        if (row.size() != ns)
          throw ValidationError("transition[" + std::to_string(s) + "][" + std::to_string(a) +
                                "] must have num_states entries");
        t.row(Eigen::Index(s) * na + a) = row.transpose();
      }
    }
    return TabularMdp(ns, na, std::move(t), vector_from_json(j.at("initial_dist")),
                      j.at("gamma").get<double>());
  });
}

// ---- gridworld ----

inline json grid_to_json(const GridSpec& spec) {
  json walls = json::array(), starts = json::array();
  for (const auto& w : spec.walls) walls.push_back({w.row, w.col});
  for (const auto& st : spec.start_cells)
    starts.push_back({{"cell", {st.cell.row, st.cell.col}}, {"weight", st.weight}});
  json j = {{"width", spec.width},   {"height", spec.height},
            {"walls", walls},        {"start_cells", starts},
            {"move_set", std::string(to_string(spec.move_set))},
            {"slip_prob", spec.slip_prob}};
  j["goal"] = spec.goal ? json{spec.goal->row, spec.goal->col} : json(nullptr);
  return j;
}

inline GridSpec grid_from_json(const json& j, const std::string& source = "<grid>") {
  return decode(source, 0, [&] {
    GridSpec spec;
    spec.width = j.value("width", spec.width);
    spec.height = j.value("height", spec.height);
    spec.walls.clear();
    for (const auto& w : j.value("walls", json::array()))
      spec.walls.push_back({w.at(0).get<int>(), w.at(1).get<int>()});
    if (j.contains("start_cells")) {
      spec.start_cells.clear();
      for (const auto& st : j.at("start_cells"))
        spec.start_cells.push_back(
            {{st.at("cell").at(0).get<int>(), st.at("cell").at(1).get<int>()},
             st.value("weight", 1.0)});
    }
    spec.move_set = parse_move_set(j.value("move_set", std::string("cardinal4")));
    spec.slip_prob = j.value("slip_prob", 0.0);
    if (j.contains("goal")) {
      const auto& g = j.at("goal");
      spec.goal = g.is_null() ? std::nullopt
                              : std::optional<Cell>(Cell{g.at(0).get<int>(), g.at(1).get<int>()});
    }
    spec.validate();
    return spec;
  });
}

/// A preset name ("figure2a", "figure2b") or the path of a GridSpec JSON file.
inline GridSpec load_grid(const std::string& name_or_path) {
  if (name_or_path == "figure2a" || name_or_path == "figure2b") return preset(name_or_path);
  return grid_from_json(parse_json(read_file(name_or_path), name_or_path), name_or_path);
}

// ---- datasets ----

inline json metadata_to_json(const DatasetMetadata& m) {
  return {{"env_id", m.env_id},         {"behavior_id", m.behavior_id},
          {"seed", m.seed},             {"num_states", m.num_states},
          {"num_actions", m.num_actions}, {"gamma", m.gamma},
          {"horizon", m.horizon}};
}

inline DatasetMetadata metadata_from_json(const json& j, const std::string& source) {
  return decode(source, 0, [&] {
    DatasetMetadata m;
    m.env_id = j.value("env_id", std::string());
    m.behavior_id = j.value("behavior_id", std::string());
    m.seed = j.value("seed", std::uint64_t{0});
    m.num_states = j.at("num_states").get<int>();
    m.num_actions = j.at("num_actions").get<int>();
    m.gamma = j.value("gamma", 0.99);
    m.horizon = j.value("horizon", 0);
    return m;
  });
}

/// JSON Lines, one episode per line.
inline std::string dataset_to_jsonl(const TrajectoryDataset& data) {
  std::string out;
  for (const auto& ep : data.episodes) {
    out += json{{"states", ep.states}, {"actions", ep.actions}, {"next_states", ep.next_states}}
               .dump();
    out += '\n';
  }
  return out;
}

/**
 * Parses JSON Lines episodes. Blank lines are skipped; malformed lines and
 * out-of-range indices (when num_states/num_actions are positive) raise a
 * ParseError carrying the 1-based line number.
 */
inline std::vector<Episode> episodes_from_jsonl(const std::string& text, const std::string& source,
                                                int num_states = 0, int num_actions = 0) {
  std::vector<Episode> episodes;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(source, lineno, e.what());
    }
    Episode ep = decode(source, lineno, [&] {
      return Episode{j.at("states").get<std::vector<int>>(), j.at("actions").get<std::vector<int>>(),
                     j.at("next_states").get<std::vector<int>>()};
    });
    if (ep.actions.size() != ep.size() || ep.next_states.size() != ep.size())
      throw ParseError(source, lineno, "states, actions and next_states differ in length");
    if (ep.size() == 0) throw ParseError(source, lineno, "empty episode");
    for (std::size_t t = 0; t < ep.size(); ++t) {
      auto bad = [](int v, int n) { return v < 0 || (n > 0 && v >= n); };
      if (bad(ep.states[t], num_states) || bad(ep.next_states[t], num_states))
        throw ParseError(source, lineno, "state index out of range at step " + std::to_string(t));
      if (bad(ep.actions[t], num_actions))
        throw ParseError(source, lineno, "action index out of range at step " + std::to_string(t));
    }
    episodes.push_back(std::move(ep));
  }
  if (episodes.empty()) throw ParseError(source, 0, "no episodes");
  return episodes;
}

inline std::string metadata_path(const std::string& dataset_path) {
  return dataset_path + ".meta.json";
}

inline void save_dataset(const TrajectoryDataset& data, const std::string& path) {
  write_file(path, dataset_to_jsonl(data));
  write_file(metadata_path(path), metadata_to_json(data.metadata).dump(2) + "\n");
}

/// Reads the JSONL file and its sidecar; the sidecar's sizes bound the indices.
inline TrajectoryDataset load_dataset(const std::string& path) {
  const std::string meta_path = metadata_path(path);
  TrajectoryDataset data;
  data.metadata = metadata_from_json(parse_json(read_file(meta_path), meta_path), meta_path);
  data.episodes = episodes_from_jsonl(read_file(path), path, data.metadata.num_states,
                                      data.metadata.num_actions);
  return data;
}

// ---- expert observations ----

inline json expert_to_json(const ExpertObservations& obs) {
  json j = {{"kind", obs.kind == ExpertObservations::Kind::SuccessExamples ? "success_examples"
                                                                           : "full_trajectories"},
            {"states", obs.states}};
  if (!obs.trajectories.empty()) j["trajectories"] = obs.trajectories;
  return j;
}

inline ExpertObservations expert_from_json(const json& j, const std::string& source) {
  return decode(source, 0, [&] {
    ExpertObservations obs;
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "success_examples") {
      obs.kind = ExpertObservations::Kind::SuccessExamples;
    } else if (kind == "full_trajectories") {
      obs.kind = ExpertObservations::Kind::FullTrajectories;
    } else {
      throw ValidationError("unknown expert kind '" + kind + "'");
    }
    obs.states = j.at("states").get<std::vector<int>>();
    if (j.contains("trajectories"))
      obs.trajectories = j.at("trajectories").get<std::vector<std::vector<int>>>();
    return obs;
  });
}

inline ExpertObservations load_expert(const std::string& path) {
  return expert_from_json(parse_json(read_file(path), path), path);
}

// ---- solver artifacts ----

inline json solution_to_json(const SmodiceSolution& sol) {
  return {{"v_star", to_json(sol.v_star)},
          {"xi_star", to_json(sol.xi_star)},
          {"d_star", to_json(sol.d_star)},
          {"policy", to_json(sol.policy.probs())},
          {"objective_value", sol.objective_value},
          {"divergence_estimate", sol.divergence_estimate},
          {"diagnostics", sol.diagnostics}};
}

inline SmodiceSolution solution_from_json(const json& j, const std::string& source) {
  return decode(source, 0, [&] {
    SmodiceSolution sol{vector_from_json(j.at("v_star")),
                        vector_from_json(j.at("xi_star")),
                        j.contains("d_star") ? vector_from_json(j.at("d_star")) : Vector(),
                        TabularPolicy(matrix_from_json(j.at("policy"))),
                        j.at("objective_value").get<double>(),
                        j.value("divergence_estimate", 0.0),
                        j.value("diagnostics", Diagnostics{})};
    return sol;
  });
}

inline TabularPolicy load_policy_from_solution(const std::string& path) {
  return solution_from_json(parse_json(read_file(path), path), path).policy;
}

inline json reward_to_json(const RewardVector& r) {
  return {{"r", to_json(r.r())}, {"clip_bounds", {r.lo(), r.hi()}}};
}

inline json bruteforce_to_json(const BruteForceResult& res) {
  return {{"policy", to_json(res.policy.probs())},
          {"divergence", res.divergence},
          {"num_policies", res.num_policies},
          {"num_optimal_policies", res.num_optimal_policies},
          {"num_optimal_occupancies", res.num_optimal_occupancies}};
}

inline json study_to_json(const StudyReport& report) {
  json rows = json::array();
  for (const auto& row : report.rows)
    rows.push_back({{"n", row.n}, {"median_error", row.median_error}, {"errors", row.errors}});
  return {{"rows", rows},
          {"slope", report.slope},
          {"ratios", report.ratios},
          {"inverse_norm", report.inverse_norm},
          {"inverse_norm_bound", report.inverse_norm_bound},
          {"assumption_held", report.assumption_held}};
}

}  // namespace smodice::io
