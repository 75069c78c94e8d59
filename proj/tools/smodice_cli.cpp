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

// Command-line front end: data generation, solving, evaluation, rendering and
// the finite-sample study.
//
// Exit codes: 0 success, 2 invalid arguments or input, 3 I/O failure,
// 4 solver divergence.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "smodice.hpp"

namespace {

using namespace smodice;
namespace fs = std::filesystem;

constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;
constexpr int kExitDiverged = 4;

struct UsageError : Error {
  using Error::Error;
};

struct EnvOptions {
  std::string env = "figure2a";
  std::string move_set;
  double gamma = 0.99;
};

void add_env_options(CLI::App* cmd, EnvOptions& o) {
  cmd->add_option("--env", o.env, "Grid preset (figure2a, figure2b) or GridSpec JSON file")
      ->capture_default_str();
  cmd->add_option("--move-set", o.move_set, "Override the grid's move set (cardinal4, diagonal8)")
      ->check(CLI::IsMember({"cardinal4", "diagonal8"}));
  cmd->add_option("--gamma", o.gamma, "Discount factor")->capture_default_str();
}

GridSpec load_env(const EnvOptions& o) {
  GridSpec grid = io::load_grid(o.env);
  if (!o.move_set.empty()) grid = with_move_set(grid, parse_move_set(o.move_set));
  return grid;
}

TabularPolicy named_policy(const GridSpec& grid, const std::string& name) {
  if (name == "random") return random_behavior_policy(grid);
  if (name == "expert") return shortest_path_policy(grid);
  throw UsageError("unknown policy '" + name + "'");
}

void write_output(const std::string& path, const std::string& contents) {
  if (path.empty() || path == "-") {
    std::cout << contents;
  } else {
    io::write_file(path, contents);
  }
}

ExpertObservations load_target(const std::string& expert_path, const std::string& examples_path) {
  if (!expert_path.empty() && !examples_path.empty())
    throw UsageError("pass only one of --expert and --examples");
  if (expert_path.empty() && examples_path.empty())
    throw UsageError("one of --expert or --examples is required");
  if (!examples_path.empty()) {
    ExpertObservations obs = io::load_expert(examples_path);
    obs.kind = ExpertObservations::Kind::SuccessExamples;
    return obs;
  }
  return io::load_expert(expert_path);
}

Vector target_distribution(const ExpertObservations& obs, int num_states, double gamma) {
  return obs.kind == ExpertObservations::Kind::SuccessExamples
             ? reduce_examples_to_matching(obs, num_states)
             : expert_state_distribution(obs, num_states, gamma);
}

std::string format_diagnostics(const Diagnostics& diag) {
  std::ostringstream out;
  for (const auto& [key, value] : diag) out << "  " << key << " = " << value << '\n';
  return out.str();
}

// ---- gen-data ----

struct GenDataOptions {
  EnvOptions env;
  std::string policy = "random";
  int episodes = 10000;
  std::uint64_t seed = 0;
  int horizon = 0;
  std::string out;
  std::string expert_out;
};

int run_gen_data(const GenDataOptions& o) {
  const GridSpec grid = load_env(o.env);
  const TabularMdp mdp = build_mdp(grid, o.env.gamma);
  const int horizon = o.horizon > 0 ? o.horizon : horizon_for_discount(o.env.gamma);
  TrajectoryDataset data = collect(mdp, named_policy(grid, o.policy), o.episodes, horizon, o.seed);
  data.metadata.env_id = o.env.env;
  data.metadata.behavior_id = o.policy;
  io::save_dataset(data, o.out);
  if (!o.expert_out.empty())
    io::write_file(o.expert_out,
                   io::expert_to_json(ExpertObservations::from_dataset(data)).dump() + "\n");

  const auto states = offline_states(data);
  const std::set<int> seen(states.begin(), states.end());
  const auto reachable = reachable_states(grid);
  std::size_t covered = 0;
  for (int s : reachable) covered += seen.count(s);
  std::printf("episodes: %zu\ntransitions: %zu\ncoverage: %zu/%zu reachable states (%.1f%%)\n",
              data.episodes.size(), data.num_transitions(), covered, reachable.size(),
              100.0 * double(covered) / double(reachable.size()));
  return 0;
}

// ---- make-examples ----

struct ExamplesOptions {
  EnvOptions env;
  std::vector<int> cells;  // flattened row,col pairs
  std::string out;
};

int run_make_examples(const ExamplesOptions& o) {
  const GridSpec grid = load_env(o.env);
  std::vector<int> states;
  if (o.cells.empty()) {
    if (!grid.goal) throw UsageError("grid has no goal; pass --cell");
    states.push_back(grid.state_of(*grid.goal));
  }
  if (o.cells.size() % 2) throw UsageError("--cell takes row and column pairs");
  for (std::size_t i = 0; i + 1 < o.cells.size(); i += 2)
    states.push_back(grid.state_of({o.cells[i], o.cells[i + 1]}));
  write_output(o.out, io::expert_to_json(ExpertObservations::success_examples(states)).dump() + "\n");
  return 0;
}

// ---- solve ----

struct SolveOptions {
  std::string data;
  std::string expert;
  std::string examples;
  std::string divergence = "chi2";
  std::string method = "closed-form";
  std::optional<double> gamma;
  std::string reward = "counts";
  std::string occupancy = "model";
  int steps = 20000;
  double lr = 0.0;
  std::uint64_t seed = 0;
  bool random_init = false;
  bool plain = false;
  std::string out;
  std::string dump_stage;
};

int run_solve(const SolveOptions& o) {
  const FDivKind kind = parse_fdiv_kind(o.divergence);
  const SolverMethod method = parse_solver_method(o.method);
  if (method == SolverMethod::ClosedForm && kind != FDivKind::ChiSquared)
    throw UsageError("--method closed-form supports --divergence chi2 only");
  const TrajectoryDataset data = io::load_dataset(o.data);
  const ExpertObservations expert = load_target(o.expert, o.examples);
  PipelineOptions popts;
  popts.gamma = o.gamma.value_or(data.metadata.gamma);
  popts.occupancy = parse_occupancy_source(o.occupancy);
  popts.reward = parse_reward_source(o.reward);
  const int ns = data.metadata.num_states, na = data.metadata.num_actions;
  const OfflineProblem problem = build_offline_problem(data, expert, ns, na, popts);

  IterativeOptions iopts;
  iopts.steps = o.steps;
  iopts.lr = o.lr;
  iopts.seed = o.seed;
  iopts.random_init = o.random_init;
  if (o.plain) iopts.method = IterativeOptions::Method::Plain;
  const SmodiceSolution sol = solve_offline_problem(problem, kind, method, {}, iopts);

  if (!o.dump_stage.empty()) {
    fs::create_directories(o.dump_stage);
    const fs::path dir(o.dump_stage);
    io::write_file((dir / "reward.json").string(), io::reward_to_json(problem.reward).dump(2) + "\n");
    io::write_file((dir / "d_O.json").string(),
                   io::json{{"num_states", ns}, {"num_actions", na}, {"d", io::to_json(problem.d_O.d())}}
                           .dump(2) + "\n");
    io::write_file((dir / "v_star.json").string(), io::to_json(sol.v_star).dump(2) + "\n");
  }
  if (!o.out.empty()) io::write_file(o.out, io::solution_to_json(sol).dump(2) + "\n");
  std::printf("objective_value: %.10g\ndivergence_estimate: %.10g\ndiagnostics:\n%s",
              sol.objective_value, sol.divergence_estimate, format_diagnostics(sol.diagnostics).c_str());
  return 0;
}

// ---- eval ----

struct EvalOptions {
  EnvOptions env;
  std::string solution;
  std::string policy;
  std::string expert;
  std::string examples;
  bool brute_force = false;
  int threads = 1;
  std::string out;
};

TabularPolicy chosen_policy(const GridSpec& grid, const std::string& solution,
                            const std::string& policy) {
  if (!solution.empty() && !policy.empty()) throw UsageError("pass only one of --solution and --policy");
  if (!solution.empty()) return io::load_policy_from_solution(solution);
  return named_policy(grid, policy.empty() ? "random" : policy);
}

int run_eval(const EvalOptions& o) {
  const GridSpec grid = load_env(o.env);
  const TabularMdp mdp = build_mdp(grid, o.env.gamma);
  const TabularPolicy pi = chosen_policy(grid, o.solution, o.policy);
  if (pi.num_states() != mdp.num_states() || pi.num_actions() != mdp.num_actions())
    throw UsageError("policy does not match the environment");
  const Vector d_E =
      target_distribution(load_target(o.expert, o.examples), mdp.num_states(), o.env.gamma);
  Diagnostics metrics = evaluate_policy(mdp, pi, d_E);
  if (o.brute_force) {
    BruteForceOptions bopts;
    bopts.threads = o.threads;
    const BruteForceResult oracle = brute_force_best_policy(mdp, d_E, bopts);
    metrics["brute_force_optimum"] = oracle.divergence;
    metrics["gap_to_optimum"] = metrics["state_kl_to_expert"] - oracle.divergence;
    metrics["optimal_occupancies"] = static_cast<double>(oracle.num_optimal_occupancies);
  }
  if (!o.out.empty()) io::write_file(o.out, io::json(metrics).dump(2) + "\n");
  std::cout << format_diagnostics(metrics);
  return 0;
}

// ---- render ----

struct RenderCliOptions {
  EnvOptions env;
  std::string solution;
  std::string policy;
  std::string format = "ascii";
  bool occupancy = false;
  bool unicode = false;
  std::string out;
};

int run_render(const RenderCliOptions& o) {
  const GridSpec grid = load_env(o.env);
  const TabularMdp mdp = build_mdp(grid, o.env.gamma);
  const TabularPolicy pi = chosen_policy(grid, o.solution, o.policy);
  std::optional<OccupancyMeasure> occ;
  if (o.occupancy) occ = compute_occupancy(mdp, pi);
  RenderOptions ropts;
  ropts.unicode = o.unicode;
  write_output(o.out, o.format == "svg" ? render_policy_svg(grid, pi, occ)
                                        : render_policy_grid(grid, pi, occ, ropts));
  return 0;
}

// ---- study ----

struct StudyCliOptions {
  std::string sizes = "1e3,4e3,1.6e4,6.4e4";
  int seeds = 20;
  int states = 4;
  int actions = 2;
  double gamma = 0.9;
  std::uint64_t seed = 3;
  int threads = 1;
  std::string out;
};

std::vector<int> parse_sizes(const std::string& text) {
  std::vector<int> sizes;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    std::size_t used = 0;
    double value = 0.0;
    try {
      value = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size() || value < 1 || value != std::floor(value) || value > 1e9)
      throw UsageError("bad sample size '" + item + "'");
    sizes.push_back(static_cast<int>(value));
  }
  return sizes;
}

int run_study(const StudyCliOptions& o) {
  const std::vector<int> sizes = parse_sizes(o.sizes);
  Rng rng(o.seed);
  const TabularMdp mdp = random_mdp(rng, o.states, o.actions, o.gamma, 0.05);
  const TabularPolicy behavior = random_policy(rng, o.states, o.actions);
  const Vector d_E = random_distribution(rng, o.states, 0.1);
  StudyOptions sopts;
  sopts.seed = o.seed;
  sopts.threads = o.threads;
  const StudyReport report = finite_sample_study(mdp, behavior, d_E, sizes, o.seeds, sopts);
  if (!o.out.empty()) io::write_file(o.out, io::study_to_json(report).dump(2) + "\n");
  std::printf("%10s  %14s\n", "n", "median error");
  for (const auto& row : report.rows) std::printf("%10d  %14.6e\n", row.n, row.median_error);
  std::printf("slope: %.4f\n", report.slope);
  for (std::size_t i = 0; i < report.ratios.size(); ++i)
    std::printf("ratio %d -> %d: %.4f\n", report.rows[i].n, report.rows[i + 1].n, report.ratios[i]);
  std::printf("inverse norm %.4g vs assumed bound %.4g: %s\n", report.inverse_norm,
              report.inverse_norm_bound, report.assumption_held ? "held" : "violated");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tabular state-occupancy matching from offline data"};
  app.require_subcommand(1);

  GenDataOptions gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Roll out a policy in a gridworld and save a JSONL dataset");
  add_env_options(gen_cmd, gen.env);
  gen_cmd->add_option("--policy", gen.policy, "Rollout policy: random or expert (shortest path)")
      ->check(CLI::IsMember({"random", "expert"}))
      ->capture_default_str();
  gen_cmd->add_option("--episodes", gen.episodes, "Number of episodes (>= 1)")
      ->check(CLI::Range(1, 100000000))
      ->capture_default_str();
  gen_cmd->add_option("--seed", gen.seed, "Random seed")->capture_default_str();
  gen_cmd->add_option("--horizon", gen.horizon,
                      "Episode length; 0 picks the smallest H with gamma^H < 1e-4")
      ->check(CLI::NonNegativeNumber);
  gen_cmd->add_option("--out", gen.out, "Dataset path; metadata goes to <out>.meta.json")->required();
  gen_cmd->add_option("--expert-out", gen.expert_out,
                      "Also write the visited states as expert observations JSON");

  ExamplesOptions ex;
  auto* ex_cmd = app.add_subcommand("make-examples", "Write success-example observations for a grid");
  add_env_options(ex_cmd, ex.env);
  ex_cmd->add_option("--cell", ex.cells, "Success cell as ROW COL (repeatable); defaults to the goal")
      ->expected(2)
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  ex_cmd->add_option("--out", ex.out, "Output path (stdout if omitted)");

  SolveOptions solve;
  auto* solve_cmd = app.add_subcommand("solve", "Reward, dual value solve and weighted BC from a dataset");
  solve_cmd->add_option("--data", solve.data, "JSONL dataset (with .meta.json sidecar)")->required();
  solve_cmd->add_option("--expert", solve.expert, "Expert observations JSON");
  solve_cmd->add_option("--examples", solve.examples, "Success examples JSON");
  solve_cmd->add_option("--divergence", solve.divergence, "chi2 or kl")
      ->check(CLI::IsMember({"chi2", "kl"}))
      ->capture_default_str();
  solve_cmd->add_option("--method", solve.method, "closed-form (chi2 only) or iterative")
      ->check(CLI::IsMember({"closed-form", "iterative"}))
      ->capture_default_str();
  solve_cmd->add_option("--gamma", solve.gamma, "Discount factor (default: dataset metadata)");
  solve_cmd->add_option("--reward", solve.reward, "Reward path: counts or classifier")
      ->check(CLI::IsMember({"counts", "classifier"}))
      ->capture_default_str();
  solve_cmd->add_option("--occupancy", solve.occupancy,
                        "d^O source: model (estimated MDP and behavior policy) or counts")
      ->check(CLI::IsMember({"model", "counts"}))
      ->capture_default_str();
  solve_cmd->add_option("--steps", solve.steps, "Iterative solver step budget")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  solve_cmd->add_option("--lr", solve.lr, "Iterative solver initial step size (0 = default)");
  solve_cmd->add_option("--seed", solve.seed, "Seed for --random-init");
  solve_cmd->add_flag("--random-init", solve.random_init, "Start the iterative solver from random V");
  solve_cmd->add_flag("--plain", solve.plain,
                     "Fixed-step gradient descent instead of the accelerated default");
  solve_cmd->add_option("--out", solve.out, "Solution JSON path");
  solve_cmd->add_option("--dump-stage", solve.dump_stage,
                        "Directory for intermediate artifacts (reward, d^O, V*)");

  EvalOptions ev;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a policy's state occupancy against a target");
  add_env_options(eval_cmd, ev.env);
  eval_cmd->add_option("--solution", ev.solution, "Solution JSON whose policy is evaluated");
  eval_cmd->add_option("--policy", ev.policy, "Named policy instead of a solution: random or expert")
      ->check(CLI::IsMember({"random", "expert"}));
  eval_cmd->add_option("--expert", ev.expert, "Expert observations JSON");
  eval_cmd->add_option("--examples", ev.examples, "Success examples JSON");
  eval_cmd->add_flag("--brute-force", ev.brute_force,
                     "Also report the best deterministic policy's divergence");
  eval_cmd->add_option("--threads", ev.threads, "Threads for --brute-force")->check(CLI::PositiveNumber);
  eval_cmd->add_option("--out", ev.out, "Metrics JSON path");

  RenderCliOptions rd;
  auto* render_cmd = app.add_subcommand("render", "Draw a policy on its grid");
  add_env_options(render_cmd, rd.env);
  render_cmd->add_option("--solution", rd.solution, "Solution JSON whose policy is drawn");
  render_cmd->add_option("--policy", rd.policy, "Named policy instead of a solution: random or expert")
      ->check(CLI::IsMember({"random", "expert"}));
  render_cmd->add_option("--format", rd.format, "ascii or svg")
      ->check(CLI::IsMember({"ascii", "svg"}))
      ->capture_default_str();
  render_cmd->add_flag("--occupancy", rd.occupancy, "Shade cells by the policy's state occupancy");
  render_cmd->add_flag("--unicode", rd.unicode, "Arrow glyphs instead of ASCII letters");
  render_cmd->add_option("--out", rd.out, "Output path (stdout if omitted)");

  StudyCliOptions st;
  auto* study_cmd = app.add_subcommand("study", "Finite-sample convergence of the closed-form value solution");
  study_cmd->add_option("--sizes", st.sizes, "Comma-separated samples per state-action pair, increasing")
      ->capture_default_str();
  study_cmd->add_option("--seeds", st.seeds, "Seeds per sample size")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  study_cmd->add_option("--states", st.states, "States of the random MDP")->check(CLI::PositiveNumber)->capture_default_str();
  study_cmd->add_option("--actions", st.actions, "Actions of the random MDP")->check(CLI::PositiveNumber)->capture_default_str();
  study_cmd->add_option("--gamma", st.gamma, "Discount factor")->capture_default_str();
  study_cmd->add_option("--seed", st.seed, "Seed for the instance and the samples")->capture_default_str();
  study_cmd->add_option("--threads", st.threads, "Worker threads")->check(CLI::PositiveNumber);
  study_cmd->add_option("--out", st.out, "Report JSON path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*gen_cmd) return run_gen_data(gen);
    if (*ex_cmd) return run_make_examples(ex);
    if (*solve_cmd) return run_solve(solve);
    if (*eval_cmd) return run_eval(ev);
    if (*render_cmd) return run_render(rd);
    if (*study_cmd) return run_study(st);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const SolverDivergedError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitDiverged;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}
