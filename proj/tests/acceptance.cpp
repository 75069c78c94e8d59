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

// End-to-end acceptance checks. Each criterion prints one PASS/FAIL line; the
// exit status is nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "smodice.hpp"

namespace {

using namespace smodice;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* pattern, double a, double b = 0, double c = 0, double d = 0) {
  char buf[512];
  std::snprintf(buf, sizeof buf, pattern, a, b, c, d);
  return buf;
}

const WarningSink kQuiet;

// Closed-form chi2 solution from a random-behavior dataset in a gridworld.
SmodiceSolution solve_from_random_data(const GridSpec& spec, const ExpertObservations& expert,
                                       int episodes, std::uint64_t seed) {
  const TabularMdp mdp = build_mdp(spec, 0.99, kQuiet);
  const TrajectoryDataset data = collect(mdp, random_behavior_policy(spec), episodes,
                                         horizon_for_discount(0.99), seed);
  const OfflineProblem problem =
      build_offline_problem(data, expert, mdp.num_states(), mdp.num_actions(), {}, kQuiet);
  return solve_closed_form_chi2(problem.mdp_hat, problem.d_O, problem.reward);
}

Outcome mismatched_expert_optimality() {
  const auto t0 = Clock::now();
  const GridSpec grid = preset("figure2a");
  const GridSpec expert_grid = with_move_set(grid, MoveSet::Diagonal8);
  const TabularMdp mdp = build_mdp(grid, 0.99, kQuiet);
  const TabularMdp expert_mdp = build_mdp(expert_grid, 0.99, kQuiet);
  const TabularPolicy expert_policy = diagonal_expert_policy(expert_grid);
  const Vector d_E = marginalize_states(compute_occupancy(expert_mdp, expert_policy));
  const ExpertObservations expert = ExpertObservations::from_dataset(
      collect(expert_mdp, expert_policy, 1, horizon_for_discount(0.99), 0));

  const BruteForceResult oracle = brute_force_best_policy(mdp, d_E);
  double mean_kl = 0.0;
  constexpr int kSeeds = 5;
  for (int seed = 0; seed < kSeeds; ++seed) {
    const SmodiceSolution sol = solve_from_random_data(grid, expert, 10000, seed);
    mean_kl += evaluate_policy(mdp, sol.policy, d_E).at("state_kl_to_expert") / kSeeds;
  }
  const double elapsed = seconds_since(t0);
  // A stochastic policy may mix optimal deterministic paths and land below the
  // deterministic optimum, so only exceeding it counts as a miss.
  const bool pass = mean_kl <= oracle.divergence + 1e-3 && elapsed < 120.0;
  return {pass, fmt("mean KL %.6f vs deterministic optimum %.6f (gap %+.2e), %.1fs", mean_kl,
                    oracle.divergence, mean_kl - oracle.divergence, elapsed) +
                    ", " + std::to_string(oracle.num_optimal_occupancies) +
                    " tied optimal occupancies"};
}

Outcome example_based_dominance() {
  const auto t0 = Clock::now();
  const GridSpec grid = preset("figure2b");
  const TabularMdp mdp = build_mdp(grid, 0.99, kQuiet);
  const int goal = grid.state_of(*grid.goal);
  const SmodiceSolution sol =
      solve_from_random_data(grid, ExpertObservations::success_examples({goal}), 10000, 0);
  Vector d = marginalize_states(compute_occupancy(mdp, sol.policy));
  const double success = d[goal];
  d[goal] = -1.0;
  const double second = d.maxCoeff();
  const double elapsed = seconds_since(t0);
  const bool pass = success >= 0.90 && success >= 10.0 * second && elapsed < 60.0;
  return {pass, fmt("success occupancy %.4f, second largest %.4f, %.1fs", success, second,
                    elapsed)};
}

// Largest V difference after projecting out directions along which the chi2
// objective is flat (null space of the Hessian on unfloored pairs).
double determined_value_gap(const TabularMdp& mdp, const OccupancyMeasure& d_O,
                            const RewardVector& reward, const Vector& v1, const Vector& v2,
                            int* undetermined) {
  const Matrix op = mdp.residual_operator();
  const Vector y = mdp.broadcast(reward.r()) + op * v1;
  Vector active = Vector::Zero(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i)
    if (d_O.d()[i] > 0.0 && y[i] + 1.0 > 1e-9) active[i] = d_O.d()[i];
  const Matrix h = op.transpose() * active.asDiagonal() * op;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(h);
  const double cutoff = 1e-10 * eig.eigenvalues().cwiseAbs().maxCoeff();
  Matrix null_basis(h.rows(), 0);
  for (Eigen::Index k = 0; k < h.rows(); ++k) {
    if (std::abs(eig.eigenvalues()[k]) > cutoff) continue;
    null_basis.conservativeResize(Eigen::NoChange, null_basis.cols() + 1);
    null_basis.col(null_basis.cols() - 1) = eig.eigenvectors().col(k);
  }
  *undetermined = 0;
  for (Eigen::Index s = 0; s < h.rows(); ++s)
    if (null_basis.cols() > 0 && null_basis.row(s).norm() > 1e-8) ++*undetermined;
  const Vector diff = v1 - v2;
  const Vector projected = diff - null_basis * (null_basis.transpose() * diff);
  return projected.cwiseAbs().maxCoeff();
}

struct Comparison {
  double value_gap = 0.0;
  int argmax_mismatches = 0;
  int undetermined = 0;
};

Comparison compare_solvers(const TabularMdp& mdp, const OccupancyMeasure& d_O,
                           const RewardVector& reward) {
  const SmodiceSolution closed = solve_closed_form_chi2(mdp, d_O, reward);
  IterativeOptions it;
  it.steps = 200000;
  const SmodiceSolution iter = solve_iterative(mdp, d_O, reward, chi_squared(), it);
  Comparison c;
  c.value_gap = determined_value_gap(mdp, d_O, reward, closed.v_star, iter.v_star, &c.undetermined);
  const Vector d_s = marginalize_states(d_O);
  for (int s = 0; s < mdp.num_states(); ++s)
    if (d_s[s] > 0.0 && closed.policy.greedy_action(s) != iter.policy.greedy_action(s))
      ++c.argmax_mismatches;
  return c;
}

Outcome solver_equivalence() {
  Rng rng(2024);
  Comparison worst;
  int cases = 0;
  auto record = [&](const Comparison& c) {
    worst.value_gap = std::max(worst.value_gap, c.value_gap);
    worst.argmax_mismatches += c.argmax_mismatches;
    worst.undetermined += c.undetermined;
    ++cases;
  };
  for (int k = 0; k < 10; ++k) {
    const int ns = 3 + k % 4, na = 2 + k % 3;
    const TabularMdp mdp = random_mdp(rng, ns, na, 0.9, 0.0);
    const OccupancyMeasure d_O = compute_occupancy(mdp, random_policy(rng, ns, na));
    const Vector d_E = random_distribution(rng, ns, 0.0);
    record(compare_solvers(mdp, d_O, reward_from_counts(d_E, marginalize_states(d_O), {}, kQuiet)));
  }
  for (const char* name : {"figure2a", "figure2b"}) {
    const GridSpec grid = preset(name);
    const TabularMdp mdp = build_mdp(grid, 0.99, kQuiet);
    ExpertObservations expert;
    if (std::string(name) == "figure2a") {
      const GridSpec expert_grid = with_move_set(grid, MoveSet::Diagonal8);
      expert = ExpertObservations::from_dataset(collect(build_mdp(expert_grid, 0.99, kQuiet),
                                                        diagonal_expert_policy(expert_grid), 1,
                                                        horizon_for_discount(0.99), 0));
    } else {
      expert = ExpertObservations::success_examples({grid.state_of(*grid.goal)});
    }
    const TrajectoryDataset data = collect(mdp, random_behavior_policy(grid), 2000,
                                           horizon_for_discount(0.99), 7);
    const OfflineProblem p =
        build_offline_problem(data, expert, mdp.num_states(), mdp.num_actions(), {}, kQuiet);
    record(compare_solvers(p.mdp_hat, p.d_O, p.reward));
  }
  const bool pass = worst.value_gap <= 1e-3 && worst.argmax_mismatches == 0;
  return {pass, fmt("%.0f instances, max V gap %.2e, argmax mismatches %.0f, flat-direction states %.0f",
                    cases, worst.value_gap, worst.argmax_mismatches, worst.undetermined)};
}

Outcome upper_bound_suite() {
  Rng rng(7);
  double worst_bound = -1e300, worst_lemma = -1e300;
  for (int k = 0; k < 100; ++k) {
    const int ns = 2 + k % 5, na = 2 + k % 3;
    const TabularMdp mdp = random_mdp(rng, ns, na, 0.5 + 0.45 * rng.uniform(), 0.0);
    const OccupancyMeasure d_pi = compute_occupancy(mdp, random_policy(rng, ns, na));
    const OccupancyMeasure d_O = compute_occupancy(mdp, random_policy(rng, ns, na));
    const OccupancyMeasure d_E = compute_occupancy(mdp, random_policy(rng, ns, na));
    const Vector pi_s = marginalize_states(d_pi), o_s = marginalize_states(d_O),
                 e_s = marginalize_states(d_E);
    const double lhs = divergence(kullback_leibler(), pi_s, e_s);
    double reward_term = 0.0;
    for (int s = 0; s < ns; ++s) reward_term += pi_s[s] * std::log(o_s[s] / e_s[s]);
    const double bound = reward_term + divergence(kullback_leibler(), d_pi.d(), d_O.d());
    worst_bound = std::max(worst_bound, lhs - bound);
    worst_lemma = std::max(worst_lemma, lhs - divergence(kullback_leibler(), d_pi.d(), d_E.d()));
  }
  const bool pass = worst_bound <= 1e-9 && worst_lemma <= 1e-9;
  return {pass, fmt("max violation: bound %.2e, state vs pair KL %.2e (100 tuples)", worst_bound,
                    worst_lemma)};
}

// Maximum of x*y - f(x) over x >= 0: dense grid, then golden-section polish.
double grid_conjugate(const std::function<double(double)>& f, double y) {
  auto obj = [&](double x) { return x * y - f(x); };
  double best_x = 0.0, best = obj(0.0);
  const int n = 600000;
  const double hi = 60.0;
  for (int i = 1; i <= n; ++i) {
    const double x = hi * i / n;
    if (obj(x) > best) best = obj(x), best_x = x;
  }
  double a = std::max(0.0, best_x - hi / n), b = std::min(hi, best_x + hi / n);
  const double r = (std::sqrt(5.0) - 1) / 2;
  for (int it = 0; it < 200; ++it) {
    const double c = b - r * (b - a), d = a + r * (b - a);
    if (obj(c) > obj(d)) b = d; else a = c;
  }
  return std::max(best, obj(0.5 * (a + b)));
}

Outcome fenchel_suite() {
  double worst_value = 0.0, worst_deriv = 0.0, worst_grad = 0.0;
  for (const FDivergenceSpec& spec : {chi_squared(), kullback_leibler()}) {
    for (double y = -3.0; y <= 3.0 + 1e-12; y += 0.25) {
      worst_value = std::max(worst_value, std::abs(grid_conjugate(spec.f, y) - spec.f_conj(y)));
      if (spec.kind == FDivKind::ChiSquared && std::abs(y + 1.0) < 1e-9) continue;  // kink
      const double h = 1e-5;
      const double fd = (spec.f_conj(y + h) - spec.f_conj(y - h)) / (2 * h);
      worst_deriv = std::max(worst_deriv, std::abs(fd - spec.f_conj_deriv(y)));
    }
  }
  Rng rng(11);
  for (const FDivKind kind : {FDivKind::ChiSquared, FDivKind::KL}) {
    for (int k = 0; k < 20; ++k) {
      const int ns = 3 + k % 3, na = 2 + k % 2;
      const TabularMdp mdp = random_mdp(rng, ns, na, 0.9, 0.0);
      const Vector d_O = compute_occupancy(mdp, random_policy(rng, ns, na)).d();
      Vector r(ns), v(ns);
      for (int s = 0; s < ns; ++s) r[s] = 2.0 * rng.normal(), v[s] = 2.0 * rng.normal();
      const DualObjective obj(mdp, d_O, r, kind);
      const Vector g = obj.gradient(v);
      Vector fd(ns);
      for (int s = 0; s < ns; ++s) {
        const double h = 1e-6;
        Vector vp = v, vm = v;
        vp[s] += h;
        vm[s] -= h;
        fd[s] = (obj.value(vp) - obj.value(vm)) / (2 * h);
      }
      worst_grad = std::max(worst_grad, (g - fd).norm() / std::max(g.norm(), 1e-12));
    }
  }
  const bool pass = worst_value <= 1e-4 && worst_deriv <= 1e-6 && worst_grad <= 1e-5;
  return {pass, fmt("conjugate vs grid %.2e, derivative vs FD %.2e, gradient rel. err %.2e",
                    worst_value, worst_deriv, worst_grad)};
}

Outcome finite_sample_rate() {
  const auto t0 = Clock::now();
  Rng rng(3);
  const TabularMdp mdp = random_mdp(rng, 4, 2, 0.9, 0.05);
  const TabularPolicy behavior = random_policy(rng, 4, 2);
  const Vector d_E = random_distribution(rng, 4, 0.1);
  StudyOptions opts;
  opts.threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  const StudyReport report = finite_sample_study(mdp, behavior, d_E, {1000, 4000, 16000, 64000}, 20, opts);
  const double elapsed = seconds_since(t0);
  const bool pass = report.slope >= -0.7 && report.slope <= -0.3 && elapsed < 600.0;
  std::string medians;
  for (const auto& row : report.rows) medians += fmt(" %.2e", row.median_error);
  return {pass, fmt("slope %.3f, %.1fs, medians:", report.slope, elapsed) + medians};
}

Outcome degenerate_fixed_point() {
  Rng rng(5);
  double worst_xi = 0.0, worst_tv = 0.0;
  auto check = [&](const TabularMdp& mdp, const TabularPolicy& behavior) {
    const OccupancyMeasure d_O = compute_occupancy(mdp, behavior);
    const RewardVector zero = RewardVector::zeros(mdp.num_states());
    for (int which = 0; which < 2; ++which) {
      const SmodiceSolution sol = which == 0
                                      ? solve_closed_form_chi2(mdp, d_O, zero)
                                      : solve_iterative(mdp, d_O, zero, chi_squared());
      for (Eigen::Index i = 0; i < sol.xi_star.size(); ++i)
        if (d_O.d()[i] > 0.0) worst_xi = std::max(worst_xi, std::abs(sol.xi_star[i] - 1.0));
      const Vector d_s = marginalize_states(d_O);
      for (int s = 0; s < mdp.num_states(); ++s) {
        if (d_s[s] <= 0.0) continue;
        const double tv =
            0.5 * (sol.policy.probs().row(s) - behavior.probs().row(s)).cwiseAbs().sum();
        worst_tv = std::max(worst_tv, tv);
      }
    }
  };
  for (int k = 0; k < 10; ++k) {
    const int ns = 3 + k % 4, na = 2 + k % 3;
    const TabularMdp mdp = random_mdp(rng, ns, na, 0.9, 0.0);
    check(mdp, random_policy(rng, ns, na));
  }
  for (const char* name : {"figure2a", "figure2b"}) {
    const GridSpec grid = preset(name);
    check(build_mdp(grid, 0.99, kQuiet), random_behavior_policy(grid));
  }
  const bool pass = worst_xi <= 1e-3 && worst_tv <= 1e-3;
  return {pass, fmt("max |xi - 1| %.2e, max per-state TV %.2e", worst_xi, worst_tv)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"mismatched-expert optimality", mismatched_expert_optimality},
      {"example-based dominance", example_based_dominance},
      {"closed-form vs iterative equivalence", solver_equivalence},
      {"upper-bound suite", upper_bound_suite},
      {"Fenchel conjugate suite", fenchel_suite},
      {"finite-sample rate", finite_sample_rate},
      {"degenerate fixed point", degenerate_fixed_point},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("[%s] %zu. %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first,
                o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
