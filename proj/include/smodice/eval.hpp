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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "smodice/discriminator.hpp"
#include "smodice/error.hpp"
#include "smodice/fdiv.hpp"
#include "smodice/gridworld.hpp"
#include "smodice/mdp.hpp"
#include "smodice/random.hpp"
#include "smodice/smodice.hpp"

namespace smodice {

namespace detail {

// Runs body(i) for i in [0, n) on up to `threads` workers; body must only write slot i.
template <typename Body>
void parallel_for(std::size_t n, int threads, Body body) {
  const std::size_t workers = std::clamp<std::size_t>(threads > 0 ? threads : 1, 1, std::max<std::size_t>(n, 1));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += workers) body(i);
    });
  }
  for (auto& t : pool) t.join();
}

inline std::vector<int> decode_policy(std::uint64_t code, int num_states, int num_actions) {
  std::vector<int> actions(static_cast<std::size_t>(num_states));
  for (auto& a : actions) {
    a = static_cast<int>(code % static_cast<std::uint64_t>(num_actions));
    code /= static_cast<std::uint64_t>(num_actions);
  }
  return actions;
}

}  // namespace detail

struct BruteForceOptions {
  double eps = 1e-8;
  double tie_tolerance = 1e-12;
  int threads = 1;
};

struct BruteForceResult {
  TabularPolicy policy;
  double divergence = 0.0;
  std::size_t num_policies = 0;
  /// Deterministic policies within tie_tolerance of the optimum.
  std::size_t num_optimal_policies = 0;
  /// Distinct state occupancies among those (policies differing only off-path collapse).
  std::size_t num_optimal_occupancies = 0;
};

/**
 * Exhaustive minimum of smoothed KL(d^pi(s) || d_E) over all |A|^|S|
 * deterministic policies. Policy k assigns digit s of k in base |A| to state s;
 * among ties the smallest k wins, independent of the thread count.
 */
inline BruteForceResult brute_force_best_policy(const TabularMdp& mdp, const Vector& d_E,
                                                const BruteForceOptions& opts = {}) {
  const int ns = mdp.num_states(), na = mdp.num_actions();
  if (d_E.size() != ns) throw ValidationError("d_E must have |S| entries");
  const double count = std::pow(static_cast<double>(na), ns);
  if (count > 1e6) throw InstanceTooLargeError(count);
  const auto total = static_cast<std::size_t>(std::llround(count));

  auto score = [&](std::size_t k) {
    const auto pi = TabularPolicy::deterministic(detail::decode_policy(k, ns, na), na);
    return kl_smoothed(marginalize_states(compute_occupancy(mdp, pi)), d_E, opts.eps);
  };
  std::vector<double> values(total);
  detail::parallel_for(total, opts.threads, [&](std::size_t k) { values[k] = score(k); });

  const double best = *std::min_element(values.begin(), values.end());
  std::size_t best_k = total;
  std::vector<Vector> distinct;
  std::size_t ties = 0;
  for (std::size_t k = 0; k < total; ++k) {
    if (values[k] > best + opts.tie_tolerance) continue;
    if (best_k == total) best_k = k;
    ++ties;
    const auto pi = TabularPolicy::deterministic(detail::decode_policy(k, ns, na), na);
    Vector occ = marginalize_states(compute_occupancy(mdp, pi));
    const bool seen = std::any_of(distinct.begin(), distinct.end(), [&](const Vector& v) {
      return (v - occ).cwiseAbs().maxCoeff() <= 1e-9;
    });
    if (!seen) distinct.push_back(std::move(occ));
  }
  return BruteForceResult{TabularPolicy::deterministic(detail::decode_policy(best_k, ns, na), na),
                          values[best_k], total, ties, distinct.size()};
}

struct StudyOptions {
  std::uint64_t seed = 0;
  int threads = 1;
  RewardOptions reward;
  ClosedFormOptions solver;
};

struct StudyRow {
  int n = 0;
  double median_error = 0.0;
  std::vector<double> errors;  // one per seed, in seed order
};

struct StudyReport {
  std::vector<StudyRow> rows;
  /// Least-squares slope of log(median error) against log(n).
  double slope = 0.0;
  /// median(n_i) / median(n_{i+1}) for consecutive sizes.
  std::vector<double> ratios;
  /// ||(A^T D A)^{-1}||_inf and the bound 1/((1-gamma)^2 D_min) it is assumed to obey.
  double inverse_norm = 0.0;
  double inverse_norm_bound = 0.0;
  bool assumption_held = false;
};

inline double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

/// Least-squares slope of y on x.
inline double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i] / n;
    my += y[i] / n;
  }
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxx > 0 ? sxy / sxx : 0.0;
}

/// MDP whose rows are n(s,a,s')/n from n generative-model draws per pair.
inline TabularMdp sample_transition_model(const TabularMdp& mdp, int n, Rng& rng) {
  Matrix counts = Matrix::Zero(mdp.num_pairs(), mdp.num_states());
  for (Eigen::Index row = 0; row < counts.rows(); ++row) {
    const auto probs = mdp.transition().row(row);
    for (int i = 0; i < n; ++i) counts(row, rng.categorical(probs)) += 1.0;
  }
  counts /= static_cast<double>(n);
  return TabularMdp(mdp.num_states(), mdp.num_actions(), std::move(counts), mdp.initial_dist(),
                    mdp.discount());
}

/**
 * Empirical convergence of the closed-form chi-squared value solution as the
 * transition model is estimated from n samples per state-action pair.
 */
inline StudyReport finite_sample_study(const TabularMdp& mdp_true, const TabularPolicy& behavior,
                                       const Vector& d_E, const std::vector<int>& sample_sizes,
                                       int seeds_per_size, const StudyOptions& opts = {}) {
  if (sample_sizes.empty() || seeds_per_size < 1)
    throw ValidationError("study needs sample sizes and at least one seed");
  for (std::size_t i = 0; i < sample_sizes.size(); ++i)
    if (sample_sizes[i] < 1 || (i > 0 && sample_sizes[i] <= sample_sizes[i - 1]))
      throw ValidationError("sample sizes must be positive and increasing");

  const WarningSink quiet;
  auto solve_on = [&](const TabularMdp& model) {
    const OccupancyMeasure d_O = compute_occupancy(model, behavior);
    const RewardVector r = reward_from_counts(d_E, marginalize_states(d_O), opts.reward, quiet);
    return solve_closed_form_chi2(model, d_O, r, opts.solver).v_star;
  };
  const Vector v_true = solve_on(mdp_true);

  const std::size_t per_size = static_cast<std::size_t>(seeds_per_size);
  std::vector<double> errors(sample_sizes.size() * per_size);
  detail::parallel_for(errors.size(), opts.threads, [&](std::size_t job) {
    const std::size_t size_idx = job / per_size, seed_idx = job % per_size;
    Rng rng(opts.seed * 1000003ULL + size_idx * 7919ULL + seed_idx);
    const TabularMdp model = sample_transition_model(mdp_true, sample_sizes[size_idx], rng);
    errors[job] = (solve_on(model) - v_true).cwiseAbs().maxCoeff();
  });

  StudyReport report;
  std::vector<double> log_n, log_err;
  for (std::size_t i = 0; i < sample_sizes.size(); ++i) {
    StudyRow row;
    row.n = sample_sizes[i];
    row.errors.assign(errors.begin() + static_cast<long>(i * per_size),
                      errors.begin() + static_cast<long>((i + 1) * per_size));
    row.median_error = median(row.errors);
    log_n.push_back(std::log(static_cast<double>(row.n)));
    log_err.push_back(std::log(row.median_error));
    report.rows.push_back(std::move(row));
  }
  report.slope = fit_slope(log_n, log_err);
  for (std::size_t i = 0; i + 1 < report.rows.size(); ++i)
    report.ratios.push_back(report.rows[i + 1].median_error / report.rows[i].median_error);

  const OccupancyMeasure d_O = compute_occupancy(mdp_true, behavior);
  const Matrix op = mdp_true.residual_operator();
  const Matrix normal = op.transpose() * d_O.d().asDiagonal() * op;
  const Matrix inverse = normal.completeOrthogonalDecomposition().pseudoInverse();
  report.inverse_norm = inverse.cwiseAbs().rowwise().sum().maxCoeff();
  const double g = mdp_true.discount();
  report.inverse_norm_bound = 1.0 / ((1.0 - g) * (1.0 - g) * d_O.d().minCoeff());
  report.assumption_held = report.inverse_norm <= report.inverse_norm_bound;
  return report;
}

struct RenderOptions {
  bool unicode = false;
};

namespace detail {

inline std::string action_glyph(MoveSet set, int action, bool unicode) {
  static const char* ascii4[] = {"^", ">", "v", "<"};
  static const char* uni4[] = {"↑", "→", "↓", "←"};
  // numpad convention for diagonals: 9 up-right, 3 down-right, 1 down-left, 7 up-left
  static const char* ascii8[] = {"^", "9", ">", "3", "v", "1", "<", "7"};
  static const char* uni8[] = {"↑", "↗", "→", "↘",
                               "↓", "↙", "←", "↖"};
  if (set == MoveSet::Cardinal4) return unicode ? uni4[action] : ascii4[action];
  return unicode ? uni8[action] : ascii8[action];
}

inline bool all_tied(const TabularPolicy& policy, int s) {
  const auto row = policy.probs().row(s);
  return row.maxCoeff() - row.minCoeff() <= 1e-9;
}

}  // namespace detail

/**
 * Text rendering: one glyph per cell (the greedy action, '.' when every action
 * is equally likely, 'G' at the goal, '#' for walls), optionally followed by
 * an occupancy shading grid on a square-root scale.
 */
inline std::string render_policy_grid(const GridSpec& spec, const TabularPolicy& policy,
                                      const std::optional<OccupancyMeasure>& occupancy = {},
                                      const RenderOptions& opts = {}) {
  spec.validate();
  if (policy.num_states() != spec.num_states() || policy.num_actions() != spec.num_actions())
    throw ValidationError("policy does not match the grid");
  std::ostringstream out;
  for (int r = 0; r < spec.height; ++r) {
    for (int c = 0; c < spec.width; ++c) {
      if (c) out << ' ';
      const Cell cell{r, c};
      if (spec.is_wall(cell)) {
        out << '#';
      } else if (spec.goal && *spec.goal == cell) {
        out << 'G';
      } else {
        const int s = spec.state_of(cell);
        out << (detail::all_tied(policy, s)
                    ? std::string(".")
                    : detail::action_glyph(spec.move_set, policy.greedy_action(s, 1e-9),
                                           opts.unicode));
      }
    }
    out << '\n';
  }
  if (occupancy) {
    static const std::string shades = " .:-=+*%@";
    const Vector d = marginalize_states(*occupancy);
    const double peak = d.maxCoeff();
    out << '\n';
    for (int r = 0; r < spec.height; ++r) {
      for (int c = 0; c < spec.width; ++c) {
        if (c) out << ' ';
        const Cell cell{r, c};
        if (spec.is_wall(cell)) {
          out << '#';
          continue;
        }
        // square-root scale so small but nonzero mass stays visible
        const double level = peak > 0 ? std::sqrt(d[spec.state_of(cell)] / peak) : 0.0;
        auto idx = static_cast<std::size_t>(std::lround(level * double(shades.size() - 1)));
        if (level > 0.0) idx = std::max<std::size_t>(idx, 1);
        out << shades[idx];
      }
      out << '\n';
    }
  }
  return out.str();
}

/// SVG rendering with arrows for the greedy action and blue occupancy shading.
inline std::string render_policy_svg(const GridSpec& spec, const TabularPolicy& policy,
                                     const std::optional<OccupancyMeasure>& occupancy = {}) {
  spec.validate();
  if (policy.num_states() != spec.num_states() || policy.num_actions() != spec.num_actions())
    throw ValidationError("policy does not match the grid");
  constexpr int cell = 40;
  std::optional<Vector> d;
  if (occupancy) d = marginalize_states(*occupancy);
  const double peak = d ? d->maxCoeff() : 0.0;
  const auto mv = moves(spec.move_set);
  std::ostringstream out;
  out << std::fixed << std::setprecision(3);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << spec.width * cell
      << "\" height=\"" << spec.height * cell << "\">\n"
      << "<defs><marker id=\"head\" markerWidth=\"6\" markerHeight=\"6\" refX=\"3\" refY=\"3\" "
         "orient=\"auto\"><path d=\"M0,0 L6,3 L0,6 z\" fill=\"black\"/></marker></defs>\n";
  for (int r = 0; r < spec.height; ++r) {
    for (int c = 0; c < spec.width; ++c) {
      const Cell here{r, c};
      const int x = c * cell, y = r * cell;
      std::string fill = "white";
      double opacity = 1.0;
      if (spec.is_wall(here)) {
        fill = "black";
      } else if (d && peak > 0) {
        fill = "royalblue";
        opacity = (*d)[spec.state_of(here)] / peak;
      }
      out << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cell << "\" height=\""
          << cell << "\" fill=\"" << fill << "\" fill-opacity=\"" << opacity
          << "\" stroke=\"gray\"/>\n";
      if (spec.is_wall(here)) continue;
      const double cx = x + cell / 2.0, cy = y + cell / 2.0;
      if (spec.goal && *spec.goal == here) {
        out << "<circle cx=\"" << cx << "\" cy=\"" << cy << "\" r=\"" << cell / 4.0
            << "\" fill=\"green\"/>\n";
        continue;
      }
      const int s = spec.state_of(here);
      if (detail::all_tied(policy, s)) continue;
      const auto m = mv[static_cast<std::size_t>(policy.greedy_action(s, 1e-9))];
      const double len = cell * 0.35 / std::hypot(double(m.drow), double(m.dcol));
      out << "<line x1=\"" << cx << "\" y1=\"" << cy << "\" x2=\"" << cx + m.dcol * len
          << "\" y2=\"" << cy + m.drow * len
          << "\" stroke=\"black\" stroke-width=\"2\" marker-end=\"url(#head)\"/>\n";
    }
  }
  out << "</svg>\n";
  return out.str();
}

}  // namespace smodice
