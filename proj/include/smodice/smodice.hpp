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

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <string>

#include "smodice/dataset.hpp"
#include "smodice/discriminator.hpp"
#include "smodice/error.hpp"
#include "smodice/fdiv.hpp"
#include "smodice/mdp.hpp"
#include "smodice/random.hpp"

namespace smodice {

using Diagnostics = std::map<std::string, double>;

/**
 * The dual value objective
 *
 *   J(V) = (1-gamma) E_{mu0}[V(s)] + E_{(s,a)~d^O}[ f*(R(s) + gamma TV(s,a) - V(s)) ].
 *
 * For chi-squared the pointwise term is 1/2 max(0, y+1)^2: the conjugate over
 * nonnegative ratios (up to a constant), identical to 1/2 (y+1)^2 wherever no
 * weight is floored. For KL the expectation is the aggregated log-mean-exp
 * form. Pairs with d^O = 0 do not contribute.
 */
class DualObjective {
 public:
  DualObjective(const TabularMdp& mdp, const Vector& d_O, const Vector& reward, FDivKind kind)
      : kind_(kind),
        op_(mdp.residual_operator()),
        base_(mdp.broadcast(reward)),
        weights_(d_O),
        init_((1.0 - mdp.discount()) * mdp.initial_dist()) {
    if (d_O.size() != mdp.num_pairs()) throw ValidationError("d_O must have |S||A| entries");
    if (reward.size() != mdp.num_states()) throw ValidationError("reward must have |S| entries");
  }

  FDivKind kind() const { return kind_; }
  const Matrix& residual_operator() const { return op_; }
  const Vector& weights() const { return weights_; }

  /// y(s,a) = R(s) + gamma TV(s,a) - V(s).
  Vector advantages(const Vector& values) const { return base_ + op_ * values; }

  double value(const Vector& values) const {
    const Vector y = advantages(values);
    double total = init_.dot(values);
    if (kind_ == FDivKind::KL) return total + conjugate_kl_expectation(y, weights_);
    for (Eigen::Index i = 0; i < y.size(); ++i)
      if (weights_[i] > 0.0 && y[i] + 1.0 > 0.0) total += weights_[i] * conjugate_chi2(y[i]).value;
    return total;
  }

  Vector gradient(const Vector& values) const {
    const Vector y = advantages(values);
    Vector pair_grad(y.size());
    if (kind_ == FDivKind::KL) {
      const double log_norm = conjugate_kl_expectation(y, weights_);
      for (Eigen::Index i = 0; i < y.size(); ++i)
        pair_grad[i] = weights_[i] > 0.0 ? weights_[i] * std::exp(y[i] - log_norm) : 0.0;
    } else {
      for (Eigen::Index i = 0; i < y.size(); ++i)
        pair_grad[i] = weights_[i] > 0.0 ? weights_[i] * std::max(0.0, y[i] + 1.0) : 0.0;
    }
    return init_ + op_.transpose() * pair_grad;
  }

 private:
  FDivKind kind_;
  Matrix op_;
  Vector base_;
  Vector weights_;
  Vector init_;
};

struct SmodiceSolution {
  Vector v_star;
  Vector xi_star;
  /// Implied optimal occupancy xi* . d^O (not renormalized).
  Vector d_star;
  TabularPolicy policy;
  double objective_value = 0.0;
  double divergence_estimate = 0.0;
  Diagnostics diagnostics;
};

/// pi(a|s) proportional to xi(s,a) d^O(s,a); the maximizer of E_{d^O}[xi log pi].
inline TabularPolicy weighted_bc(const Vector& xi, const OccupancyMeasure& d_O,
                                 UnvisitedFallback fallback = UnvisitedFallback::Uniform) {
  if (xi.size() != d_O.d().size()) throw ValidationError("weighted_bc: size mismatch");
  Matrix weights(d_O.num_states(), d_O.num_actions());
  for (int s = 0; s < d_O.num_states(); ++s) {
    for (int a = 0; a < d_O.num_actions(); ++a) {
      const double x = xi[Eigen::Index(s) * d_O.num_actions() + a];
      if (x < 0.0) throw ValidationError("weighted_bc: negative importance weight");
      weights(s, a) = x * d_O(s, a);
    }
  }
  return TabularPolicy::from_weights(weights, fallback);
}

namespace detail {

struct PinvResult {
  Vector solution;
  int dropped = 0;
};

// Symmetric PSD pseudo-inverse solve; eigenvalues at or below tol * max are dropped.
inline PinvResult pinv_solve(const Matrix& sym, const Vector& rhs, double tol) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
  const Vector& lambda = eig.eigenvalues();
  const double cutoff = tol * std::max(lambda.cwiseAbs().maxCoeff(), 0.0);
  const Vector proj = eig.eigenvectors().transpose() * rhs;
  Vector scaled = Vector::Zero(proj.size());
  PinvResult out;
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    if (lambda[i] > cutoff) {
      scaled[i] = proj[i] / lambda[i];
    } else {
      ++out.dropped;
    }
  }
  out.solution = eig.eigenvectors() * scaled;
  return out;
}

// A^T diag(w) A for w >= 0.
inline Matrix weighted_gram(const Matrix& op, const Vector& w) {
  return op.transpose() * w.asDiagonal() * op;
}

inline SmodiceSolution finish_solution(const TabularMdp& mdp, const OccupancyMeasure& d_O,
                                       const DualObjective& objective, const FDivergenceSpec& spec,
                                       Vector values, Diagnostics diagnostics,
                                       UnvisitedFallback fallback) {
  const Vector y = objective.advantages(values);
  const Vector& w = d_O.d();
  Vector xi = primal_weights(spec, y, w);
  Vector d_star = xi.cwiseProduct(w);
  int supported = 0, floored = 0;
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    if (w[i] <= 0.0) continue;
    ++supported;
    if (spec.kind == FDivKind::ChiSquared && y[i] + 1.0 < 0.0) ++floored;
  }
  double divergence_estimate = 0.0;
  if (spec.kind == FDivKind::ChiSquared) {
    divergence_estimate = 0.5 * w.dot(xi.cwiseProduct(xi));
    diagnostics["chi2_divergence"] = 0.5 * w.dot((xi.array() - 1.0).square().matrix());
  } else {
    for (Eigen::Index i = 0; i < w.size(); ++i)
      if (d_star[i] > 0.0) divergence_estimate += d_star[i] * std::log(xi[i]);
  }
  diagnostics["weight_mass"] = d_star.sum();
  diagnostics["clamp_fraction"] = supported ? double(floored) / supported : 0.0;
  diagnostics["flow_residual"] = flow_residual(mdp, d_star);
  diagnostics["min_v"] = values.minCoeff();
  TabularPolicy policy = weighted_bc(xi, d_O, fallback);
  const double objective_value = objective.value(values);
  return SmodiceSolution{std::move(values), std::move(xi),      std::move(d_star),
                         std::move(policy), objective_value,    divergence_estimate,
                         std::move(diagnostics)};
}

inline void check_inputs(const TabularMdp& mdp, const OccupancyMeasure& d_O,
                         const RewardVector& reward) {
  if (d_O.num_states() != mdp.num_states() || d_O.num_actions() != mdp.num_actions())
    throw ValidationError("d_O shape does not match the MDP");
  if (reward.size() != mdp.num_states()) throw ValidationError("reward must have |S| entries");
}

}  // namespace detail

struct ClosedFormOptions {
  /// Relative eigenvalue cutoff for the pseudo-inverse.
  double pinv_tolerance = 1e-10;
  /// Re-solve on the set of unfloored pairs until it is stable.
  bool refine_active_set = true;
  int max_refinements = 200;
  double gradient_tolerance = 1e-12;
  UnvisitedFallback fallback = UnvisitedFallback::Uniform;
};

/**
 * Chi-squared solution in closed form.
 *
 * First V = pinv(A^T D A) ((gamma-1) mu0 + (B - gamma T)^T D (1 + BR)) with
 * A = gamma T - B and D = diag(d^O), followed by xi = max(0, BR + AV + 1).
 *
 * When that floors some supported pair, the unfloored quadratic is no longer
 * the dual of a nonnegative occupancy. With refine_active_set the solve is
 * repeated as a damped Newton iteration: each step solves the same normal
 * equations restricted to pairs with y+1 > 0, until the active set is stable.
 * If nothing is floored the first solve is returned unchanged.
 */
inline SmodiceSolution solve_closed_form_chi2(const TabularMdp& mdp, const OccupancyMeasure& d_O,
                                              const RewardVector& reward,
                                              const ClosedFormOptions& opts = {}) {
  detail::check_inputs(mdp, d_O, reward);
  const double g = mdp.discount();
  const DualObjective objective(mdp, d_O.d(), reward.r(), FDivKind::ChiSquared);
  const Matrix& op = objective.residual_operator();
  const Vector& w = d_O.d();
  const Vector ones_plus_r = Vector::Ones(mdp.num_pairs()) + mdp.broadcast(reward.r());

  const Matrix normal = detail::weighted_gram(op, w);
  const Vector rhs = -((1.0 - g) * mdp.initial_dist() + op.transpose() * w.cwiseProduct(ones_plus_r));
  auto first = detail::pinv_solve(normal, rhs, opts.pinv_tolerance);
  Vector values = std::move(first.solution);

  Diagnostics diag;
  diag["pinv_dropped"] = first.dropped;
  int refinements = 0;
  if (opts.refine_active_set) {
    for (; refinements < opts.max_refinements; ++refinements) {
      const Vector grad = objective.gradient(values);
      if (grad.cwiseAbs().maxCoeff() <= opts.gradient_tolerance) break;
      const Vector y = objective.advantages(values);
      Vector active = Vector::Zero(w.size());
      for (Eigen::Index i = 0; i < w.size(); ++i)
        if (w[i] > 0.0 && y[i] + 1.0 > 0.0) active[i] = w[i];
      Vector step = -detail::pinv_solve(detail::weighted_gram(op, active), grad,
                                        opts.pinv_tolerance)
                         .solution;
      double slope = grad.dot(step);
      if (!(slope < 0.0)) {
        step = -grad;
        slope = -grad.squaredNorm();
      }
      const double f0 = objective.value(values);
      double t = 1.0;
      Vector trial = values + step;
      while (objective.value(trial) > f0 + 1e-4 * t * slope && t > 1e-12) {
        t *= 0.5;
        trial = values + t * step;
      }
      if (t <= 1e-12) break;
      const Vector y_new = objective.advantages(trial);
      bool same_set = true;
      for (Eigen::Index i = 0; i < w.size() && same_set; ++i)
        if (w[i] > 0.0) same_set = (y[i] + 1.0 > 0.0) == (y_new[i] + 1.0 > 0.0);
      values = std::move(trial);
      if (t == 1.0 && same_set) {
        ++refinements;
        break;
      }
    }
  }
  diag["refinement_steps"] = refinements;
  diag["gradient_norm"] = objective.gradient(values).cwiseAbs().maxCoeff();
  return detail::finish_solution(mdp, d_O, objective, chi_squared(), std::move(values),
                                 std::move(diag), opts.fallback);
}

struct IterativeOptions {
  enum class Method { Accelerated, Plain };

  int steps = 20000;
  /// Initial step size; <= 0 selects 0.1 for chi2 and 0.01 for KL.
  double lr = 0.0;
  Method method = Method::Accelerated;
  /// Zero initialization unless set; the seed only affects random init.
  bool random_init = false;
  std::uint64_t seed = 0;
  double gradient_tolerance = 1e-11;
  UnvisitedFallback fallback = UnvisitedFallback::Uniform;
};

/**
 * Minimizes the dual value objective by full-batch first-order descent.
 *
 * Accelerated: Nesterov momentum with backtracking on the step size and a
 * function-value restart. Plain: fixed-step gradient descent. Both stop early
 * once the gradient max-norm drops below gradient_tolerance.
 */
inline SmodiceSolution solve_iterative(const TabularMdp& mdp_hat, const OccupancyMeasure& d_O,
                                       const RewardVector& reward, const FDivergenceSpec& spec,
                                       const IterativeOptions& opts = {}) {
  detail::check_inputs(mdp_hat, d_O, reward);
  if (opts.steps < 1) throw ValidationError("solve_iterative: steps must be >= 1");
  const DualObjective objective(mdp_hat, d_O.d(), reward.r(), spec.kind);
  const double lr0 = opts.lr > 0.0 ? opts.lr : (spec.kind == FDivKind::ChiSquared ? 0.1 : 0.01);

  Vector x = Vector::Zero(mdp_hat.num_states());
  if (opts.random_init) {
    Rng rng(opts.seed);
    for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = 0.01 * rng.normal();
  }
  double fx = objective.value(x);
  if (!std::isfinite(fx)) throw SolverDivergedError("dual value solve", 0, lr0);

  Vector y = x;
  double momentum = 1.0, lr = lr0;
  int step = 0;
  Vector grad_x = objective.gradient(x);
  for (; step < opts.steps; ++step) {
    if (grad_x.cwiseAbs().maxCoeff() <= opts.gradient_tolerance) break;
    if (opts.method == IterativeOptions::Method::Plain) {
      x -= lr * grad_x;
      fx = objective.value(x);
      if (!std::isfinite(fx) || !x.allFinite())
        throw SolverDivergedError("dual value solve", step + 1, lr);
      grad_x = objective.gradient(x);
      continue;
    }
    const Vector grad_y = objective.gradient(y);
    const double fy = objective.value(y);
    if (!std::isfinite(fy) || !grad_y.allFinite())
      throw SolverDivergedError("dual value solve", step + 1, lr);
    const double gnorm2 = grad_y.squaredNorm();
    Vector x_new;
    double f_new = 0.0;
    for (;;) {
      x_new = y - lr * grad_y;
      f_new = objective.value(x_new);
      if (std::isfinite(f_new) && f_new <= fy - 0.5 * lr * gnorm2) break;
      lr *= 0.5;
      if (lr < 1e-30) throw SolverDivergedError("dual value solve", step + 1, lr);
    }
    if (f_new > fx) {
      // restart momentum from the better point
      momentum = 1.0;
      y = x;
      continue;
    }
    const double next_momentum = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
    y = x_new + ((momentum - 1.0) / next_momentum) * (x_new - x);
    x = std::move(x_new);
    fx = f_new;
    momentum = next_momentum;
    grad_x = objective.gradient(x);
    lr *= 1.05;
  }

  Diagnostics diag;
  diag["steps"] = step;
  diag["final_lr"] = lr;
  diag["gradient_norm"] = grad_x.cwiseAbs().maxCoeff();
  return detail::finish_solution(mdp_hat, d_O, objective, spec, std::move(x), std::move(diag),
                                 opts.fallback);
}

/**
 * Success examples become the target state distribution directly, as if an
 * expert could jump straight to the success states.
 */
inline Vector reduce_examples_to_matching(const ExpertObservations& examples, int num_states) {
  if (examples.kind != ExpertObservations::Kind::SuccessExamples)
    throw ValidationError("reduce_examples_to_matching needs success examples");
  return expert_state_distribution(examples, num_states);
}

/// Metrics of a policy run in the true MDP against a target state distribution.
inline Diagnostics evaluate_policy(const TabularMdp& mdp_true, const TabularPolicy& policy,
                                   const Vector& d_E, double eps = 1e-8) {
  if (d_E.size() != mdp_true.num_states()) throw ValidationError("d_E must have |S| entries");
  const Vector d_pi = marginalize_states(compute_occupancy(mdp_true, policy));
  Diagnostics out;
  out["state_kl_to_expert"] = kl_smoothed(d_pi, d_E, eps);
  double on_support = 0.0, off_support_max = 0.0;
  for (Eigen::Index s = 0; s < d_pi.size(); ++s) {
    if (d_E[s] > 0.0) {
      on_support += d_pi[s];
    } else {
      off_support_max = std::max(off_support_max, d_pi[s]);
    }
  }
  out["success_state_mass"] = on_support;
  out["max_off_support_mass"] = off_support_max;
  return out;
}

inline Diagnostics evaluate_solution(const TabularMdp& mdp_true, const SmodiceSolution& solution,
                                     const Vector& d_E, double eps = 1e-8) {
  Diagnostics out = evaluate_policy(mdp_true, solution.policy, d_E, eps);
  out["flow_residual"] = flow_residual(mdp_true, solution.d_star);
  out["weight_mass"] = solution.d_star.sum();
  return out;
}

}  // namespace smodice
