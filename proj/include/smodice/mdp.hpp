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

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "smodice/error.hpp"

namespace smodice {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

namespace detail {

inline std::string sa_name(long s, long a) {
  return "(s=" + std::to_string(s) + ", a=" + std::to_string(a) + ")";
}

inline void check_distribution(const Vector& p, double tol, const std::string& what) {
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (!std::isfinite(p[i]) || p[i] < 0.0 || p[i] > 1.0 + tol)
      throw ValidationError(what + ": entry " + std::to_string(i) + " = " +
                            std::to_string(p[i]) + " is not a probability");
  }
  if (std::abs(p.sum() - 1.0) > tol)
    throw ValidationError(what + ": sums to " + std::to_string(p.sum()) + ", expected 1");
}

}  // namespace detail

/**
 * Finite discounted MDP without rewards.
 *
 * Transitions are stored as an (|S||A|) x |S| matrix whose row s*|A|+a is
 * T(. | s, a). That layout is also the operator T acting on state functions:
 * (T V)(s,a) = sum_s' T(s'|s,a) V(s').
 */
class TabularMdp {
 public:
  static constexpr double kTolerance = 1e-12;

  TabularMdp(int num_states, int num_actions, Matrix transition, Vector initial_dist,
             double discount)
      : num_states_(num_states),
        num_actions_(num_actions),
        transition_(std::move(transition)),
        initial_dist_(std::move(initial_dist)),
        discount_(discount) {
    if (num_states < 1 || num_actions < 1)
      throw ValidationError("MDP needs at least one state and one action");
    if (transition_.rows() != num_pairs() || transition_.cols() != num_states)
      throw ValidationError("transition matrix must be (|S||A|) x |S|");
    if (initial_dist_.size() != num_states)
      throw ValidationError("initial distribution must have |S| entries");
    if (!(discount > 0.0 && discount < 1.0))
      throw ValidationError("discount must lie strictly inside (0, 1), got " +
                            std::to_string(discount));
    for (int s = 0; s < num_states; ++s) {
      for (int a = 0; a < num_actions; ++a) {
        detail::check_distribution(transition_.row(pair(s, a)).transpose(), kTolerance,
                                   "transition row " + detail::sa_name(s, a));
      }
    }
    detail::check_distribution(initial_dist_, kTolerance, "initial distribution");
  }

  int num_states() const { return num_states_; }
  int num_actions() const { return num_actions_; }
  int num_pairs() const { return num_states_ * num_actions_; }
  double discount() const { return discount_; }
  const Vector& initial_dist() const { return initial_dist_; }
  const Matrix& transition() const { return transition_; }

  Eigen::Index pair(int s, int a) const { return Eigen::Index(s) * num_actions_ + a; }
  double prob(int s, int a, int next) const { return transition_(pair(s, a), next); }

  /// (T V)(s,a) = E_{s'~T(.|s,a)} V(s').
  Vector expected_next(const Vector& values) const { return transition_ * values; }

  /// (T_* d)(s) = sum_{s~,a~} T(s | s~, a~) d(s~, a~); the adjoint of expected_next.
  Vector adjoint(const Vector& pair_weights) const {
    return transition_.transpose() * pair_weights;
  }

  /// (B V)(s,a) = V(s).
  Vector broadcast(const Vector& state_values) const {
    Vector out(num_pairs());
    for (int s = 0; s < num_states_; ++s)
      out.segment(pair(s, 0), num_actions_).setConstant(state_values[s]);
    return out;
  }

  /// Transpose of broadcast: sum over actions.
  Vector sum_actions(const Vector& pair_values) const {
    Vector out(num_states_);
    for (int s = 0; s < num_states_; ++s)
      out[s] = pair_values.segment(pair(s, 0), num_actions_).sum();
    return out;
  }

  /// The matrix gamma*T - B that maps V to the Bellman residual gamma*TV - V.
  Matrix residual_operator() const {
    Matrix op = discount_ * transition_;
    for (int s = 0; s < num_states_; ++s)
      for (int a = 0; a < num_actions_; ++a) op(pair(s, a), s) -= 1.0;
    return op;
  }

 private:
  int num_states_;
  int num_actions_;
  Matrix transition_;
  Vector initial_dist_;
  double discount_;
};

/// What to emit for a state whose action weights are all zero.
enum class UnvisitedFallback { Uniform, FirstAction };

/// Stochastic policy pi(a|s) stored as an |S| x |A| row-stochastic matrix.
class TabularPolicy {
 public:
  static constexpr double kTolerance = 1e-12;

  explicit TabularPolicy(Matrix probs) : probs_(std::move(probs)) {
    if (probs_.rows() < 1 || probs_.cols() < 1)
      throw ValidationError("policy needs at least one state and one action");
    for (Eigen::Index s = 0; s < probs_.rows(); ++s)
      detail::check_distribution(probs_.row(s).transpose(), kTolerance,
                                 "policy row " + std::to_string(s));
  }

  static TabularPolicy uniform(int num_states, int num_actions) {
    return TabularPolicy(Matrix::Constant(num_states, num_actions, 1.0 / num_actions));
  }

  static TabularPolicy deterministic(const std::vector<int>& actions, int num_actions) {
    Matrix p = Matrix::Zero(static_cast<Eigen::Index>(actions.size()), num_actions);
    for (std::size_t s = 0; s < actions.size(); ++s) {
      if (actions[s] < 0 || actions[s] >= num_actions)
        throw ValidationError("action index out of range at state " + std::to_string(s));
      p(static_cast<Eigen::Index>(s), actions[s]) = 1.0;
    }
    return TabularPolicy(std::move(p));
  }

  /// Normalizes each row of nonnegative weights; rows of zero mass get the fallback.
  static TabularPolicy from_weights(const Matrix& weights,
                                    UnvisitedFallback fallback = UnvisitedFallback::Uniform) {
    Matrix p(weights.rows(), weights.cols());
    for (Eigen::Index s = 0; s < weights.rows(); ++s) {
      const double mass = weights.row(s).sum();
      if (mass > 0.0) {
        p.row(s) = weights.row(s) / mass;
      } else if (fallback == UnvisitedFallback::Uniform) {
        p.row(s).setConstant(1.0 / static_cast<double>(weights.cols()));
      } else {
        p.row(s).setZero();
        p(s, 0) = 1.0;
      }
    }
    return TabularPolicy(std::move(p));
  }

  int num_states() const { return static_cast<int>(probs_.rows()); }
  int num_actions() const { return static_cast<int>(probs_.cols()); }
  double operator()(int s, int a) const { return probs_(s, a); }
  const Matrix& probs() const { return probs_; }

  /// Lowest action index whose probability is within tol of the row maximum.
  int greedy_action(int s, double tol = 1e-6) const {
    const double best = probs_.row(s).maxCoeff();
    for (int a = 0; a < num_actions(); ++a)
      if (probs_(s, a) >= best - tol) return a;
    return 0;
  }

 private:
  Matrix probs_;
};

/**
 * Normalized state-action visitation distribution d(s,a), indexed s*|A|+a.
 *
 * flow_residual is the max-norm violation of the Bellman flow constraint with
 * respect to whatever MDP produced the measure (0 when unknown).
 */
class OccupancyMeasure {
 public:
  OccupancyMeasure(int num_states, int num_actions, Vector d, double flow_residual = 0.0)
      : num_states_(num_states),
        num_actions_(num_actions),
        d_(std::move(d)),
        flow_residual_(flow_residual) {
    if (d_.size() != Eigen::Index(num_states) * num_actions)
      throw ValidationError("occupancy must have |S||A| entries");
    for (Eigen::Index i = 0; i < d_.size(); ++i) {
      if (!std::isfinite(d_[i]) || d_[i] < -1e-12)
        throw ValidationError("occupancy entry " + std::to_string(i) + " is negative");
      d_[i] = std::max(d_[i], 0.0);
    }
    if (std::abs(d_.sum() - 1.0) > 1e-9)
      throw ValidationError("occupancy sums to " + std::to_string(d_.sum()));
  }

  int num_states() const { return num_states_; }
  int num_actions() const { return num_actions_; }
  const Vector& d() const { return d_; }
  double operator()(int s, int a) const { return d_[Eigen::Index(s) * num_actions_ + a]; }
  double flow_residual() const { return flow_residual_; }

  /// d as an |S| x |A| matrix.
  Matrix as_matrix() const {
    return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        d_.data(), num_states_, num_actions_);
  }

 private:
  int num_states_;
  int num_actions_;
  Vector d_;
  double flow_residual_;
};

/// max_s | sum_a d(s,a) - (1-gamma) mu0(s) - gamma (T_* d)(s) |.
inline double flow_residual(const TabularMdp& mdp, const Vector& pair_weights) {
  const double g = mdp.discount();
  const Vector lhs = mdp.sum_actions(pair_weights);
  const Vector rhs = (1.0 - g) * mdp.initial_dist() + g * mdp.adjoint(pair_weights);
  return (lhs - rhs).cwiseAbs().maxCoeff();
}

/// State-to-state kernel P_pi(s, s') = sum_a pi(a|s) T(s'|s,a).
inline Matrix state_kernel(const TabularMdp& mdp, const TabularPolicy& policy) {
  const int ns = mdp.num_states(), na = mdp.num_actions();
  Matrix kernel = Matrix::Zero(ns, ns);
  for (int s = 0; s < ns; ++s)
    for (int a = 0; a < na; ++a)
      if (policy(s, a) != 0.0) kernel.row(s) += policy(s, a) * mdp.transition().row(mdp.pair(s, a));
  return kernel;
}

/**
 * Exact discounted occupancy of a policy.
 *
 * Solves the transpose Bellman equation for the state marginal,
 * (I - gamma P_pi^T) d(s) = (1-gamma) mu0, then d(s,a) = d(s) pi(a|s).
 */
inline OccupancyMeasure compute_occupancy(const TabularMdp& mdp, const TabularPolicy& policy) {
  if (policy.num_states() != mdp.num_states() || policy.num_actions() != mdp.num_actions())
    throw ValidationError("policy shape does not match the MDP");
  const int ns = mdp.num_states(), na = mdp.num_actions();
  const double g = mdp.discount();
  const Matrix system = Matrix::Identity(ns, ns) - g * state_kernel(mdp, policy).transpose();
  const Vector states = system.partialPivLu().solve((1.0 - g) * mdp.initial_dist());
  Vector d(mdp.num_pairs());
  for (int s = 0; s < ns; ++s)
    for (int a = 0; a < na; ++a) d[mdp.pair(s, a)] = std::max(states[s] * policy(s, a), 0.0);
  const double residual = flow_residual(mdp, d);
  if (!(residual <= 1e-6))
    throw Error("occupancy solve failed: flow residual " + std::to_string(residual));
  return OccupancyMeasure(ns, na, std::move(d), residual);
}

/// d(s) = sum_a d(s,a).
inline Vector marginalize_states(const OccupancyMeasure& occ) {
  return occ.as_matrix().rowwise().sum();
}

/// pi(a|s) = d(s,a) / d(s), with a fallback at states that have no mass.
inline TabularPolicy policy_from_occupancy(
    const OccupancyMeasure& occ, UnvisitedFallback fallback = UnvisitedFallback::Uniform) {
  return TabularPolicy::from_weights(occ.as_matrix(), fallback);
}

}  // namespace smodice
