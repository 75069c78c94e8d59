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
#include <string>
#include <vector>

#include "smodice/dataset.hpp"
#include "smodice/error.hpp"
#include "smodice/mdp.hpp"

namespace smodice {

/// Per-state reward, finite and inside [lo, hi].
class RewardVector {
 public:
  RewardVector(Vector r, double lo, double hi) : r_(std::move(r)), lo_(lo), hi_(hi) {
    if (!(lo < hi)) throw ValidationError("reward clip bounds must satisfy lo < hi");
    for (Eigen::Index s = 0; s < r_.size(); ++s)
      if (!std::isfinite(r_[s]) || r_[s] < lo_ || r_[s] > hi_)
        throw ValidationError("reward at state " + std::to_string(s) + " outside clip bounds");
  }

  const Vector& r() const { return r_; }
  double operator[](int s) const { return r_[s]; }
  int size() const { return static_cast<int>(r_.size()); }
  double lo() const { return lo_; }
  double hi() const { return hi_; }

  static RewardVector zeros(int num_states, double lo = -10.0, double hi = 10.0) {
    return RewardVector(Vector::Zero(num_states), lo, hi);
  }

 private:
  Vector r_;
  double lo_;
  double hi_;
};

struct RewardOptions {
  double epsilon = 1e-6;
  double clip_lo = -10.0;
  double clip_hi = 10.0;
};

/// r(s) = clip(log((d_E(s)+eps) / (d_O(s)+eps))).
inline RewardVector reward_from_counts(const Vector& d_E, const Vector& d_O,
                                       const RewardOptions& opts = {},
                                       const WarningSink& warnings = stderr_warnings()) {
  if (d_E.size() != d_O.size()) throw ValidationError("reward_from_counts: size mismatch");
  if (!(opts.epsilon > 0.0)) throw ValidationError("reward_from_counts: epsilon must be > 0");
  int uncovered = 0;
  Vector r(d_E.size());
  for (Eigen::Index s = 0; s < r.size(); ++s) {
    if (d_E[s] > 0.0 && d_O[s] <= 0.0) ++uncovered;
    const double raw = std::log((d_E[s] + opts.epsilon) / (d_O[s] + opts.epsilon));
    r[s] = std::clamp(raw, opts.clip_lo, opts.clip_hi);
  }
  if (uncovered > 0)
    warn(warnings, std::to_string(uncovered) +
                       " expert state(s) have no offline coverage; rewards there are clipped");
  return RewardVector(std::move(r), opts.clip_lo, opts.clip_hi);
}

struct ClassifierOptions {
  int steps = 5000;
  double lr = 0.01;
  double clip_lo = -10.0;
  double clip_hi = 10.0;
};

struct ClassifierFit {
  Vector logits;  // log(c / (1-c)) per state
  double loss = 0.0;
  int steps = 0;
};

namespace detail {

// log(1 + exp(x)) without overflow.
inline double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline Vector state_frequencies(const std::vector<int>& states, int num_states) {
  Vector p = Vector::Zero(num_states);
  for (int s : states) {
    if (s < 0 || s >= num_states)
      throw ValidationError("state " + std::to_string(s) + " is out of bounds");
    p[s] += 1.0;
  }
  return p / p.sum();
}

}  // namespace detail

/**
 * Logistic state classifier with one-hot features, expert labeled 1.
 *
 * Minimizes -E_{d^E}[log c(s)] - E_{d^O}[log(1 - c(s))] with full-batch Adam.
 * The per-state optimum is c = d^E/(d^E+d^O), so the logit converges to
 * log(d^E/d^O). Logits are kept inside the clip bounds during training.
 */
inline ClassifierFit fit_state_classifier(const std::vector<int>& expert_states,
                                          const std::vector<int>& offline_states,
                                          int num_states, const ClassifierOptions& opts = {}) {
  if (expert_states.empty() || offline_states.empty())
    throw ValidationError("classifier needs non-empty expert and offline state sets");
  if (opts.steps < 1 || !(opts.lr > 0.0)) throw ValidationError("classifier: bad steps or lr");
  const Vector p_E = detail::state_frequencies(expert_states, num_states);
  const Vector p_O = detail::state_frequencies(offline_states, num_states);

  constexpr double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
  Vector theta = Vector::Zero(num_states);
  Vector m = Vector::Zero(num_states), v = Vector::Zero(num_states);
  double b1 = 1.0, b2 = 1.0;
  ClassifierFit fit;
  for (int step = 1; step <= opts.steps; ++step) {
    double loss = 0.0;
    Vector grad(num_states);
    for (int s = 0; s < num_states; ++s) {
      loss += p_E[s] * detail::softplus(-theta[s]) + p_O[s] * detail::softplus(theta[s]);
      grad[s] = (p_E[s] + p_O[s]) * detail::sigmoid(theta[s]) - p_E[s];
    }
    if (!std::isfinite(loss)) throw SolverDivergedError("classifier training", step, opts.lr);
    fit.loss = loss;
    b1 *= beta1;
    b2 *= beta2;
    m = beta1 * m + (1.0 - beta1) * grad;
    v = beta2 * v + (1.0 - beta2) * grad.cwiseProduct(grad);
    for (int s = 0; s < num_states; ++s) {
      const double mhat = m[s] / (1.0 - b1), vhat = v[s] / (1.0 - b2);
      theta[s] = std::clamp(theta[s] - opts.lr * mhat / (std::sqrt(vhat) + adam_eps),
                            opts.clip_lo, opts.clip_hi);
    }
    fit.steps = step;
  }
  fit.logits = std::move(theta);
  return fit;
}

/// Classifier path for R(s) = log(d^E(s)/d^O(s)); the reward is the learned logit.
inline RewardVector train_classifier(const ExpertObservations& expert,
                                     const std::vector<int>& offline_states, int num_states,
                                     const ClassifierOptions& opts = {}) {
  expert.validate(num_states);
  ClassifierFit fit = fit_state_classifier(expert.states, offline_states, num_states, opts);
  return RewardVector(std::move(fit.logits), opts.clip_lo, opts.clip_hi);
}

}  // namespace smodice
