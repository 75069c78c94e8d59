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

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

#include "smodice/mdp.hpp"

namespace smodice {

/**
 * Seeded PRNG with platform-independent derived draws.
 *
 * std::mt19937_64 output is fully specified by the standard, but the standard
 * distributions are not, so uniform/categorical/normal are derived here.
 */
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Index i with probability weights[i] / sum(weights).
  template <typename Weights>
  int categorical(const Weights& weights) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < weights.size(); ++i) total += weights[i];
    double u = uniform() * total;
    int last_positive = 0;
    for (Eigen::Index i = 0; i < weights.size(); ++i) {
      if (weights[i] <= 0.0) continue;
      last_positive = static_cast<int>(i);
      if (u < weights[i]) return static_cast<int>(i);
      u -= weights[i];
    }
    return last_positive;
  }

  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  /// Exponential(1); sums of these normalized give flat Dirichlet samples.
  double exponential() {
    double u = uniform();
    while (u <= 0.0) u = uniform();
    return -std::log(u);
  }

 private:
  std::mt19937_64 engine_;
};

/// Point drawn uniformly from the probability simplex, floored at min_mass.
inline Vector random_distribution(Rng& rng, int n, double min_mass = 0.0) {
  Vector p(n);
  for (int i = 0; i < n; ++i) p[i] = rng.exponential() + min_mass;
  return p / p.sum();
}

inline TabularPolicy random_policy(Rng& rng, int num_states, int num_actions,
                                   double min_mass = 0.0) {
  Matrix probs(num_states, num_actions);
  for (int s = 0; s < num_states; ++s)
    probs.row(s) = random_distribution(rng, num_actions, min_mass).transpose();
  return TabularPolicy(std::move(probs));
}

/**
 * Dense random MDP; each transition row and the initial distribution are flat
 * Dirichlet draws. Rows sum to one up to rounding, renormalized exactly.
 */
inline TabularMdp random_mdp(Rng& rng, int num_states, int num_actions, double discount,
                             double min_mass = 0.0) {
  Matrix transition(Eigen::Index(num_states) * num_actions, num_states);
  for (Eigen::Index row = 0; row < transition.rows(); ++row)
    transition.row(row) = random_distribution(rng, num_states, min_mass).transpose();
  Vector mu0 = random_distribution(rng, num_states, min_mass);
  return TabularMdp(num_states, num_actions, std::move(transition), std::move(mu0), discount);
}

}  // namespace smodice
