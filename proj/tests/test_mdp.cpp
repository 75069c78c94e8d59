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

#include <cmath>

#include <gtest/gtest.h>

#include "smodice/mdp.hpp"
#include "smodice/random.hpp"

namespace smodice {
namespace {

TabularMdp chain_mdp(double gamma) {
  Matrix t(2, 2);
  t << 0, 1,
       0, 1;
  return TabularMdp(2, 1, t, Vector::Unit(2, 0), gamma);
}

// Discounted visitation estimated by rolling the chain forward with restarts.
Vector monte_carlo_occupancy(const TabularMdp& mdp, const TabularPolicy& pi, long steps,
                             std::uint64_t seed) {
  Rng rng(seed);
  Vector d = Vector::Zero(mdp.num_pairs());
  int s = rng.categorical(mdp.initial_dist());
  for (long t = 0; t < steps; ++t) {
    const int a = rng.categorical(pi.probs().row(s));
    d[mdp.pair(s, a)] += 1.0;
    // Terminating with prob 1-gamma and restarting from mu0 samples the normalized occupancy.
    if (rng.uniform() < 1.0 - mdp.discount()) {
      s = rng.categorical(mdp.initial_dist());
    } else {
      s = rng.categorical(mdp.transition().row(mdp.pair(s, a)));
    }
  }
  return d / d.sum();
}

TEST(TabularMdp, RejectsMalformedInput) {
  Matrix t(2, 2);
  t << 0.5, 0.6,
       0, 1;
  EXPECT_THROW(TabularMdp(2, 1, t, Vector::Unit(2, 0), 0.9), ValidationError);
  EXPECT_THROW(chain_mdp(1.0), ValidationError);
  EXPECT_THROW(chain_mdp(0.0), ValidationError);
  Matrix ok(2, 2);
  ok << 0, 1,
        0, 1;
  EXPECT_THROW(TabularMdp(2, 1, ok, Vector::Constant(2, 0.3), 0.9), ValidationError);
  EXPECT_THROW(TabularMdp(3, 1, ok, Vector::Unit(2, 0), 0.9), ValidationError);
}

TEST(TabularMdp, AdjointIsTransposeOfExpectation) {
  Rng rng(1);
  const TabularMdp mdp = random_mdp(rng, 4, 3, 0.9);
  for (int k = 0; k < 5; ++k) {
    const Vector v = Vector::Random(4), d = Vector::Random(12);
    EXPECT_NEAR(d.dot(mdp.expected_next(v)), mdp.adjoint(d).dot(v), 1e-12);
    EXPECT_NEAR(d.dot(mdp.broadcast(v)), mdp.sum_actions(d).dot(v), 1e-12);
  }
}

TEST(ComputeOccupancy, SingleSelfLoop) {
  const TabularMdp mdp(1, 1, Matrix::Ones(1, 1), Vector::Ones(1), 0.7);
  const auto occ = compute_occupancy(mdp, TabularPolicy::uniform(1, 1));
  EXPECT_NEAR(occ.d()[0], 1.0, 1e-12);
}

TEST(ComputeOccupancy, TwoStateChainGeometricSeries) {
  const auto occ = compute_occupancy(chain_mdp(0.5), TabularPolicy::uniform(2, 1));
  EXPECT_NEAR(occ(0, 0), 0.5, 1e-12);
  EXPECT_NEAR(occ(1, 0), 0.5, 1e-12);
  EXPECT_LE(occ.flow_residual(), 1e-12);
}

TEST(ComputeOccupancy, MatchesMonteCarloRollouts) {
  Rng rng(42);
  const TabularMdp mdp = random_mdp(rng, 5, 3, 0.9);
  const TabularPolicy pi = random_policy(rng, 5, 3);
  const auto occ = compute_occupancy(mdp, pi);
  const Vector mc = monte_carlo_occupancy(mdp, pi, 1'000'000, 7);
  EXPECT_LE((occ.d() - mc).cwiseAbs().maxCoeff(), 1e-2);
}

TEST(ComputeOccupancy, SatisfiesFlowAndNormalization) {
  Rng rng(3);
  for (int k = 0; k < 20; ++k) {
    const TabularMdp mdp = random_mdp(rng, 2 + k % 6, 1 + k % 4, 0.5 + 0.024 * k);
    const auto occ = compute_occupancy(mdp, random_policy(rng, mdp.num_states(), mdp.num_actions()));
    EXPECT_NEAR(occ.d().sum(), 1.0, 1e-12);
    EXPECT_GE(occ.d().minCoeff(), 0.0);
    EXPECT_LE(flow_residual(mdp, occ.d()), 1e-10);
  }
}

TEST(ComputeOccupancy, RejectsShapeMismatch) {
  EXPECT_THROW(compute_occupancy(chain_mdp(0.5), TabularPolicy::uniform(2, 2)), ValidationError);
}

TEST(MarginalizeStates, SmallCases) {
  const OccupancyMeasure uniform(2, 2, Vector::Constant(4, 0.25));
  EXPECT_TRUE(marginalize_states(uniform).isApprox(Vector::Constant(2, 0.5)));
  Vector one_hot = Vector::Zero(8);
  one_hot[3 * 2 + 1] = 1.0;
  const Vector m = marginalize_states(OccupancyMeasure(4, 2, one_hot));
  EXPECT_EQ(m, Vector::Unit(4, 3));
}

TEST(MarginalizeStates, MatchesDirectSummation) {
  Rng rng(9);
  const Vector d = random_distribution(rng, 15);
  const Vector m = marginalize_states(OccupancyMeasure(5, 3, d));
  for (int s = 0; s < 5; ++s) EXPECT_DOUBLE_EQ(m[s], d[3 * s] + d[3 * s + 1] + d[3 * s + 2]);
}

TEST(PolicyFromOccupancy, OneHotAndUniform) {
  Vector d = Vector::Zero(6);
  d[2] = 1.0;
  const auto pi = policy_from_occupancy(OccupancyMeasure(2, 3, d));
  EXPECT_DOUBLE_EQ(pi(0, 2), 1.0);
  for (int a = 0; a < 3; ++a) EXPECT_DOUBLE_EQ(pi(1, a), 1.0 / 3);
  const auto first = policy_from_occupancy(OccupancyMeasure(2, 3, d), UnvisitedFallback::FirstAction);
  EXPECT_DOUBLE_EQ(first(1, 0), 1.0);
  const auto u = policy_from_occupancy(OccupancyMeasure(2, 3, Vector::Constant(6, 1.0 / 6)));
  EXPECT_TRUE(u.probs().isApprox(Matrix::Constant(2, 3, 1.0 / 3)));
}

TEST(PolicyFromOccupancy, RoundTrip) {
  Rng rng(5);
  for (int k = 0; k < 10; ++k) {
    const TabularMdp mdp = random_mdp(rng, 6, 3, 0.95);
    const auto occ = compute_occupancy(mdp, random_policy(rng, 6, 3));
    const auto again = compute_occupancy(mdp, policy_from_occupancy(occ));
    EXPECT_LE((occ.d() - again.d()).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(TabularPolicy, ValidationAndGreedy) {
  Matrix bad(1, 2);
  bad << 0.7, 0.7;
  EXPECT_THROW(TabularPolicy{bad}, ValidationError);
  EXPECT_THROW(TabularPolicy::deterministic({0, 3}, 2), ValidationError);
  Matrix p(1, 3);
  p << 0.4, 0.2, 0.4;
  EXPECT_EQ(TabularPolicy(p).greedy_action(0), 0);
}

TEST(OccupancyMeasure, RejectsUnnormalized) {
  EXPECT_THROW(OccupancyMeasure(1, 2, Vector::Constant(2, 0.4)), ValidationError);
  Vector neg(2);
  neg << 1.5, -0.5;
  EXPECT_THROW(OccupancyMeasure(1, 2, neg), ValidationError);
}

}  // namespace
}  // namespace smodice
