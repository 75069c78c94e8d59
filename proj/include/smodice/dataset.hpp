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
#include <string>
#include <vector>

#include "smodice/error.hpp"
#include "smodice/mdp.hpp"
#include "smodice/random.hpp"

namespace smodice {

/// One logged episode; the three sequences have equal length.
struct Episode {
  std::vector<int> states;
  std::vector<int> actions;
  std::vector<int> next_states;

  std::size_t size() const { return states.size(); }
};

struct DatasetMetadata {
  std::string env_id;
  std::string behavior_id;
  std::uint64_t seed = 0;
  int num_states = 0;
  int num_actions = 0;
  double gamma = 0.99;
  int horizon = 0;
};

struct TrajectoryDataset {
  std::vector<Episode> episodes;
  DatasetMetadata metadata;

  std::size_t num_transitions() const {
    std::size_t n = 0;
    for (const auto& ep : episodes) n += ep.size();
    return n;
  }

  /// Throws ValidationError naming the first offending episode and step.
  void validate(int num_states, int num_actions) const {
    if (episodes.empty()) throw ValidationError("dataset has no episodes");
    for (std::size_t e = 0; e < episodes.size(); ++e) {
      const auto& ep = episodes[e];
      if (ep.size() == 0) throw ValidationError("episode " + std::to_string(e) + " is empty");
      if (ep.actions.size() != ep.size() || ep.next_states.size() != ep.size())
        throw ValidationError("episode " + std::to_string(e) + " has ragged sequences");
      for (std::size_t t = 0; t < ep.size(); ++t) {
        if (ep.states[t] < 0 || ep.states[t] >= num_states || ep.next_states[t] < 0 ||
            ep.next_states[t] >= num_states || ep.actions[t] < 0 ||
            ep.actions[t] >= num_actions)
          throw ValidationError("episode " + std::to_string(e) + " step " +
                                std::to_string(t) + " is out of bounds");
      }
    }
  }
};

/// State-only supervision: expert trajectories or a set of success examples.
struct ExpertObservations {
  enum class Kind { FullTrajectories, SuccessExamples };

  Kind kind = Kind::FullTrajectories;
  std::vector<int> states;
  /// Optional per-trajectory state sequences, used for discount weighting.
  std::vector<std::vector<int>> trajectories;

  void validate(int num_states) const {
    if (states.empty()) throw ValidationError("expert observations are empty");
    for (int s : states)
      if (s < 0 || s >= num_states)
        throw ValidationError("expert state " + std::to_string(s) + " is out of bounds");
    for (const auto& traj : trajectories)
      for (int s : traj)
        if (s < 0 || s >= num_states)
          throw ValidationError("expert state " + std::to_string(s) + " is out of bounds");
  }

  static ExpertObservations success_examples(std::vector<int> states) {
    return {Kind::SuccessExamples, std::move(states), {}};
  }

  /// Keeps only the visited states of each episode; actions are dropped.
  static ExpertObservations from_dataset(const TrajectoryDataset& data) {
    ExpertObservations obs;
    obs.kind = Kind::FullTrajectories;
    for (const auto& ep : data.episodes) {
      obs.trajectories.push_back(ep.states);
      obs.states.insert(obs.states.end(), ep.states.begin(), ep.states.end());
    }
    return obs;
  }
};

/// Smallest H with gamma^H < tail.
inline int horizon_for_discount(double gamma, double tail = 1e-4) {
  return static_cast<int>(std::ceil(std::log(tail) / std::log(gamma)));
}

/// Rolls out `behavior` from mu0 for a fixed horizon; deterministic in seed.
inline TrajectoryDataset collect(const TabularMdp& mdp, const TabularPolicy& behavior,
                                 int num_episodes, int horizon, std::uint64_t seed) {
  if (num_episodes < 1) throw ValidationError("collect: num_episodes must be >= 1");
  if (horizon < 1) throw ValidationError("collect: horizon must be >= 1");
  if (behavior.num_states() != mdp.num_states() || behavior.num_actions() != mdp.num_actions())
    throw ValidationError("collect: policy shape does not match the MDP");
  Rng rng(seed);
  TrajectoryDataset data;
  data.metadata.seed = seed;
  data.metadata.num_states = mdp.num_states();
  data.metadata.num_actions = mdp.num_actions();
  data.metadata.gamma = mdp.discount();
  data.metadata.horizon = horizon;
  data.episodes.resize(static_cast<std::size_t>(num_episodes));
  for (auto& ep : data.episodes) {
    ep.states.reserve(horizon);
    ep.actions.reserve(horizon);
    ep.next_states.reserve(horizon);
    int s = rng.categorical(mdp.initial_dist());
    for (int t = 0; t < horizon; ++t) {
      const int a = rng.categorical(behavior.probs().row(s));
      const int next = rng.categorical(mdp.transition().row(mdp.pair(s, a)));
      ep.states.push_back(s);
      ep.actions.push_back(a);
      ep.next_states.push_back(next);
      s = next;
    }
  }
  return data;
}

/// n(s,a,s') as an (|S||A|) x |S| matrix.
inline Matrix transition_counts(const TrajectoryDataset& data, int num_states, int num_actions) {
  Matrix counts = Matrix::Zero(Eigen::Index(num_states) * num_actions, num_states);
  for (const auto& ep : data.episodes)
    for (std::size_t t = 0; t < ep.size(); ++t)
      counts(Eigen::Index(ep.states[t]) * num_actions + ep.actions[t], ep.next_states[t]) += 1.0;
  return counts;
}

/**
 * Maximum-likelihood MDP: T(s'|s,a) = n(s,a,s') / n(s,a). Pairs never tried
 * become deterministic self-loops; mu0 is the frequency of episode-initial states.
 */
inline TabularMdp estimate_mdp(const TrajectoryDataset& data, int num_states, int num_actions,
                               double gamma) {
  data.validate(num_states, num_actions);
  Matrix transition = transition_counts(data, num_states, num_actions);
  for (int s = 0; s < num_states; ++s) {
    for (int a = 0; a < num_actions; ++a) {
      auto row = transition.row(Eigen::Index(s) * num_actions + a);
      const double n = row.sum();
      if (n > 0.0) {
        row /= n;
      } else {
        row(s) = 1.0;
      }
    }
  }
  Vector mu0 = Vector::Zero(num_states);
  for (const auto& ep : data.episodes) mu0[ep.states.front()] += 1.0;
  mu0 /= mu0.sum();
  return TabularMdp(num_states, num_actions, std::move(transition), std::move(mu0), gamma);
}

/// Empirical pi_b(a|s) = n(s,a) / n(s); uniform at unvisited states.
inline TabularPolicy estimate_behavior_policy(const TrajectoryDataset& data, int num_states,
                                              int num_actions) {
  data.validate(num_states, num_actions);
  Matrix counts = Matrix::Zero(num_states, num_actions);
  for (const auto& ep : data.episodes)
    for (std::size_t t = 0; t < ep.size(); ++t) counts(ep.states[t], ep.actions[t]) += 1.0;
  return TabularPolicy::from_weights(counts, UnvisitedFallback::Uniform);
}

enum class VisitWeighting { Discounted, Undiscounted };

/**
 * d(s,a) proportional to sum_episodes sum_t gamma^t [s_t=s, a_t=a].
 *
 * The flow residual is measured against the MLE MDP of the same data and is
 * informational only; sampled occupancies do not satisfy flow exactly.
 */
inline OccupancyMeasure estimate_occupancy(const TrajectoryDataset& data, double gamma,
                                           int num_states, int num_actions,
                                           VisitWeighting weighting = VisitWeighting::Discounted) {
  data.validate(num_states, num_actions);
  Vector d = Vector::Zero(Eigen::Index(num_states) * num_actions);
  for (const auto& ep : data.episodes) {
    double w = 1.0;
    for (std::size_t t = 0; t < ep.size(); ++t) {
      d[Eigen::Index(ep.states[t]) * num_actions + ep.actions[t]] += w;
      if (weighting == VisitWeighting::Discounted) w *= gamma;
    }
  }
  d /= d.sum();
  const double residual = flow_residual(estimate_mdp(data, num_states, num_actions, gamma), d);
  return OccupancyMeasure(num_states, num_actions, std::move(d), residual);
}

/**
 * Empirical expert state distribution.
 *
 * Success examples: frequency over the example multiset. Full trajectories:
 * discount-weighted visitation when trajectories are present and weighting is
 * Discounted, plain frequency otherwise.
 */
inline Vector expert_state_distribution(const ExpertObservations& obs, int num_states,
                                        double gamma = 0.99,
                                        VisitWeighting weighting = VisitWeighting::Discounted) {
  obs.validate(num_states);
  Vector d = Vector::Zero(num_states);
  const bool discounted = obs.kind == ExpertObservations::Kind::FullTrajectories &&
                          !obs.trajectories.empty() &&
                          weighting == VisitWeighting::Discounted;
  if (discounted) {
    for (const auto& traj : obs.trajectories) {
      double w = 1.0;
      for (int s : traj) {
        d[s] += w;
        w *= gamma;
      }
    }
  } else {
    for (int s : obs.states) d[s] += 1.0;
  }
  return d / d.sum();
}

/// All logged states s_t as a multiset (one entry per transition).
inline std::vector<int> offline_states(const TrajectoryDataset& data) {
  std::vector<int> out;
  out.reserve(data.num_transitions());
  for (const auto& ep : data.episodes) out.insert(out.end(), ep.states.begin(), ep.states.end());
  return out;
}

}  // namespace smodice
