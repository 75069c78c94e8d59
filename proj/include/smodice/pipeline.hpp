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

#include <string_view>

#include "smodice/dataset.hpp"
#include "smodice/discriminator.hpp"
#include "smodice/error.hpp"
#include "smodice/fdiv.hpp"
#include "smodice/mdp.hpp"
#include "smodice/smodice.hpp"

namespace smodice {

/// How d^O is obtained from the logged data.
enum class OccupancySource {
  Model,   // exact occupancy of the estimated behavior policy in the estimated MDP
  Counts,  // discounted visitation frequencies of the logged pairs
};

enum class RewardSource { Counts, Classifier };

enum class SolverMethod { ClosedForm, Iterative };

inline OccupancySource parse_occupancy_source(std::string_view name) {
  if (name == "model") return OccupancySource::Model;
  if (name == "counts") return OccupancySource::Counts;
  throw ValidationError("unknown occupancy source '" + std::string(name) + "'");
}

inline RewardSource parse_reward_source(std::string_view name) {
  if (name == "counts") return RewardSource::Counts;
  if (name == "classifier") return RewardSource::Classifier;
  throw ValidationError("unknown reward source '" + std::string(name) + "'");
}

inline SolverMethod parse_solver_method(std::string_view name) {
  if (name == "closed-form") return SolverMethod::ClosedForm;
  if (name == "iterative") return SolverMethod::Iterative;
  throw ValidationError("unknown solver method '" + std::string(name) + "'");
}

struct PipelineOptions {
  double gamma = 0.99;
  OccupancySource occupancy = OccupancySource::Model;
  RewardSource reward = RewardSource::Counts;
  RewardOptions reward_options;
  ClassifierOptions classifier_options;
};

/// Everything the dual solvers need, estimated from the offline data and expert observations.
struct OfflineProblem {
  TabularMdp mdp_hat;
  TabularPolicy behavior_hat;
  OccupancyMeasure d_O;
  Vector d_E;
  RewardVector reward;
};

inline OfflineProblem build_offline_problem(const TrajectoryDataset& data,
                                            const ExpertObservations& expert, int num_states,
                                            int num_actions, const PipelineOptions& opts = {},
                                            const WarningSink& warnings = stderr_warnings()) {
  data.validate(num_states, num_actions);
  expert.validate(num_states);
  TabularMdp mdp_hat = estimate_mdp(data, num_states, num_actions, opts.gamma);
  TabularPolicy behavior_hat = estimate_behavior_policy(data, num_states, num_actions);
  OccupancyMeasure d_O = opts.occupancy == OccupancySource::Model
                             ? compute_occupancy(mdp_hat, behavior_hat)
                             : estimate_occupancy(data, opts.gamma, num_states, num_actions);
  Vector d_E = expert.kind == ExpertObservations::Kind::SuccessExamples
                   ? reduce_examples_to_matching(expert, num_states)
                   : expert_state_distribution(expert, num_states, opts.gamma);
  RewardVector reward =
      opts.reward == RewardSource::Counts
          ? reward_from_counts(d_E, marginalize_states(d_O), opts.reward_options, warnings)
          : train_classifier(expert, offline_states(data), num_states, opts.classifier_options);
  return OfflineProblem{std::move(mdp_hat), std::move(behavior_hat), std::move(d_O),
                        std::move(d_E), std::move(reward)};
}

/// Closed form is defined for chi-squared only; asking for it with KL is a ValidationError.
inline SmodiceSolution solve_offline_problem(const OfflineProblem& problem, FDivKind kind,
                                             SolverMethod method,
                                             const ClosedFormOptions& closed = {},
                                             const IterativeOptions& iterative = {}) {
  if (method == SolverMethod::ClosedForm) {
    if (kind != FDivKind::ChiSquared)
      throw ValidationError("the closed-form solver supports the chi2 divergence only");
    return solve_closed_form_chi2(problem.mdp_hat, problem.d_O, problem.reward, closed);
  }
  return solve_iterative(problem.mdp_hat, problem.d_O, problem.reward, make_divergence(kind), iterative);
}

}  // namespace smodice
