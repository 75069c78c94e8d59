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

// An expert that moves diagonally is imitated by an agent restricted to
// horizontal and vertical moves, using only a dataset logged by a random agent.
// The learned policy is compared with the best deterministic cardinal policy.

#include <cstdio>
#include <iostream>

#include "smodice.hpp"

int main() {
  using namespace smodice;
  const GridSpec grid = preset("figure2a");
  const GridSpec expert_grid = with_move_set(grid, MoveSet::Diagonal8);
  const TabularMdp mdp = build_mdp(grid, 0.99);
  const TabularMdp expert_mdp = build_mdp(expert_grid, 0.99);
  const int horizon = horizon_for_discount(0.99);

  const TabularPolicy expert_policy = diagonal_expert_policy(expert_grid);
  const auto expert = ExpertObservations::from_dataset(collect(expert_mdp, expert_policy, 1, horizon, 0));
  const auto data = collect(mdp, random_behavior_policy(grid), 10000, horizon, 0);

  const OfflineProblem problem = build_offline_problem(data, expert, mdp.num_states(), mdp.num_actions());
  const SmodiceSolution sol = solve_closed_form_chi2(problem.mdp_hat, problem.d_O, problem.reward);

  const Vector d_E = marginalize_states(compute_occupancy(expert_mdp, expert_policy));
  const double kl = evaluate_policy(mdp, sol.policy, d_E).at("state_kl_to_expert");
  const BruteForceResult oracle = brute_force_best_policy(mdp, d_E);

  std::cout << "expert (diagonal moves):\n" << render_policy_grid(expert_grid, expert_policy) << '\n';
  std::cout << "learned (cardinal moves):\n"
            << render_policy_grid(grid, sol.policy, compute_occupancy(mdp, sol.policy)) << '\n';
  std::printf("state KL to expert: %.6f\nbest deterministic policy: %.6f (%zu tied occupancies)\n",
              kl, oracle.divergence, oracle.num_optimal_occupancies);
  return 0;
}
