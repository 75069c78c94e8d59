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

// Only a single success state is given as supervision. The learned policy
// should spend almost all of its discounted time in that state.

#include <cstdio>
#include <iostream>

#include "smodice.hpp"

int main() {
  using namespace smodice;
  const GridSpec grid = preset("figure2b");
  const TabularMdp mdp = build_mdp(grid, 0.99);
  const int goal = grid.state_of(*grid.goal);

  const auto data = collect(mdp, random_behavior_policy(grid), 10000, horizon_for_discount(0.99), 0);
  const auto examples = ExpertObservations::success_examples({goal});
  const OfflineProblem problem = build_offline_problem(data, examples, mdp.num_states(), mdp.num_actions());

  for (const FDivKind kind : {FDivKind::ChiSquared, FDivKind::KL}) {
    const SolverMethod method = kind == FDivKind::ChiSquared ? SolverMethod::ClosedForm : SolverMethod::Iterative;
    const SmodiceSolution sol = solve_offline_problem(problem, kind, method);
    const OccupancyMeasure occ = compute_occupancy(mdp, sol.policy);
    Vector d = marginalize_states(occ);
    const double success = d[goal];
    d[goal] = 0.0;
    std::cout << to_string(kind) << ":\n" << render_policy_grid(grid, sol.policy, occ);
    std::printf("success-state occupancy %.4f, next largest %.4f\n\n", success, d.maxCoeff());
  }
  return 0;
}
