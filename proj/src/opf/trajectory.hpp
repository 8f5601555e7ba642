// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "grid/network.hpp"
#include "opf/ipm.hpp"
#include "pf/newton.hpp"

namespace rtopf {

struct ExpertStep {
  LoadState loads;
  std::vector<double> prev_pg_mw;  // dispatch the step starts from
  std::vector<double> prev_vg;
  std::vector<double> pg_mw;  // expert solution
  std::vector<double> vg;
  double objective = 0.0;
  bool feasible = true;
};

struct ExpertTrajectory {
  std::string network_id;
  int horizon = 0;
  std::vector<ExpertStep> steps;
};

class LoadScenario;  // defined in env/dataset.hpp

// Sequential expert solve over a scenario: step t starts from the optimal
// dispatch of step t-1's conditions; step 0 starts from the optimum of its
// own conditions. Steps whose conditions the solver cannot serve are flagged
// infeasible and the dispatch chain continues from the last solvable step.
ExpertTrajectory generate_expert_trajectory(const Network& net,
                                            const std::vector<LoadState>& scenario,
                                            const OpfOptions& opt = {});

int count_infeasible(const ExpertTrajectory& traj);
std::vector<int> feasible_steps(const ExpertTrajectory& traj);

void export_trajectory(const ExpertTrajectory& traj, const std::string& path,
                       const std::string& config_hash_hex = "");
ExpertTrajectory import_trajectory(const std::string& path, const Network& net);

// Validates ramp coupling and limit feasibility of every feasible-flagged
// step; throws naming the offending step.
void validate_trajectory(const ExpertTrajectory& traj, const Network& net);

}  // namespace rtopf
