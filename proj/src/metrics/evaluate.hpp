// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "env/cmdp.hpp"
#include "nn/mlp.hpp"

namespace rtopf {

struct ScenarioRow {
  int index = 0;
  double objective_agent = 0.0;
  double objective_expert = 0.0;
  ViolationVector cost;
  bool feasible = false;
  double kappa_percent = 0.0;
};

struct TimingBlock {
  double t_expert_ms = 0.0;
  double t_powerflow_ms = 0.0;
  double t_actor_ms = 0.0;
  double speedup = 0.0;
  int repetitions = 0;
};

struct EvalReport {
  std::string method;
  double feas_percent = 0.0;
  double c_bar = 0.0;
  double kappa_max = 0.0, kappa_min = 0.0, kappa_aver = 0.0;
  std::vector<ScenarioRow> rows;
  TimingBlock timing;
};

// per-scenario feasibility: feasible iff the positive parts of
// (c_j - d_j) sum to zero; C-bar averages those sums.
std::pair<double, double> feasibility(const std::vector<ScenarioRow>& rows,
                                      const std::vector<double>& d);

struct KappaStats {
  double max = 0.0, min = 0.0, aver = 0.0;
};
KappaStats optimality_gap(const std::vector<double>& agent_objectives,
                          const std::vector<double>& expert_objectives);

// Deterministic mean-action evaluation over every step of a test trajectory:
// each step is one real-time decision from the expert-chained context.
EvalReport evaluate_policy(const std::string& method, const Network& net,
                           std::shared_ptr<const ExpertTrajectory> test_traj,
                           const EnvConfig& env_cfg, const nn::GaussianPolicy& policy,
                           const std::vector<double>& d);

// Median wall-clock comparison: expert OPF solve vs one Newton power flow
// plus one actor forward pass. Single-threaded; the inner loop grows until
// the clock resolution is safely dominated.
TimingBlock timing_benchmark(const Network& net, const ExpertTrajectory& traj,
                             const EnvConfig& env_cfg, const nn::GaussianPolicy& policy,
                             int repetitions);

// One report per method, ranked by Feas% then C-bar.
std::vector<EvalReport> compare_baselines(std::vector<EvalReport> reports);

std::string report_to_text(const EvalReport& rep, const std::string& config_hash_hex);

}  // namespace rtopf
