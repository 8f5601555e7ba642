// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>
#include <string>
#include <vector>

#include "env/dataset.hpp"
#include "grid/network.hpp"
#include "opf/trajectory.hpp"
#include "pf/newton.hpp"
#include "util/rng.hpp"

namespace rtopf {

enum class RewardMode { pdppo, penalty, cliff };

RewardMode reward_mode_from_string(const std::string& s);
std::string reward_mode_name(RewardMode m);

struct EnvConfig {
  int episode_len = 8;
  double dv_max = 0.05;        // per-step voltage set-point change (pu)
  double reward_scale = 0.0;   // 0 = use the expert objective at the base case
  double reward_floor = -10.0;
  double cost_ceiling = 1.0;   // per component, on power-flow divergence
  RewardMode mode = RewardMode::pdppo;
  std::vector<double> penalty_coeffs{10.0, 10.0, 10.0, 10.0};
  double cliff_k = 1.0;  // applied to the scaled operating cost
  double cliff_b = 2.0;
  // normalization bands, shared with the dataset generator
  double load_scale_low = 0.7;
  double load_scale_high = 1.3;
  double pf_scale_low = 0.9;
  double pf_scale_high = 1.1;
};

struct CmdpState {
  std::vector<double> raw;
  std::vector<double> normalized;
};

struct ActionVector {
  std::vector<double> dp_mw;  // per generator
  std::vector<double> dv;     // per generator (pu)
};

struct StepResult {
  CmdpState next_state;
  double reward = 0.0;
  ViolationVector cost;
  bool terminal = false;
  bool truncated = false;  // ended by the step cap, not by divergence
  bool pf_converged = true;
  double operating_cost = 0.0;  // $/h, base reward signal before scaling
  PowerFlowSolution info;
};

// Per-component [min, max] used by the max-min state normalization.
struct NormBounds {
  std::vector<double> lo, hi;
};

std::pair<int, int> dims(const Network& net);

double reward_penalty(double operating_cost_scaled, const ViolationVector& cost,
                      const std::vector<double>& penalty_coeffs);
double reward_cliff(double operating_cost, const ViolationVector& cost, double k, double b);

struct ContingencySet {
  std::vector<std::vector<int>> outages;  // branch positions per contingency
  int count() const { return static_cast<int>(outages.size()); }
};

// expanded cost vector: 4 components for the base case followed by 4
// per contingency, each block evaluated at the same set-points.
std::vector<double> expanded_cost(const Network& net, const ContingencySet& contingencies,
                                  const DispatchSetpoints& sp, const LoadState& loads,
                                  double cost_ceiling);

int find_branch(const Network& net, int from_id, int to_id);

// Episode environment over an expert trajectory: every reset pins the demand
// of one trajectory step for the whole episode (the previous set-points come
// from the expert chain), and steps apply clipped set-point adjustments
// through the power flow. Instances are independent; a single instance must
// not be stepped concurrently.
class CmdpEnv {
 public:
  CmdpEnv(const Network& net, std::shared_ptr<const ExpertTrajectory> traj, EnvConfig cfg,
          std::uint64_t seed = 0);

  int state_dim() const { return state_dim_; }
  int action_dim() const { return action_dim_; }
  int episode_len() const { return cfg_.episode_len; }
  double reward_scale() const { return reward_scale_; }
  const NormBounds& norm_bounds() const { return bounds_; }
  const Network& net() const { return net_; }
  const ExpertTrajectory& trajectory() const { return *traj_; }
  const EnvConfig& config() const { return cfg_; }

  CmdpState reset(int step_index);
  CmdpState reset_sampled();
  // episode pinned to a step with the expert's own optimum as the previous
  // dispatch: the state an ideal first action would have produced
  CmdpState reset_at_optimum(int step_index);
  // episode pinned to a step with an explicit previous dispatch
  CmdpState reset_with_prev(int step_index, const std::vector<double>& pg_mw,
                            const std::vector<double>& vg);
  StepResult step(const std::vector<double>& raw_action);

  ActionVector clip_action(const std::vector<double>& raw) const;
  // raw coordinates that reproduce the given set-points from the current
  // previous dispatch; inverse of clip_action up to its saturation
  std::vector<double> raw_action_for(const std::vector<double>& pg_mw,
                                     const std::vector<double>& vg) const;
  std::vector<double> expert_raw_action() const;  // for the episode's own step

  std::vector<double> normalize(const std::vector<double>& raw) const;
  std::vector<double> denormalize(const std::vector<double>& normalized) const;

  const std::vector<double>& prev_pg() const { return prev_pg_; }
  const std::vector<double>& prev_vg() const { return prev_vg_; }
  int current_index() const { return episode_index_; }

 private:
  CmdpState make_state() const;
  void compute_bounds();

  const Network& net_;
  std::shared_ptr<const ExpertTrajectory> traj_;
  EnvConfig cfg_;
  NewtonWorkspace pf_;
  Rng rng_;
  NormBounds bounds_;
  int state_dim_ = 0, action_dim_ = 0;
  double reward_scale_ = 1.0;

  std::vector<int> feasible_;  // trajectory steps usable as episodes

  // episode state
  bool active_ = false;
  int episode_index_ = -1;
  int step_count_ = 0;
  LoadState loads_;
  double next_total_mw_ = 0.0;
  std::vector<double> prev_pg_, prev_vg_;
};

}  // namespace rtopf
