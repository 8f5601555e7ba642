// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "nn/mlp.hpp"
#include "rl/buffer.hpp"
#include "util/fileio.hpp"
#include "util/rng.hpp"

namespace rtopf::rl {

struct TrainConfig {
  double gamma = 0.95;
  double lambda_gae = 0.95;
  double clip_eps = 0.2;
  double kl_target = 0.01;
  int batch = 32;
  int buffer = 400;
  double actor_lr = 5e-5;
  double critic_lr = 1e-4;
  double lambda_lr = 1e-3;
  int episodes = 2000;
  int n_pi = 10;
  int n_v = 10;
  std::vector<int> hidden{64, 64};
  double init_log_std = -2.0;
  bool advantage_norm = true;
  int bc_epochs = 4000;  // gradient steps
  int bc_neighbors = 4;  // perturbed-context pairs per expert step
  int bc_batch = 128;
  double bc_lr = 1e-3;
  std::uint64_t seed = 1;
  double divergence_guard = 1e6;
  double max_wall_s = 0.0;  // 0 = unlimited
  int workers = 1;

  void validate() const;
};

struct DualMultipliers {
  std::vector<double> lambda;  // one per cost component, init 0
  std::vector<double> d;       // cost limits, default 0
  double lr = 1e-3;
};

// projected dual ascent: grad_i = mean_t [rho_t V^C_i(s_t) - d_i]^+
void update_duals(const std::vector<std::vector<double>>& v_cost,
                  const std::vector<double>& rho, DualMultipliers& duals);

// single clipped importance-sampling term
double clip_term(double rho, double advantage, double eps);

// Minimal environment surface the trainer drives. CmdpEnv adapts to it; test
// doubles implement it directly.
class EnvInterface {
 public:
  virtual ~EnvInterface() = default;
  virtual int state_dim() const = 0;
  virtual int action_dim() const = 0;
  virtual int n_cost() const = 0;
  virtual int episode_len() const = 0;
  virtual std::vector<double> reset_sampled() = 0;
  struct Step {
    std::vector<double> next_state;
    double reward = 0.0;
    std::vector<double> cost;
    bool terminal = false;
    bool truncated = false;
  };
  virtual Step step(const std::vector<double>& raw_action) = 0;
};

using EnvFactory = std::function<std::unique_ptr<EnvInterface>(std::uint64_t seed)>;

struct LogRow {
  int episode = 0;
  double mean_reward = 0.0;
  std::vector<double> mean_cost;
  std::vector<double> lambda;
  double kl = 0.0;
  double actor_loss = 0.0;
  double critic_r_loss = 0.0;
  double critic_c_loss = 0.0;
  double mean_sigma = 0.0;
  double wall_ms = 0.0;
};

struct TrainerState {
  nn::GaussianPolicy policy;
  nn::Mlp critic_r, critic_c;
  nn::AdamState opt_actor, opt_critic_r, opt_critic_c;
  DualMultipliers duals;
  Rng rng;
  int episodes_done = 0;
  double bc_loss = -1.0;
};

class PdPpoTrainer {
 public:
  PdPpoTrainer(EnvFactory factory, TrainConfig cfg);

  // fresh networks sized for the environment
  void init(int state_dim, int action_dim, int n_cost);
  void set_state(TrainerState st) { st_ = std::move(st); }
  TrainerState& state() { return st_; }
  const TrainConfig& config() const { return cfg_; }

  // behaviour cloning on (state, raw expert action) pairs; returns final loss
  double pretrain_bc(const std::vector<std::vector<double>>& states,
                     const std::vector<std::vector<double>>& actions);

  // main training loop; appends one LogRow per update round
  void train(int episodes);

  const std::vector<LogRow>& log() const { return log_; }

  // exposed for the math-kernel tests
  double kl_to_behavior(const RolloutBuffer& buf) const;
  double actor_minibatch_step(const RolloutBuffer& buf, const std::vector<int>& batch_idx);
  std::pair<double, double> critic_minibatch_step(const RolloutBuffer& buf,
                                                  const std::vector<int>& batch_idx);
  void finalize_round(RolloutBuffer& buf) const;
  void dual_step(const RolloutBuffer& buf);

  struct UpdateSummary {
    int policy_steps = 0;
    double kl = 0.0;
    double actor_loss = 0.0;
  };
  // policy phase of one round: up to n_pi minibatch steps, each followed by a
  // dual ascent step; no step is taken once the measured divergence from the
  // behavior policy exceeds the target
  UpdateSummary run_policy_updates(const RolloutBuffer& buf);

 private:
  void collect_round(RolloutBuffer& buf);
  std::vector<int> next_minibatch(std::vector<int>& order, std::size_t& cursor, int total);

  EnvFactory factory_;
  TrainConfig cfg_;
  TrainerState st_;
  std::vector<LogRow> log_;
  std::vector<std::unique_ptr<EnvInterface>> envs_;  // one per worker
  std::vector<Rng> action_rngs_;                     // one per worker
};

// checkpoint round-trips the full trainer state plus pairing metadata
void save_checkpoint(const std::string& path, const TrainerState& st, const json& meta);
TrainerState load_checkpoint(const std::string& path, json* meta = nullptr);

void write_training_log(const std::string& path, const std::vector<LogRow>& rows,
                        const std::string& config_hash_hex);

}  // namespace rtopf::rl
