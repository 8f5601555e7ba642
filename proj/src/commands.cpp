// SPDX-License-Identifier: Apache-2.0
#include "commands.hpp"

#include <cmath>
#include <cstdio>
#include <memory>

#include "metrics/evaluate.hpp"
#include "nn/checkpoint.hpp"
#include "opf/ipm.hpp"
#include "opf/trajectory.hpp"
#include "util/error.hpp"

namespace rtopf {

namespace {

DatasetConfig test_dataset_config(const RunConfig& cfg) {
  DatasetConfig d = cfg.dataset;
  d.horizon = cfg.test_horizon;
  d.seed = Rng(cfg.seed).split("dataset/test").state()[0];
  return d;
}

LoadScenario obtain_scenario(const RunConfig& cfg, const Network& net, bool test) {
  const std::string path = test ? cfg.test_dataset_path() : cfg.train_dataset_path();
  if (file_exists(path)) {
    std::string h;
    LoadScenario scen = LoadScenario::load(path, net, &h);
    if (!h.empty() && h != cfg.data_hash())
      fail(Errc::config, path + ": dataset belongs to a different configuration");
    return scen;
  }
  return generate_dataset(net, test ? test_dataset_config(cfg) : cfg.dataset);
}

std::shared_ptr<const ExpertTrajectory> obtain_trajectory(const RunConfig& cfg, const Network& net,
                                                          bool test, bool allow_generate) {
  const std::string path = test ? cfg.expert_test_path() : cfg.expert_train_path();
  if (file_exists(path)) {
    const json j = load_json(path);
    if (j.value("config_hash", "") == cfg.data_hash())
      return std::make_shared<const ExpertTrajectory>(import_trajectory(path, net));
  }
  if (!allow_generate)
    fail(Errc::io, path + ": missing or stale expert trajectory (run the expert command first)");
  const LoadScenario scen = obtain_scenario(cfg, net, test);
  std::vector<LoadState> steps;
  steps.reserve(static_cast<std::size_t>(scen.horizon()));
  for (int t = 0; t < scen.horizon(); ++t) steps.push_back(scen.loads_at(net, t));
  ExpertTrajectory traj;
  try {
    traj = generate_expert_trajectory(net, steps);
  } catch (const Error& e) {
    fail(Errc::solver, std::string(e.what()) + " (" + (test ? "test" : "train") + " scenario)");
  }
  export_trajectory(traj, path, cfg.data_hash());
  return std::make_shared<const ExpertTrajectory>(std::move(traj));
}

class CmdpEnvAdapter : public rl::EnvInterface {
 public:
  CmdpEnvAdapter(const Network& net, std::shared_ptr<const ExpertTrajectory> traj, EnvConfig cfg,
                 std::uint64_t seed)
      : env_(net, std::move(traj), std::move(cfg), seed) {}

  int state_dim() const override { return env_.state_dim(); }
  int action_dim() const override { return env_.action_dim(); }
  int n_cost() const override { return ViolationVector::size; }
  int episode_len() const override { return env_.episode_len(); }
  std::vector<double> reset_sampled() override { return env_.reset_sampled().normalized; }
  Step step(const std::vector<double>& raw_action) override {
    const StepResult r = env_.step(raw_action);
    Step s;
    s.next_state = r.next_state.normalized;
    s.reward = r.reward;
    s.cost = {r.cost.c_pg, r.cost.c_qg, r.cost.c_vg, r.cost.c_flow};
    s.terminal = r.terminal;
    s.truncated = r.truncated;
    return s;
  }
  CmdpEnv& env() { return env_; }

 private:
  CmdpEnv env_;
};

json checkpoint_meta(const RunConfig& cfg, const CmdpEnv& env) {
  json meta;
  meta["config_hash"] = cfg.full_hash();
  meta["data_hash"] = cfg.data_hash();
  meta["reward_mode"] = reward_mode_name(cfg.env.mode);
  meta["reward_scale"] = env.reward_scale();
  meta["norm_lo"] = env.norm_bounds().lo;
  meta["norm_hi"] = env.norm_bounds().hi;
  meta["network"] = env.net().name;
  return meta;
}

rl::EnvFactory make_factory(const RunConfig& cfg, std::shared_ptr<const Network> net,
                            std::shared_ptr<const ExpertTrajectory> traj) {
  EnvConfig env_cfg = cfg.env;
  return [net, traj, env_cfg](std::uint64_t seed) -> std::unique_ptr<rl::EnvInterface> {
    return std::make_unique<CmdpEnvAdapter>(*net, traj, env_cfg, seed);
  };
}

}  // namespace

void cmd_gen_data(const RunConfig& cfg) {
  const Network net = parse_case(cfg.case_path);
  generate_dataset(net, cfg.dataset).save(cfg.train_dataset_path(), cfg.data_hash());
  generate_dataset(net, test_dataset_config(cfg)).save(cfg.test_dataset_path(), cfg.data_hash());
  std::printf("wrote %s (T=%d) and %s (T=%d)\n", cfg.train_dataset_path().c_str(),
              cfg.dataset.horizon, cfg.test_dataset_path().c_str(), cfg.test_horizon);
}

void cmd_expert(const RunConfig& cfg) {
  const Network net = parse_case(cfg.case_path);
  const bool train_cached = file_exists(cfg.expert_train_path());
  auto traj = obtain_trajectory(cfg, net, /*test=*/false, /*allow_generate=*/true);
  auto test = obtain_trajectory(cfg, net, /*test=*/true, /*allow_generate=*/true);
  const int bad_train = count_infeasible(*traj);
  const int bad_test = count_infeasible(*test);
  std::printf("expert trajectories: train T=%d (%d infeasible)%s, test T=%d (%d infeasible)\n",
              traj->horizon, bad_train, train_cached ? " (cached)" : "", test->horizon, bad_test);
  const double frac_train = static_cast<double>(bad_train) / traj->horizon;
  const double frac_test = static_cast<double>(bad_test) / test->horizon;
  if (frac_train > cfg.max_infeasible_frac || frac_test > cfg.max_infeasible_frac) {
    int first = -1;
    for (int t = 0; t < static_cast<int>(traj->steps.size()); ++t)
      if (!traj->steps[static_cast<std::size_t>(t)].feasible) {
        first = t;
        break;
      }
    if (first < 0)
      for (int t = 0; t < static_cast<int>(test->steps.size()); ++t)
        if (!test->steps[static_cast<std::size_t>(t)].feasible) {
          first = t;
          break;
        }
    fail(Errc::solver, "expert: infeasible scenario steps exceed the configured tolerance "
                       "(first infeasible step " + std::to_string(first) + ")");
  }
}

void cmd_pretrain(const RunConfig& cfg) {
  auto net = std::make_shared<const Network>(parse_case(cfg.case_path));
  auto traj = obtain_trajectory(cfg, *net, /*test=*/false, /*allow_generate=*/false);
  rl::PdPpoTrainer trainer(make_factory(cfg, net, traj), cfg.train);
  CmdpEnv env(*net, traj, cfg.env, cfg.seed);
  trainer.init(env.state_dim(), env.action_dim(), ViolationVector::size);

  // Each expert step contributes its transition pair, its fixed point (from
  // the optimal context the correct adjustment is none), and a few perturbed
  // contexts that teach the restoring map back to the optimum. All targets
  // come from the same expert solution.
  Rng aug_rng = Rng(cfg.seed).split("bc_aug");
  std::vector<std::vector<double>> states, actions;
  for (int idx : feasible_steps(*traj)) {
    states.push_back(env.reset(idx).normalized);
    actions.push_back(env.expert_raw_action());
    const ExpertStep& s = traj->steps[static_cast<std::size_t>(idx)];
    states.push_back(env.reset_at_optimum(idx).normalized);
    actions.push_back(env.raw_action_for(s.pg_mw, s.vg));
    for (int k = 0; k < cfg.train.bc_neighbors; ++k) {
      std::vector<double> pg(s.pg_mw), vg(s.vg);
      for (int g = 0; g < net->n_gen(); ++g) {
        const Generator& gen = net->generators[static_cast<std::size_t>(g)];
        const Bus& bus =
            net->buses[static_cast<std::size_t>(net->gen_bus[static_cast<std::size_t>(g)])];
        // previous dispatches from which the optimum stays reachable
        const double plo = std::max(gen.pmin, s.pg_mw[static_cast<std::size_t>(g)] - gen.r_up);
        const double phi = std::min(gen.pmax, s.pg_mw[static_cast<std::size_t>(g)] + gen.r_down);
        const double vlo = std::max(bus.vmin, s.vg[static_cast<std::size_t>(g)] - cfg.env.dv_max);
        const double vhi = std::min(bus.vmax, s.vg[static_cast<std::size_t>(g)] + cfg.env.dv_max);
        pg[static_cast<std::size_t>(g)] = aug_rng.uniform(plo, phi);
        vg[static_cast<std::size_t>(g)] = aug_rng.uniform(vlo, vhi);
      }
      states.push_back(env.reset_with_prev(idx, pg, vg).normalized);
      actions.push_back(env.raw_action_for(s.pg_mw, s.vg));
    }
  }
  const double loss = trainer.pretrain_bc(states, actions);
  rl::save_checkpoint(cfg.pretrained_path(), trainer.state(), checkpoint_meta(cfg, env));
  std::printf("behaviour cloning: %zu pairs, final loss %.3e -> %s\n", states.size(), loss,
              cfg.pretrained_path().c_str());
}

void cmd_train(const RunConfig& cfg) {
  auto net = std::make_shared<const Network>(parse_case(cfg.case_path));
  auto traj = obtain_trajectory(cfg, *net, /*test=*/false, /*allow_generate=*/false);
  rl::PdPpoTrainer trainer(make_factory(cfg, net, traj), cfg.train);
  CmdpEnv env(*net, traj, cfg.env, cfg.seed);

  int remaining = cfg.train.episodes;
  if (file_exists(cfg.checkpoint_path())) {
    json meta;
    rl::TrainerState st = rl::load_checkpoint(cfg.checkpoint_path(), &meta);
    if (meta.value("config_hash", "") != cfg.full_hash())
      fail(Errc::config, cfg.checkpoint_path() + ": config-hash mismatch on resume");
    remaining = cfg.train.episodes - st.episodes_done;
    trainer.set_state(std::move(st));
    if (remaining <= 0) {
      std::printf("checkpoint already has %d episodes, nothing to do\n", cfg.train.episodes);
      return;
    }
  } else if (cfg.skip_bc) {
    trainer.init(env.state_dim(), env.action_dim(), ViolationVector::size);
  } else {
    if (!file_exists(cfg.pretrained_path()))
      fail(Errc::io, cfg.pretrained_path() + ": missing (run pretrain first or set skip_bc)");
    json meta;
    rl::TrainerState st = rl::load_checkpoint(cfg.pretrained_path(), &meta);
    if (meta.value("data_hash", "") != cfg.data_hash())
      fail(Errc::config, cfg.pretrained_path() + ": pretrained on a different dataset");
    trainer.set_state(std::move(st));
  }

  trainer.train(remaining);
  rl::save_checkpoint(cfg.checkpoint_path(), trainer.state(), checkpoint_meta(cfg, env));
  rl::write_training_log(cfg.train_log_path(), trainer.log(), cfg.full_hash());
  std::printf("trained %d episodes (%zu update rounds) -> %s\n", trainer.state().episodes_done,
              trainer.log().size(), cfg.checkpoint_path().c_str());
}

void cmd_eval(const RunConfig& cfg) {
  auto net = std::make_shared<const Network>(parse_case(cfg.case_path));
  auto test = obtain_trajectory(cfg, *net, /*test=*/true, /*allow_generate=*/false);
  json meta;
  const rl::TrainerState st = rl::load_checkpoint(cfg.checkpoint_path(), &meta);
  if (meta.value("data_hash", "") != cfg.data_hash())
    fail(Errc::config, cfg.checkpoint_path() + ": checkpoint/dataset pair mismatch");

  EnvConfig env_cfg = cfg.env;
  env_cfg.reward_scale = meta.value("reward_scale", 0.0);
  EvalReport rep = evaluate_policy(reward_mode_name(cfg.env.mode), *net, test, env_cfg, st.policy,
                                   cfg.cost_limits);
  atomic_write(cfg.report_path(), report_to_text(rep, cfg.full_hash()));
  std::printf("eval[%s]: Feas%%=%.2f Cbar=%.6f kappa_aver=%.4f%% -> %s\n", rep.method.c_str(),
              rep.feas_percent, rep.c_bar, rep.kappa_aver, cfg.report_path().c_str());

  if (cfg.gate_feas_min && rep.feas_percent < *cfg.gate_feas_min)
    fail(Errc::gate, "gate: Feas% " + std::to_string(rep.feas_percent) + " below threshold");
  if (cfg.gate_kappa_aver_max && rep.kappa_aver > *cfg.gate_kappa_aver_max)
    fail(Errc::gate, "gate: kappa_aver " + std::to_string(rep.kappa_aver) + " above threshold");
}

void cmd_bench(const RunConfig& cfg) {
  auto net = std::make_shared<const Network>(parse_case(cfg.case_path));
  auto test = obtain_trajectory(cfg, *net, /*test=*/true, /*allow_generate=*/false);
  json meta;
  const rl::TrainerState st = rl::load_checkpoint(cfg.checkpoint_path(), &meta);

  EvalReport rep;
  rep.method = "bench_" + reward_mode_name(cfg.env.mode);
  rep.timing = timing_benchmark(*net, *test, cfg.env, st.policy, cfg.bench_reps);
  atomic_write(cfg.bench_path(), report_to_text(rep, cfg.full_hash()));
  std::printf("bench: T_IPS=%.4f ms T_PF=%.4f ms T_Actor=%.4f ms speedup=x%.2f -> %s\n",
              rep.timing.t_expert_ms, rep.timing.t_powerflow_ms, rep.timing.t_actor_ms,
              rep.timing.speedup, cfg.bench_path().c_str());
}

void run_command(const std::string& name, const RunConfig& cfg) {
  if (name == "gen-data")
    cmd_gen_data(cfg);
  else if (name == "expert")
    cmd_expert(cfg);
  else if (name == "pretrain")
    cmd_pretrain(cfg);
  else if (name == "train")
    cmd_train(cfg);
  else if (name == "eval")
    cmd_eval(cfg);
  else if (name == "bench")
    cmd_bench(cfg);
  else
    fail(Errc::usage, "unknown command: " + name);
}

}  // namespace rtopf
