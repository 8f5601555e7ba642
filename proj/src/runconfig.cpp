// SPDX-License-Identifier: Apache-2.0
#include "runconfig.hpp"

#include <filesystem>

#include "util/error.hpp"

namespace rtopf {

namespace {

json merged(const json& base, const json& over) {
  json out = base;
  out.merge_patch(over);
  return out;
}

}  // namespace

RunConfig RunConfig::load(const std::string& path, const json& overrides) {
  json raw = load_json(path);
  if (!overrides.is_null() && !overrides.empty()) raw = merged(raw, overrides);

  RunConfig cfg;
  if (!raw.contains("case")) fail(Errc::config, path + ": missing 'case'");
  cfg.case_path = raw.at("case").get<std::string>();
  // a relative case path is resolved against the config file's directory
  if (std::filesystem::path(cfg.case_path).is_relative()) {
    const auto anchored = std::filesystem::path(path).parent_path() / cfg.case_path;
    if (!file_exists(cfg.case_path) && file_exists(anchored.string()))
      cfg.case_path = anchored.lexically_normal().string();
  }
  cfg.seed = raw.value("seed", 1ull);
  cfg.out_dir = raw.value("out_dir", std::string("out"));

  const json jd = raw.value("dataset", json::object());
  cfg.dataset.horizon = jd.value("horizon", 96);
  cfg.dataset.load_scale_low = jd.value("load_scale_low", 0.7);
  cfg.dataset.load_scale_high = jd.value("load_scale_high", 1.3);
  cfg.dataset.pf_scale_low = jd.value("pf_scale_low", 0.9);
  cfg.dataset.pf_scale_high = jd.value("pf_scale_high", 1.1);
  cfg.test_horizon = jd.value("test_horizon", 200);
  cfg.max_infeasible_frac = jd.value("max_infeasible_frac", 0.0);

  const json je = raw.value("env", json::object());
  cfg.env.episode_len = je.value("episode_len", 8);
  cfg.env.dv_max = je.value("dv_max", 0.05);
  cfg.env.reward_scale = je.value("reward_scale", 0.0);
  cfg.env.reward_floor = je.value("reward_floor", -10.0);
  cfg.env.cost_ceiling = je.value("cost_ceiling", 1.0);
  cfg.env.mode = reward_mode_from_string(je.value("mode", std::string("pdppo")));
  cfg.env.penalty_coeffs =
      je.value("penalty_coeffs", std::vector<double>{10.0, 10.0, 10.0, 10.0});
  cfg.env.cliff_k = je.value("cliff_k", 1.0);
  cfg.env.cliff_b = je.value("cliff_b", 2.0);
  cfg.env.load_scale_low = cfg.dataset.load_scale_low;
  cfg.env.load_scale_high = cfg.dataset.load_scale_high;
  cfg.env.pf_scale_low = cfg.dataset.pf_scale_low;
  cfg.env.pf_scale_high = cfg.dataset.pf_scale_high;

  const json jt = raw.value("train", json::object());
  cfg.train.gamma = jt.value("gamma", 0.95);
  cfg.train.lambda_gae = jt.value("lambda_gae", 0.95);
  cfg.train.clip_eps = jt.value("clip_eps", 0.2);
  cfg.train.kl_target = jt.value("kl_target", 0.01);
  cfg.train.batch = jt.value("batch", 32);
  cfg.train.buffer = jt.value("buffer", 400);
  cfg.train.actor_lr = jt.value("actor_lr", 5e-5);
  cfg.train.critic_lr = jt.value("critic_lr", 1e-4);
  cfg.train.lambda_lr = jt.value("lambda_lr", 1e-3);
  cfg.train.episodes = jt.value("episodes", 2000);
  cfg.train.n_pi = jt.value("n_pi", 10);
  cfg.train.n_v = jt.value("n_v", 10);
  cfg.train.hidden = jt.value("hidden", std::vector<int>{64, 64});
  cfg.train.init_log_std = jt.value("init_log_std", -2.5);
  cfg.train.advantage_norm = jt.value("advantage_norm", true);
  cfg.train.bc_epochs = jt.value("bc_epochs", 4000);
  cfg.train.bc_neighbors = jt.value("bc_neighbors", 4);
  cfg.train.bc_batch = jt.value("bc_batch", 128);
  cfg.train.bc_lr = jt.value("bc_lr", 1e-3);
  cfg.train.divergence_guard = jt.value("divergence_guard", 1e6);
  cfg.train.max_wall_s = jt.value("max_wall_s", 0.0);
  cfg.train.workers = jt.value("workers", 1);
  cfg.train.seed = cfg.seed;
  cfg.skip_bc = jt.value("skip_bc", false);

  const json jv = raw.value("eval", json::object());
  cfg.bench_reps = jv.value("bench_reps", 100);
  cfg.cost_limits = jv.value("cost_limits", std::vector<double>{0.0, 0.0, 0.0, 0.0});
  if (jv.contains("gate")) {
    const json& g = jv.at("gate");
    if (g.contains("feas_min")) cfg.gate_feas_min = g.at("feas_min").get<double>();
    if (g.contains("kappa_aver_max"))
      cfg.gate_kappa_aver_max = g.at("kappa_aver_max").get<double>();
  }

  cfg.dataset.seed = Rng(cfg.seed).split("dataset/train").state()[0];
  cfg.train.validate();
  cfg.dataset.validate();

  cfg.canonical = raw;
  cfg.canonical["seed"] = cfg.seed;
  return cfg;
}

std::string RunConfig::full_hash() const {
  // runtime-only fields stay out of the pairing hash so checkpoints can be
  // resumed with a larger episode budget or different worker count
  json j = canonical;
  j.erase("out_dir");
  if (j.contains("train")) {
    j["train"].erase("episodes");
    j["train"].erase("max_wall_s");
    j["train"].erase("workers");
  }
  return hash_hex(config_hash(j));
}

std::string RunConfig::data_hash() const {
  json j;
  j["case"] = case_path;
  j["seed"] = seed;
  j["dataset"] = canonical.value("dataset", json::object());
  return hash_hex(config_hash(j));
}

}  // namespace rtopf
