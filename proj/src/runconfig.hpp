// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>

#include "env/cmdp.hpp"
#include "env/dataset.hpp"
#include "rl/pdppo.hpp"
#include "util/fileio.hpp"

namespace rtopf {

// One config file drives every command; flag overrides take precedence.
// All randomness flows from the root seed, split per subsystem.
struct RunConfig {
  std::string case_path;
  std::uint64_t seed = 1;
  std::string out_dir = "out";
  DatasetConfig dataset;
  int test_horizon = 200;
  double max_infeasible_frac = 0.0;  // expert-step tolerance before exit 3
  EnvConfig env;
  rl::TrainConfig train;
  int bench_reps = 100;
  bool skip_bc = false;
  std::vector<double> cost_limits{0.0, 0.0, 0.0, 0.0};
  std::optional<double> gate_feas_min;
  std::optional<double> gate_kappa_aver_max;

  json canonical;  // defaults + overrides applied, used for hashing

  static RunConfig load(const std::string& path, const json& overrides);

  std::string full_hash() const;  // whole canonical config
  std::string data_hash() const;  // case + seed + dataset block (artifact pairing)

  // output paths
  std::string train_dataset_path() const { return out_dir + "/train_dataset.txt"; }
  std::string test_dataset_path() const { return out_dir + "/test_dataset.txt"; }
  std::string expert_train_path() const { return out_dir + "/expert_train.json"; }
  std::string expert_test_path() const { return out_dir + "/expert_test.json"; }
  std::string pretrained_path() const { return out_dir + "/pretrained.json"; }
  std::string checkpoint_path() const {
    return out_dir + "/checkpoint_" + reward_mode_name(env.mode) + ".json";
  }
  std::string train_log_path() const {
    return out_dir + "/train_log_" + reward_mode_name(env.mode) + ".txt";
  }
  std::string report_path() const {
    return out_dir + "/report_" + reward_mode_name(env.mode) + ".txt";
  }
  std::string bench_path() const { return out_dir + "/bench.txt"; }
};

}  // namespace rtopf
