// SPDX-License-Identifier: Apache-2.0
//
// rtopf command-line front end. Thin shim over the shared library's C API:
// parses flags, merges them into a JSON override blob and dispatches.
#include <cstdint>
#include <cstdio>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "rtopf/rtopf.h"

int main(int argc, char** argv) {
  CLI::App app{"rtopf - primal-dual PPO for real-time AC optimal power flow"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<int> episodes;
  std::optional<std::string> reward_mode;
  std::optional<std::string> out_dir;
  bool skip_bc = false;

  const char* names[] = {"gen-data", "expert", "pretrain", "train", "eval", "bench"};
  const char* descs[] = {"generate train/test load datasets",
                         "solve the expert trajectories",
                         "behaviour-cloning pre-training of the actor",
                         "primal-dual PPO training",
                         "evaluate a checkpoint on the held-out test set",
                         "timing benchmark: expert solve vs policy + power flow"};
  for (int i = 0; i < 6; ++i) {
    CLI::App* sub = app.add_subcommand(names[i], descs[i]);
    sub->add_option("--config", config_path, "run configuration file")->required();
    sub->add_option("--seed", seed, "root seed override");
    sub->add_option("--workers", workers, "parallel rollout workers (train)");
    sub->add_option("--episodes", episodes, "training episode count override");
    sub->add_option("--reward-mode", reward_mode, "pdppo|penalty|cliff");
    sub->add_option("--out", out_dir, "output directory override");
    if (std::string(names[i]) == "train")
      sub->add_flag("--skip-bc", skip_bc, "start from a fresh actor instead of the BC checkpoint");
  }

  CLI11_PARSE(app, argc, argv);
  const std::string cmd = app.get_subcommands().front()->get_name();

  std::ostringstream overrides;
  overrides << "{";
  bool first = true;
  auto emit = [&](const std::string& text) {
    if (!first) overrides << ",";
    overrides << text;
    first = false;
  };
  if (seed) emit("\"seed\":" + std::to_string(*seed));
  if (out_dir) emit("\"out_dir\":\"" + *out_dir + "\"");
  if (reward_mode) emit("\"env\":{\"mode\":\"" + *reward_mode + "\"}");
  {
    std::string train_block;
    if (workers) train_block += "\"workers\":" + std::to_string(*workers);
    if (episodes) {
      if (!train_block.empty()) train_block += ",";
      train_block += "\"episodes\":" + std::to_string(*episodes);
    }
    if (skip_bc) {
      if (!train_block.empty()) train_block += ",";
      train_block += "\"skip_bc\":true";
    }
    if (!train_block.empty()) emit("\"train\":{" + train_block + "}");
  }
  overrides << "}";

  const rtopf_status rc = rtopf_run_command(cmd.c_str(), config_path.c_str(),
                                            overrides.str().c_str());
  if (rc != RTOPF_OK) std::fprintf(stderr, "rtopf %s: %s\n", cmd.c_str(), rtopf_last_error());
  // missing inputs violate the config contract: fold them into exit code 2
  if (rc == RTOPF_ERR_IO || rc == RTOPF_ERR_USAGE) return 2;
  return static_cast<int>(rc);
}
