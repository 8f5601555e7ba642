// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "runconfig.hpp"

namespace rtopf {

// Pipeline commands behind the CLI. Each is a pure function of the config
// plus the input files it names; outputs are written atomically under
// cfg.out_dir. Errors surface as rtopf::Error.
void cmd_gen_data(const RunConfig& cfg);
void cmd_expert(const RunConfig& cfg);
void cmd_pretrain(const RunConfig& cfg);
void cmd_train(const RunConfig& cfg);
void cmd_eval(const RunConfig& cfg);
void cmd_bench(const RunConfig& cfg);

void run_command(const std::string& name, const RunConfig& cfg);

}  // namespace rtopf
