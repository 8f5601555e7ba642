// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "nn/mlp.hpp"
#include "util/fileio.hpp"

namespace rtopf::nn {

json mlp_to_json(const Mlp& net);
Mlp mlp_from_json(const json& j);

json adam_to_json(const AdamState& st);
AdamState adam_from_json(const json& j);

json policy_to_json(const GaussianPolicy& pol);
GaussianPolicy policy_from_json(const json& j);

}  // namespace rtopf::nn
