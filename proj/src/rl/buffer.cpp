// SPDX-License-Identifier: Apache-2.0
#include "rl/buffer.hpp"

#include <cmath>

#include "util/error.hpp"

namespace rtopf::rl {

std::vector<double> discounted_returns(const std::vector<double>& signal,
                                       const std::vector<char>& stop,
                                       const std::vector<double>& boot, double gamma) {
  const int t_end = static_cast<int>(signal.size());
  std::vector<double> g(static_cast<std::size_t>(t_end));
  double acc = 0.0;
  for (int t = t_end - 1; t >= 0; --t) {
    if (stop[static_cast<std::size_t>(t)]) acc = boot[static_cast<std::size_t>(t)];
    acc = signal[static_cast<std::size_t>(t)] + gamma * acc;
    g[static_cast<std::size_t>(t)] = acc;
  }
  return g;
}

std::vector<double> gae(const std::vector<double>& signal, const std::vector<double>& value_s,
                        const std::vector<double>& value_next, const std::vector<char>& stop,
                        double gamma, double lambda_gae) {
  const int t_end = static_cast<int>(signal.size());
  std::vector<double> adv(static_cast<std::size_t>(t_end));
  double acc = 0.0;
  for (int t = t_end - 1; t >= 0; --t) {
    if (stop[static_cast<std::size_t>(t)]) acc = 0.0;
    const double delta = signal[static_cast<std::size_t>(t)] +
                         gamma * value_next[static_cast<std::size_t>(t)] -
                         value_s[static_cast<std::size_t>(t)];
    acc = delta + gamma * lambda_gae * acc;
    adv[static_cast<std::size_t>(t)] = acc;
  }
  return adv;
}

std::vector<double> lagrange_advantage(const std::vector<double>& adv_r,
                                       const std::vector<std::vector<double>>& adv_c,
                                       const std::vector<double>& lambda) {
  if (adv_c.size() != lambda.size())
    fail(Errc::usage, "lagrange_advantage: one multiplier per cost component required");
  std::vector<double> adv_l = adv_r;
  for (std::size_t i = 0; i < lambda.size(); ++i)
    for (std::size_t t = 0; t < adv_l.size(); ++t)
      adv_l[t] -= lambda[i] * adv_c[i][t];
  return adv_l;
}

void RolloutBuffer::push(Transition t) {
  if (static_cast<int>(t.cost.size()) != n_cost_)
    fail(Errc::usage, "transition cost dimension mismatch");
  for (double c : t.cost)
    if (!(c >= 0.0)) fail(Errc::usage, "negative or non-finite cost component");
  if (!std::isfinite(t.reward)) fail(Errc::usage, "non-finite reward");
  data_.push_back(std::move(t));
  finalized = false;
}

void RolloutBuffer::clear() {
  data_.clear();
  returns_r.clear();
  returns_c.clear();
  adv_r.clear();
  adv_c.clear();
  adv_l.clear();
  behavior_log_std.clear();
  finalized = false;
}

}  // namespace rtopf::rl
