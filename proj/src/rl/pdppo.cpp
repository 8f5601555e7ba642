// SPDX-License-Identifier: Apache-2.0
#include "rl/pdppo.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>
#include <thread>

#include "nn/checkpoint.hpp"
#include "nn/tape.hpp"
#include "util/error.hpp"

namespace rtopf::rl {

namespace {

double now_ms() {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

// actor parameters live in one flat vector: mean-net theta then log_std
std::vector<double> actor_params(const nn::GaussianPolicy& pol) {
  std::vector<double> p = pol.mean_net.theta;
  p.insert(p.end(), pol.log_std.begin(), pol.log_std.end());
  return p;
}

void set_actor_params(nn::GaussianPolicy& pol, const std::vector<double>& p) {
  std::copy(p.begin(), p.end() - static_cast<long>(pol.log_std.size()), pol.mean_net.theta.begin());
  std::copy(p.end() - static_cast<long>(pol.log_std.size()), p.end(), pol.log_std.begin());
}

}  // namespace

void TrainConfig::validate() const {
  if (!(gamma >= 0.0 && gamma <= 1.0)) fail(Errc::config, "train.gamma: must be in [0, 1]");
  if (!(clip_eps > 0.0 && clip_eps < 1.0)) fail(Errc::config, "train.clip_eps: must be in (0, 1)");
  if (!(lambda_gae >= 0.0 && lambda_gae <= 1.0))
    fail(Errc::config, "train.lambda_gae: must be in [0, 1]");
  if (actor_lr <= 0.0 || critic_lr <= 0.0 || lambda_lr <= 0.0)
    fail(Errc::config, "train: learning rates must be positive");
  if (batch < 1 || buffer < batch) fail(Errc::config, "train: require 1 <= batch <= buffer");
  if (workers < 1) fail(Errc::config, "train.workers: must be >= 1");
}

double clip_term(double rho, double advantage, double eps) {
  const double clipped = std::clamp(rho, 1.0 - eps, 1.0 + eps);
  return std::min(rho * advantage, clipped * advantage);
}

void update_duals(const std::vector<std::vector<double>>& v_cost, const std::vector<double>& rho,
                  DualMultipliers& duals) {
  if (v_cost.size() != duals.lambda.size())
    fail(Errc::usage, "update_duals: cost dimension mismatch");
  const std::size_t t_end = rho.size();
  for (std::size_t i = 0; i < duals.lambda.size(); ++i) {
    double grad = 0.0;
    for (std::size_t t = 0; t < t_end; ++t)
      grad += std::max(0.0, rho[t] * v_cost[i][t] - duals.d[i]);
    grad /= static_cast<double>(t_end);
    duals.lambda[i] = std::max(0.0, duals.lambda[i] + duals.lr * grad);
  }
}

PdPpoTrainer::PdPpoTrainer(EnvFactory factory, TrainConfig cfg)
    : factory_(std::move(factory)), cfg_(std::move(cfg)) {
  cfg_.validate();
  for (int w = 0; w < cfg_.workers; ++w) {
    envs_.push_back(factory_(cfg_.seed + 1000003ull * static_cast<std::uint64_t>(w)));
    Rng r(cfg_.seed);
    action_rngs_.push_back(r.split("actions/" + std::to_string(w)));
  }
  st_.rng = Rng(cfg_.seed);
}

void PdPpoTrainer::init(int state_dim, int action_dim, int n_cost) {
  Rng init_rng = st_.rng.split("init");
  st_.policy = nn::GaussianPolicy::make(state_dim, action_dim, cfg_.hidden, cfg_.init_log_std,
                                        init_rng);
  // critics start at zero output so early value estimates (and the
  // positive-part dual gradient) reflect measured costs, not init noise
  auto zero_last_layer = [](nn::Mlp& net) {
    const std::size_t off = net.w_offset(net.n_layers() - 1);
    std::fill(net.theta.begin() + static_cast<long>(off), net.theta.end(), 0.0);
  };
  std::vector<int> sizes_r{state_dim};
  for (int h : cfg_.hidden) sizes_r.push_back(h);
  sizes_r.push_back(1);
  st_.critic_r = nn::Mlp::make(sizes_r, nn::OutputAct::identity, init_rng);
  zero_last_layer(st_.critic_r);
  std::vector<int> sizes_c{state_dim};
  for (int h : cfg_.hidden) sizes_c.push_back(h);
  sizes_c.push_back(n_cost);
  st_.critic_c = nn::Mlp::make(sizes_c, nn::OutputAct::identity, init_rng);
  zero_last_layer(st_.critic_c);
  st_.opt_actor.init(st_.policy.mean_net.param_count() + st_.policy.log_std.size(), cfg_.actor_lr);
  st_.opt_critic_r.init(st_.critic_r.param_count(), cfg_.critic_lr);
  st_.opt_critic_c.init(st_.critic_c.param_count(), cfg_.critic_lr);
  st_.duals.lambda.assign(static_cast<std::size_t>(n_cost), 0.0);
  st_.duals.d.assign(static_cast<std::size_t>(n_cost), 0.0);
  st_.duals.lr = cfg_.lambda_lr;
  st_.episodes_done = 0;
}

double PdPpoTrainer::pretrain_bc(const std::vector<std::vector<double>>& states,
                                 const std::vector<std::vector<double>>& actions) {
  if (states.empty() || states.size() != actions.size())
    fail(Errc::usage, "pretrain_bc: dataset must pair states with actions");
  nn::AdamState opt;
  opt.init(st_.policy.mean_net.param_count(), cfg_.bc_lr);
  Rng shuffle_rng = st_.rng.split("bc");
  std::vector<int> order(states.size());
  std::iota(order.begin(), order.end(), 0);
  std::size_t cursor = order.size();  // force initial shuffle
  double loss_value = 0.0;
  const int batch = std::min<int>(cfg_.bc_batch, static_cast<int>(states.size()));
  for (int step = 0; step < cfg_.bc_epochs; ++step) {
    std::vector<int> idx;
    for (int k = 0; k < batch; ++k) {
      if (cursor >= order.size()) {
        for (std::size_t i = order.size(); i > 1; --i)
          std::swap(order[i - 1], order[shuffle_rng.uniform_int(i)]);
        cursor = 0;
      }
      idx.push_back(order[cursor++]);
    }
    nn::Tape tape;
    const nn::MlpVars vars = nn::bind(tape, st_.policy.mean_net);
    nn::Tape::Var total = tape.leaf({0.0});
    for (int i : idx) {
      const nn::Tape::Var x = tape.leaf(states[static_cast<std::size_t>(i)]);
      const nn::Tape::Var mu = nn::forward_tape(tape, st_.policy.mean_net, vars, x);
      total = tape.add(total, tape.mse(mu, actions[static_cast<std::size_t>(i)]));
    }
    const nn::Tape::Var loss = tape.scale(total, 1.0 / batch);
    loss_value = tape.scalar(loss);
    tape.backward(loss);
    std::vector<double> grad(st_.policy.mean_net.param_count(), 0.0);
    nn::accumulate_grads(tape, st_.policy.mean_net, vars, grad);
    opt.update(st_.policy.mean_net.theta, grad);
  }
  // report the full-dataset loss at the final parameters
  double full = 0.0;
  for (std::size_t i = 0; i < states.size(); ++i) {
    const auto mu = st_.policy.mean(states[i]);
    double acc = 0.0;
    for (std::size_t k = 0; k < mu.size(); ++k) {
      const double d = mu[k] - actions[i][k];
      acc += d * d;
    }
    full += acc / static_cast<double>(mu.size());
  }
  st_.bc_loss = full / static_cast<double>(states.size());
  (void)loss_value;
  return st_.bc_loss;
}

void PdPpoTrainer::collect_round(RolloutBuffer& buf) {
  const int n_cost = buf.n_cost();
  buf.behavior_log_std = st_.policy.log_std;
  auto run_episode = [&](EnvInterface& env, Rng& arng, std::vector<Transition>& out) {
    std::vector<double> state = env.reset_sampled();
    for (int t = 0; t < env.episode_len(); ++t) {
      const auto mu = st_.policy.mean(state);
      nn::GaussianPolicy::Sample smp;
      smp.action.resize(mu.size());
      for (std::size_t i = 0; i < mu.size(); ++i)
        smp.action[i] = mu[i] + std::exp(st_.policy.log_std[i]) * arng.normal();
      smp.log_prob = nn::gauss_log_prob(mu, st_.policy.log_std, smp.action);
      constexpr double eps = 1e-6;
      for (double& a : smp.action) a = std::clamp(a, eps, 1.0 - eps);

      EnvInterface::Step sr = env.step(smp.action);
      Transition tr;
      tr.state = state;
      tr.action = smp.action;
      tr.reward = sr.reward;
      tr.cost = sr.cost;
      tr.next_state = sr.next_state;
      tr.log_prob = smp.log_prob;
      tr.behavior_mu = mu;
      tr.terminal = sr.terminal;
      tr.truncated = sr.truncated;
      out.push_back(std::move(tr));
      state = sr.next_state;
      if (sr.terminal) break;
      if (static_cast<int>(sr.cost.size()) != n_cost)
        fail(Errc::usage, "environment cost dimension mismatch");
    }
  };

  while (buf.size() < cfg_.buffer) {
    if (cfg_.workers == 1) {
      std::vector<Transition> ep;
      run_episode(*envs_[0], action_rngs_[0], ep);
      for (auto& t : ep) buf.push(std::move(t));
      ++st_.episodes_done;
    } else {
      std::vector<std::vector<Transition>> per_worker(static_cast<std::size_t>(cfg_.workers));
      std::vector<std::thread> threads;
      for (int w = 0; w < cfg_.workers; ++w)
        threads.emplace_back([&, w] {
          run_episode(*envs_[static_cast<std::size_t>(w)], action_rngs_[static_cast<std::size_t>(w)],
                      per_worker[static_cast<std::size_t>(w)]);
        });
      for (auto& th : threads) th.join();
      for (auto& ep : per_worker) {
        for (auto& t : ep) buf.push(std::move(t));
        ++st_.episodes_done;
      }
    }
  }
}

void PdPpoTrainer::finalize_round(RolloutBuffer& buf) const {
  const int t_end = buf.size();
  const int n_cost = buf.n_cost();
  std::vector<double> rewards(static_cast<std::size_t>(t_end));
  std::vector<char> stop(static_cast<std::size_t>(t_end));
  std::vector<double> vr_s(static_cast<std::size_t>(t_end)), vr_n(static_cast<std::size_t>(t_end));
  std::vector<double> boot_r(static_cast<std::size_t>(t_end), 0.0);
  std::vector<std::vector<double>> cost(static_cast<std::size_t>(n_cost),
                                        std::vector<double>(static_cast<std::size_t>(t_end)));
  std::vector<std::vector<double>> vc_s(static_cast<std::size_t>(n_cost),
                                        std::vector<double>(static_cast<std::size_t>(t_end)));
  std::vector<std::vector<double>> vc_n(static_cast<std::size_t>(n_cost),
                                        std::vector<double>(static_cast<std::size_t>(t_end)));
  std::vector<std::vector<double>> boot_c(static_cast<std::size_t>(n_cost),
                                          std::vector<double>(static_cast<std::size_t>(t_end), 0.0));
  for (int t = 0; t < t_end; ++t) {
    const Transition& tr = buf[t];
    rewards[static_cast<std::size_t>(t)] = tr.reward;
    // a round segment ends at any episode end and at the buffer tail; only a
    // real death (divergence) carries zero continuation value
    const bool dead = tr.terminal && !tr.truncated;
    stop[static_cast<std::size_t>(t)] = (tr.terminal || t == t_end - 1) ? 1 : 0;
    vr_s[static_cast<std::size_t>(t)] = st_.critic_r.forward(tr.state)[0];
    const double vrn = dead ? 0.0 : st_.critic_r.forward(tr.next_state)[0];
    vr_n[static_cast<std::size_t>(t)] = vrn;
    boot_r[static_cast<std::size_t>(t)] = vrn;
    const auto vc = st_.critic_c.forward(tr.state);
    const auto vcn = st_.critic_c.forward(tr.next_state);
    for (int i = 0; i < n_cost; ++i) {
      cost[static_cast<std::size_t>(i)][static_cast<std::size_t>(t)] =
          tr.cost[static_cast<std::size_t>(i)];
      vc_s[static_cast<std::size_t>(i)][static_cast<std::size_t>(t)] = vc[static_cast<std::size_t>(i)];
      const double vcni = dead ? 0.0 : vcn[static_cast<std::size_t>(i)];
      vc_n[static_cast<std::size_t>(i)][static_cast<std::size_t>(t)] = vcni;
      boot_c[static_cast<std::size_t>(i)][static_cast<std::size_t>(t)] = vcni;
    }
  }
  buf.returns_r = discounted_returns(rewards, stop, boot_r, cfg_.gamma);
  buf.returns_c.clear();
  buf.adv_c.clear();
  for (int i = 0; i < n_cost; ++i) {
    buf.returns_c.push_back(discounted_returns(cost[static_cast<std::size_t>(i)], stop,
                                               boot_c[static_cast<std::size_t>(i)], cfg_.gamma));
    buf.adv_c.push_back(gae(cost[static_cast<std::size_t>(i)], vc_s[static_cast<std::size_t>(i)],
                            vc_n[static_cast<std::size_t>(i)], stop, cfg_.gamma, cfg_.lambda_gae));
  }
  buf.adv_r = gae(rewards, vr_s, vr_n, stop, cfg_.gamma, cfg_.lambda_gae);
  buf.adv_l = lagrange_advantage(buf.adv_r, buf.adv_c, st_.duals.lambda);

  double mean_abs = 0.0;
  for (double a : buf.adv_l) mean_abs += std::abs(a);
  mean_abs /= std::max(1, t_end);
  if (!(mean_abs < cfg_.divergence_guard))
    fail(Errc::solver, "divergence guard tripped: mean |A_L| = " + std::to_string(mean_abs));

  if (cfg_.advantage_norm && t_end > 1) {
    double mean = 0.0;
    for (double a : buf.adv_l) mean += a;
    mean /= t_end;
    double var = 0.0;
    for (double a : buf.adv_l) var += (a - mean) * (a - mean);
    const double sd = std::sqrt(var / t_end);
    for (double& a : buf.adv_l) a = (a - mean) / (sd + 1e-8);
  }
  buf.finalized = true;
}

double PdPpoTrainer::kl_to_behavior(const RolloutBuffer& buf) const {
  double acc = 0.0;
  for (int t = 0; t < buf.size(); ++t) {
    const Transition& tr = buf[t];
    acc += nn::gauss_kl(st_.policy.mean(tr.state), st_.policy.log_std, tr.behavior_mu,
                        buf.behavior_log_std);
  }
  return acc / std::max(1, buf.size());
}

double PdPpoTrainer::actor_minibatch_step(const RolloutBuffer& buf,
                                          const std::vector<int>& batch_idx) {
  if (!buf.finalized) fail(Errc::usage, "actor step before finalize");
  nn::Tape tape;
  const nn::MlpVars vars = nn::bind(tape, st_.policy.mean_net);
  const nn::Tape::Var ls = tape.leaf(st_.policy.log_std);
  nn::Tape::Var total = tape.leaf({0.0});
  for (int i : batch_idx) {
    const Transition& tr = buf[i];
    const nn::Tape::Var x = tape.leaf(tr.state);
    const nn::Tape::Var mu = nn::forward_tape(tape, st_.policy.mean_net, vars, x);
    const nn::Tape::Var lp = tape.gauss_log_prob(mu, ls, tr.action);
    const nn::Tape::Var ratio = tape.exp(tape.add_const(lp, -tr.log_prob));
    const double adv = buf.adv_l[static_cast<std::size_t>(i)];
    const nn::Tape::Var unclipped = tape.scale(ratio, adv);
    const nn::Tape::Var clipped =
        tape.scale(tape.clamp(ratio, 1.0 - cfg_.clip_eps, 1.0 + cfg_.clip_eps), adv);
    total = tape.add(total, tape.min2(unclipped, clipped));
  }
  const nn::Tape::Var loss = tape.scale(total, -1.0 / static_cast<double>(batch_idx.size()));
  const double loss_value = tape.scalar(loss);
  if (!(std::abs(loss_value) < cfg_.divergence_guard))
    fail(Errc::solver, "divergence guard tripped: actor loss = " + std::to_string(loss_value));
  tape.backward(loss);
  std::vector<double> grad(st_.policy.mean_net.param_count() + st_.policy.log_std.size(), 0.0);
  nn::accumulate_grads(tape, st_.policy.mean_net, vars, grad);
  const auto& gls = tape.grad(ls);
  std::copy(gls.begin(), gls.end(), grad.end() - static_cast<long>(gls.size()));
  std::vector<double> params = actor_params(st_.policy);
  st_.opt_actor.update(params, grad);
  set_actor_params(st_.policy, params);
  for (double ls : st_.policy.log_std)
    if (!std::isfinite(ls)) fail(Errc::solver, "log-std left the finite range during training");
  return loss_value;
}

std::pair<double, double> PdPpoTrainer::critic_minibatch_step(const RolloutBuffer& buf,
                                                              const std::vector<int>& batch_idx) {
  if (!buf.finalized) fail(Errc::usage, "critic step before finalize");
  const int n_cost = buf.n_cost();
  double loss_r_value = 0.0, loss_c_value = 0.0;
  {
    nn::Tape tape;
    const nn::MlpVars vars = nn::bind(tape, st_.critic_r);
    nn::Tape::Var total = tape.leaf({0.0});
    for (int i : batch_idx) {
      const nn::Tape::Var x = tape.leaf(buf[i].state);
      const nn::Tape::Var out = nn::forward_tape(tape, st_.critic_r, vars, x);
      total = tape.add(total, tape.mse(out, {buf.returns_r[static_cast<std::size_t>(i)]}));
    }
    const nn::Tape::Var loss = tape.scale(total, 1.0 / static_cast<double>(batch_idx.size()));
    loss_r_value = tape.scalar(loss);
    tape.backward(loss);
    std::vector<double> grad(st_.critic_r.param_count(), 0.0);
    nn::accumulate_grads(tape, st_.critic_r, vars, grad);
    st_.opt_critic_r.update(st_.critic_r.theta, grad);
  }
  {
    nn::Tape tape;
    const nn::MlpVars vars = nn::bind(tape, st_.critic_c);
    nn::Tape::Var total = tape.leaf({0.0});
    for (int i : batch_idx) {
      const nn::Tape::Var x = tape.leaf(buf[i].state);
      const nn::Tape::Var out = nn::forward_tape(tape, st_.critic_c, vars, x);
      std::vector<double> target(static_cast<std::size_t>(n_cost));
      for (int c = 0; c < n_cost; ++c)
        target[static_cast<std::size_t>(c)] =
            buf.returns_c[static_cast<std::size_t>(c)][static_cast<std::size_t>(i)];
      total = tape.add(total, tape.mse(out, target));
    }
    const nn::Tape::Var loss = tape.scale(total, 1.0 / static_cast<double>(batch_idx.size()));
    loss_c_value = tape.scalar(loss);
    tape.backward(loss);
    std::vector<double> grad(st_.critic_c.param_count(), 0.0);
    nn::accumulate_grads(tape, st_.critic_c, vars, grad);
    st_.opt_critic_c.update(st_.critic_c.theta, grad);
  }
  if (!(loss_r_value < cfg_.divergence_guard && loss_c_value < cfg_.divergence_guard))
    fail(Errc::solver, "divergence guard tripped in critic regression");
  return {loss_r_value, loss_c_value};
}

void PdPpoTrainer::dual_step(const RolloutBuffer& buf) {
  const int t_end = buf.size();
  const int n_cost = buf.n_cost();
  std::vector<double> rho(static_cast<std::size_t>(t_end));
  std::vector<std::vector<double>> vc(static_cast<std::size_t>(n_cost),
                                      std::vector<double>(static_cast<std::size_t>(t_end)));
  for (int t = 0; t < t_end; ++t) {
    const Transition& tr = buf[t];
    rho[static_cast<std::size_t>(t)] =
        std::exp(st_.policy.log_prob(tr.state, tr.action) - tr.log_prob);
    const auto v = st_.critic_c.forward(tr.state);
    for (int i = 0; i < n_cost; ++i)
      vc[static_cast<std::size_t>(i)][static_cast<std::size_t>(t)] = v[static_cast<std::size_t>(i)];
  }
  update_duals(vc, rho, st_.duals);
}

PdPpoTrainer::UpdateSummary PdPpoTrainer::run_policy_updates(const RolloutBuffer& buf) {
  UpdateSummary summary;
  std::vector<int> order;
  std::size_t cursor = 0;
  for (int k = 0; k < cfg_.n_pi; ++k) {
    summary.kl = kl_to_behavior(buf);
    if (summary.kl > cfg_.kl_target) break;  // no step on an already off-policy batch
    summary.actor_loss = actor_minibatch_step(buf, next_minibatch(order, cursor, buf.size()));
    ++summary.policy_steps;
    dual_step(buf);
  }
  return summary;
}

std::vector<int> PdPpoTrainer::next_minibatch(std::vector<int>& order, std::size_t& cursor,
                                              int total) {
  std::vector<int> idx;
  idx.reserve(static_cast<std::size_t>(cfg_.batch));
  for (int k = 0; k < cfg_.batch; ++k) {
    if (cursor >= order.size()) {
      order.resize(static_cast<std::size_t>(total));
      std::iota(order.begin(), order.end(), 0);
      for (std::size_t i = order.size(); i > 1; --i)
        std::swap(order[i - 1], order[st_.rng.uniform_int(i)]);
      cursor = 0;
    }
    idx.push_back(order[cursor++]);
  }
  return idx;
}

void PdPpoTrainer::train(int episodes) {
  const double t_start = now_ms();
  RolloutBuffer buf(envs_[0]->n_cost());
  std::vector<int> order;
  std::size_t cursor = 0;
  const int target = st_.episodes_done + episodes;
  while (st_.episodes_done < target) {
    if (cfg_.max_wall_s > 0.0 && (now_ms() - t_start) / 1000.0 > cfg_.max_wall_s) break;
    const double round_start = now_ms();
    buf.clear();
    collect_round(buf);
    finalize_round(buf);

    LogRow row;
    row.episode = st_.episodes_done;
    for (int t = 0; t < buf.size(); ++t) row.mean_reward += buf[t].reward;
    row.mean_reward /= std::max(1, buf.size());
    row.mean_cost.assign(static_cast<std::size_t>(buf.n_cost()), 0.0);
    for (int t = 0; t < buf.size(); ++t)
      for (int c = 0; c < buf.n_cost(); ++c)
        row.mean_cost[static_cast<std::size_t>(c)] += buf[t].cost[static_cast<std::size_t>(c)];
    for (double& c : row.mean_cost) c /= std::max(1, buf.size());

    const UpdateSummary summary = run_policy_updates(buf);
    row.actor_loss = summary.actor_loss;
    row.kl = summary.kl;
    order.clear();
    cursor = 0;
    for (int k = 0; k < cfg_.n_v; ++k) {
      const auto [lr_, lc_] = critic_minibatch_step(buf, next_minibatch(order, cursor, buf.size()));
      row.critic_r_loss = lr_;
      row.critic_c_loss = lc_;
    }
    row.lambda = st_.duals.lambda;
    for (double ls : st_.policy.log_std) row.mean_sigma += std::exp(ls);
    row.mean_sigma /= static_cast<double>(st_.policy.log_std.size());
    row.wall_ms = now_ms() - round_start;
    log_.push_back(std::move(row));
  }
}

void save_checkpoint(const std::string& path, const TrainerState& st, const json& meta) {
  json j;
  j["format"] = "rtopf-checkpoint-v1";
  j["meta"] = meta;
  j["actor"] = nn::policy_to_json(st.policy);
  j["critic_r"] = nn::mlp_to_json(st.critic_r);
  j["critic_c"] = nn::mlp_to_json(st.critic_c);
  j["opt_actor"] = nn::adam_to_json(st.opt_actor);
  j["opt_critic_r"] = nn::adam_to_json(st.opt_critic_r);
  j["opt_critic_c"] = nn::adam_to_json(st.opt_critic_c);
  j["duals"] = {{"lambda", st.duals.lambda}, {"d", st.duals.d}, {"lr", st.duals.lr}};
  const auto rs = st.rng.state();
  j["rng_state"] = std::vector<std::uint64_t>(rs.begin(), rs.end());
  j["episodes_done"] = st.episodes_done;
  j["bc_loss"] = st.bc_loss;
  atomic_write(path, j.dump(1) + "\n");
}

TrainerState load_checkpoint(const std::string& path, json* meta) {
  const json j = load_json(path);
  if (j.value("format", "") != "rtopf-checkpoint-v1")
    fail(Errc::config, path + ": not an rtopf checkpoint");
  TrainerState st;
  st.policy = nn::policy_from_json(j.at("actor"));
  st.critic_r = nn::mlp_from_json(j.at("critic_r"));
  st.critic_c = nn::mlp_from_json(j.at("critic_c"));
  st.opt_actor = nn::adam_from_json(j.at("opt_actor"));
  st.opt_critic_r = nn::adam_from_json(j.at("opt_critic_r"));
  st.opt_critic_c = nn::adam_from_json(j.at("opt_critic_c"));
  st.duals.lambda = j.at("duals").at("lambda").get<std::vector<double>>();
  st.duals.d = j.at("duals").at("d").get<std::vector<double>>();
  st.duals.lr = j.at("duals").at("lr").get<double>();
  const auto rs = j.at("rng_state").get<std::vector<std::uint64_t>>();
  std::array<std::uint64_t, 4> arr{};
  std::copy_n(rs.begin(), 4, arr.begin());
  st.rng.set_state(arr);
  st.episodes_done = j.at("episodes_done").get<int>();
  st.bc_loss = j.value("bc_loss", -1.0);
  if (meta) *meta = j.value("meta", json::object());
  return st;
}

void write_training_log(const std::string& path, const std::vector<LogRow>& rows,
                        const std::string& config_hash_hex) {
  std::ostringstream out;
  out << "# rtopf training log config_hash=" << config_hash_hex << "\n";
  out << "# episode mean_reward c_pg c_qg c_vg c_flow lambda... kl actor_loss criticR_loss "
         "criticC_loss wall_ms sigma\n";
  for (const LogRow& r : rows) {
    out << r.episode << ' ' << format_double(r.mean_reward);
    for (double c : r.mean_cost) out << ' ' << format_double(c);
    for (double l : r.lambda) out << ' ' << format_double(l);
    out << ' ' << format_double(r.kl) << ' ' << format_double(r.actor_loss) << ' '
        << format_double(r.critic_r_loss) << ' ' << format_double(r.critic_c_loss) << ' '
        << format_double(r.wall_ms) << ' ' << format_double(r.mean_sigma) << '\n';
  }
  atomic_write(path, out.str());
}

}  // namespace rtopf::rl
