// SPDX-License-Identifier: Apache-2.0
#include "env/cmdp.hpp"

#include <algorithm>
#include <cmath>

#include "opf/ipm.hpp"
#include "util/error.hpp"

namespace rtopf {

RewardMode reward_mode_from_string(const std::string& s) {
  if (s == "pdppo") return RewardMode::pdppo;
  if (s == "penalty") return RewardMode::penalty;
  if (s == "cliff") return RewardMode::cliff;
  fail(Errc::config, "reward mode: expected pdppo|penalty|cliff, got '" + s + "'");
}

std::string reward_mode_name(RewardMode m) {
  switch (m) {
    case RewardMode::pdppo: return "pdppo";
    case RewardMode::penalty: return "penalty";
    default: return "cliff";
  }
}

std::pair<int, int> dims(const Network& net) {
  const int nl = static_cast<int>(net.load_buses.size());
  const int ng = net.n_gen();
  return {2 * nl + 2 * ng + 1, 2 * ng};
}

double reward_penalty(double operating_cost_scaled, const ViolationVector& cost,
                      const std::vector<double>& penalty_coeffs) {
  double r = -operating_cost_scaled;
  for (int j = 0; j < ViolationVector::size; ++j)
    r -= (j < static_cast<int>(penalty_coeffs.size()) ? penalty_coeffs[static_cast<std::size_t>(j)] : 0.0) *
         cost[j];
  return r;
}

double reward_cliff(double operating_cost, const ViolationVector& cost, double k, double b) {
  if (cost.sum() > 0.0) return -cost.sum();
  return -k * operating_cost + b;
}

int find_branch(const Network& net, int from_id, int to_id) {
  for (int k = 0; k < net.n_branch(); ++k) {
    const Branch& br = net.branches[static_cast<std::size_t>(k)];
    if ((br.from == from_id && br.to == to_id) || (br.from == to_id && br.to == from_id)) return k;
  }
  fail(Errc::usage, "no branch between buses " + std::to_string(from_id) + " and " +
                        std::to_string(to_id));
}

std::vector<double> expanded_cost(const Network& net, const ContingencySet& contingencies,
                                  const DispatchSetpoints& sp, const LoadState& loads,
                                  double cost_ceiling) {
  std::vector<double> out;
  out.reserve(4 * static_cast<std::size_t>(contingencies.count() + 1));
  auto eval = [&](const Network& variant) {
    PowerFlowSolution sol = solve_nr(variant, sp, loads);
    if (!sol.converged) {
      for (int j = 0; j < ViolationVector::size; ++j) out.push_back(cost_ceiling);
      return;
    }
    const ViolationVector v = violations(variant, sol);
    for (int j = 0; j < ViolationVector::size; ++j) out.push_back(v[j]);
  };
  eval(net);
  for (const auto& outage : contingencies.outages) eval(apply_outage(net, outage));
  return out;
}

CmdpEnv::CmdpEnv(const Network& net, std::shared_ptr<const ExpertTrajectory> traj, EnvConfig cfg,
                 std::uint64_t seed)
    : net_(net), traj_(std::move(traj)), cfg_(std::move(cfg)), pf_(net), rng_(seed) {
  if (!traj_ || traj_->steps.empty()) fail(Errc::usage, "environment needs an expert trajectory");
  feasible_ = feasible_steps(*traj_);
  if (feasible_.empty()) fail(Errc::usage, "expert trajectory has no feasible steps");
  const auto [sd, ad] = dims(net);
  state_dim_ = sd;
  action_dim_ = ad;
  if (cfg_.episode_len < 1) fail(Errc::config, "env.episode_len: must be >= 1");
  compute_bounds();
  if (cfg_.reward_scale > 0.0) {
    reward_scale_ = cfg_.reward_scale;
  } else {
    OpfSolution base = solve_acopf(net_, LoadState::base(net_));
    if (!base.feasible) fail(Errc::solver, "base-case OPF failed while deriving reward scale");
    reward_scale_ = base.objective;
  }
}

void CmdpEnv::compute_bounds() {
  bounds_.lo.clear();
  bounds_.hi.clear();
  auto push = [&](double lo, double hi) {
    bounds_.lo.push_back(lo);
    bounds_.hi.push_back(hi);
  };
  double base_total = 0.0;
  for (int b : net_.load_buses) {
    const Bus& bus = net_.buses[static_cast<std::size_t>(b)];
    push(std::min(cfg_.load_scale_low * bus.pd, cfg_.load_scale_high * bus.pd),
         std::max(cfg_.load_scale_low * bus.pd, cfg_.load_scale_high * bus.pd));
    base_total += bus.pd;
  }
  for (int b : net_.load_buses) {
    const Bus& bus = net_.buses[static_cast<std::size_t>(b)];
    const double beta0 = bus.pd == 0.0 ? 0.0 : bus.pd / std::hypot(bus.pd, bus.qd);
    double qlo = 0.0, qhi = 0.0;
    if (beta0 > 0.0) {
      const double blo = cfg_.pf_scale_low * beta0;
      const double bhi = std::min(cfg_.pf_scale_high * beta0, 1.0);
      for (double p : {cfg_.load_scale_low * bus.pd, cfg_.load_scale_high * bus.pd})
        for (double beta : {blo, bhi}) {
          const double q = p * std::tan(std::acos(std::min(beta, 1.0)));
          qlo = std::min(qlo, q);
          qhi = std::max(qhi, q);
        }
      if (bus.qd < 0.0) {
        std::swap(qlo, qhi);
        qlo = -qlo;
        qhi = -qhi;
      }
    }
    push(qlo, qhi);
  }
  for (int g = 0; g < net_.n_gen(); ++g) {
    const Generator& gen = net_.generators[static_cast<std::size_t>(g)];
    push(gen.pmin, gen.pmax);
  }
  for (int g = 0; g < net_.n_gen(); ++g) {
    const Bus& bus = net_.buses[static_cast<std::size_t>(net_.gen_bus[static_cast<std::size_t>(g)])];
    push(bus.vmin, bus.vmax);
  }
  push(cfg_.load_scale_low * base_total, cfg_.load_scale_high * base_total);
}

std::vector<double> CmdpEnv::normalize(const std::vector<double>& raw) const {
  if (raw.size() != bounds_.lo.size()) fail(Errc::usage, "state size mismatch in normalize");
  std::vector<double> out(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const double range = bounds_.hi[i] - bounds_.lo[i];
    out[i] = range > 0.0 ? (raw[i] - bounds_.lo[i]) / range : 0.5;
    out[i] = std::clamp(out[i], 0.0, 1.0);
  }
  return out;
}

std::vector<double> CmdpEnv::denormalize(const std::vector<double>& normalized) const {
  if (normalized.size() != bounds_.lo.size()) fail(Errc::usage, "state size mismatch in denormalize");
  std::vector<double> out(normalized.size());
  for (std::size_t i = 0; i < normalized.size(); ++i)
    out[i] = bounds_.lo[i] + normalized[i] * (bounds_.hi[i] - bounds_.lo[i]);
  return out;
}

CmdpState CmdpEnv::make_state() const {
  CmdpState st;
  st.raw.reserve(static_cast<std::size_t>(state_dim_));
  for (int b : net_.load_buses) st.raw.push_back(loads_.pd_mw[static_cast<std::size_t>(b)]);
  for (int b : net_.load_buses) st.raw.push_back(loads_.qd_mvar[static_cast<std::size_t>(b)]);
  for (double p : prev_pg_) st.raw.push_back(p);
  for (double v : prev_vg_) st.raw.push_back(v);
  st.raw.push_back(next_total_mw_);
  st.normalized = normalize(st.raw);
  return st;
}

CmdpState CmdpEnv::reset(int step_index) {
  if (step_index < 0 || step_index >= static_cast<int>(traj_->steps.size()))
    fail(Errc::usage, "reset: trajectory step " + std::to_string(step_index) + " out of range");
  const ExpertStep& s = traj_->steps[static_cast<std::size_t>(step_index)];
  if (!s.feasible)
    fail(Errc::usage, "reset: trajectory step " + std::to_string(step_index) +
                          " is flagged infeasible");
  episode_index_ = step_index;
  loads_ = s.loads;
  prev_pg_ = s.prev_pg_mw;
  prev_vg_ = s.prev_vg;
  // look-ahead term: total demand of the next trajectory step (the final
  // step repeats its own total)
  const ExpertStep& nxt = traj_->steps[static_cast<std::size_t>(
      std::min(step_index + 1, static_cast<int>(traj_->steps.size()) - 1))];
  next_total_mw_ = 0.0;
  for (int b : net_.load_buses) next_total_mw_ += nxt.loads.pd_mw[static_cast<std::size_t>(b)];
  step_count_ = 0;
  active_ = true;
  return make_state();
}

CmdpState CmdpEnv::reset_sampled() {
  return reset(feasible_[static_cast<std::size_t>(rng_.uniform_int(feasible_.size()))]);
}

CmdpState CmdpEnv::reset_at_optimum(int step_index) {
  const ExpertStep& s = traj_->steps[static_cast<std::size_t>(step_index)];
  return reset_with_prev(step_index, s.pg_mw, s.vg);
}

CmdpState CmdpEnv::reset_with_prev(int step_index, const std::vector<double>& pg_mw,
                                   const std::vector<double>& vg) {
  reset(step_index);
  if (static_cast<int>(pg_mw.size()) != net_.n_gen() || static_cast<int>(vg.size()) != net_.n_gen())
    fail(Errc::usage, "reset_with_prev: one entry per generator required");
  prev_pg_ = pg_mw;
  prev_vg_ = vg;
  return make_state();
}

ActionVector CmdpEnv::clip_action(const std::vector<double>& raw) const {
  if (!active_) fail(Errc::usage, "clip_action before reset");
  if (static_cast<int>(raw.size()) != action_dim_) fail(Errc::usage, "action dimension mismatch");
  const int ng = net_.n_gen();
  ActionVector act;
  act.dp_mw.resize(static_cast<std::size_t>(ng));
  act.dv.resize(static_cast<std::size_t>(ng));
  for (int g = 0; g < ng; ++g) {
    const Generator& gen = net_.generators[static_cast<std::size_t>(g)];
    const Bus& bus = net_.buses[static_cast<std::size_t>(net_.gen_bus[static_cast<std::size_t>(g)])];
    // centered map: raw in (0,1) -> u in (-1,1), scaled by the half-range
    const double up = 2.0 * raw[static_cast<std::size_t>(g)] - 1.0;
    const double uv = 2.0 * raw[static_cast<std::size_t>(ng + g)] - 1.0;
    const double dp = up * 0.5 * (gen.pmax - gen.pmin);
    const double dv = uv * 0.5 * (bus.vmax - bus.vmin);
    const double prev_p = prev_pg_[static_cast<std::size_t>(g)];
    const double prev_v = prev_vg_[static_cast<std::size_t>(g)];
    act.dp_mw[static_cast<std::size_t>(g)] =
        std::clamp(dp, std::max(-gen.r_down, gen.pmin - prev_p), std::min(gen.r_up, gen.pmax - prev_p));
    act.dv[static_cast<std::size_t>(g)] =
        std::clamp(dv, std::max(-cfg_.dv_max, bus.vmin - prev_v), std::min(cfg_.dv_max, bus.vmax - prev_v));
  }
  return act;
}

std::vector<double> CmdpEnv::raw_action_for(const std::vector<double>& pg_mw,
                                            const std::vector<double>& vg) const {
  if (!active_) fail(Errc::usage, "raw_action_for before reset");
  const int ng = net_.n_gen();
  std::vector<double> raw(static_cast<std::size_t>(2 * ng));
  const double eps = 1e-6;
  for (int g = 0; g < ng; ++g) {
    const Generator& gen = net_.generators[static_cast<std::size_t>(g)];
    const Bus& bus = net_.buses[static_cast<std::size_t>(net_.gen_bus[static_cast<std::size_t>(g)])];
    const double up = (pg_mw[static_cast<std::size_t>(g)] - prev_pg_[static_cast<std::size_t>(g)]) /
                      (0.5 * (gen.pmax - gen.pmin));
    const double uv = (vg[static_cast<std::size_t>(g)] - prev_vg_[static_cast<std::size_t>(g)]) /
                      (0.5 * (bus.vmax - bus.vmin));
    raw[static_cast<std::size_t>(g)] = std::clamp(0.5 * (up + 1.0), eps, 1.0 - eps);
    raw[static_cast<std::size_t>(ng + g)] = std::clamp(0.5 * (uv + 1.0), eps, 1.0 - eps);
  }
  return raw;
}

std::vector<double> CmdpEnv::expert_raw_action() const {
  const ExpertStep& s = traj_->steps[static_cast<std::size_t>(episode_index_)];
  return raw_action_for(s.pg_mw, s.vg);
}

StepResult CmdpEnv::step(const std::vector<double>& raw_action) {
  if (!active_) fail(Errc::usage, "step before reset");
  for (double v : raw_action)
    if (!std::isfinite(v)) fail(Errc::usage, "non-finite action component");

  const ActionVector act = clip_action(raw_action);
  const int ng = net_.n_gen();
  DispatchSetpoints sp;
  sp.pg_mw.resize(static_cast<std::size_t>(ng));
  sp.vg.resize(static_cast<std::size_t>(ng));
  for (int g = 0; g < ng; ++g) {
    sp.pg_mw[static_cast<std::size_t>(g)] =
        prev_pg_[static_cast<std::size_t>(g)] + act.dp_mw[static_cast<std::size_t>(g)];
    sp.vg[static_cast<std::size_t>(g)] =
        prev_vg_[static_cast<std::size_t>(g)] + act.dv[static_cast<std::size_t>(g)];
  }

  StepResult res;
  ++step_count_;
  res.terminal = step_count_ >= cfg_.episode_len;
  res.truncated = res.terminal;

  PowerFlowSolution sol = pf_.solve(sp, loads_);
  if (!sol.converged) {
    res.pf_converged = false;
    res.terminal = true;
    res.truncated = false;
    res.reward = cfg_.reward_floor;
    res.cost.c_pg = res.cost.c_qg = res.cost.c_vg = res.cost.c_flow = cfg_.cost_ceiling;
    res.next_state = make_state();
    return res;
  }

  res.info = sol;
  res.cost = violations(net_, sol);
  double operating_cost = 0.0;
  for (int g = 0; g < ng; ++g)
    operating_cost += net_.gen_cost(g, sol.pg_solved_mw[static_cast<std::size_t>(g)]);
  res.operating_cost = operating_cost;
  switch (cfg_.mode) {
    case RewardMode::pdppo:
      res.reward = -operating_cost / reward_scale_;
      break;
    case RewardMode::penalty:
      res.reward = reward_penalty(operating_cost / reward_scale_, res.cost, cfg_.penalty_coeffs);
      break;
    case RewardMode::cliff:
      res.reward = reward_cliff(operating_cost / reward_scale_, res.cost, cfg_.cliff_k, cfg_.cliff_b);
      break;
  }

  // previous-set-point slots advance; the slack slot tracks its solved output
  for (int g = 0; g < ng; ++g) {
    prev_pg_[static_cast<std::size_t>(g)] = sol.pg_solved_mw[static_cast<std::size_t>(g)];
    prev_vg_[static_cast<std::size_t>(g)] = sp.vg[static_cast<std::size_t>(g)];
  }
  res.next_state = make_state();
  return res;
}

}  // namespace rtopf
