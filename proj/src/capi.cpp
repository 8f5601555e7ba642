// SPDX-License-Identifier: Apache-2.0
#include "rtopf/rtopf.h"

#include <cstring>
#include <memory>
#include <string>

#include "commands.hpp"
#include "env/cmdp.hpp"
#include "grid/network.hpp"
#include "opf/ipm.hpp"
#include "opf/trajectory.hpp"
#include "pf/newton.hpp"
#include "util/error.hpp"

namespace {

thread_local std::string g_last_error;

rtopf_status to_status(rtopf::Errc code) {
  switch (code) {
    case rtopf::Errc::config: return RTOPF_ERR_CONFIG;
    case rtopf::Errc::io: return RTOPF_ERR_IO;
    case rtopf::Errc::solver: return RTOPF_ERR_SOLVER;
    case rtopf::Errc::gate: return RTOPF_ERR_GATE;
    default: return RTOPF_ERR_USAGE;
  }
}

template <typename Fn>
rtopf_status guarded(Fn&& fn) {
  try {
    fn();
    return RTOPF_OK;
  } catch (const rtopf::Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return RTOPF_ERR_USAGE;
  }
}

rtopf::LoadState loads_or_base(const rtopf::Network& net, const double* pd, const double* qd) {
  rtopf::LoadState ls = rtopf::LoadState::base(net);
  if (pd)
    for (int i = 0; i < net.n_bus(); ++i) ls.pd_mw[static_cast<std::size_t>(i)] = pd[i];
  if (qd)
    for (int i = 0; i < net.n_bus(); ++i) ls.qd_mvar[static_cast<std::size_t>(i)] = qd[i];
  return ls;
}

}  // namespace

struct rtopf_network {
  rtopf::Network net;
};

struct rtopf_env {
  std::shared_ptr<const rtopf::Network> net;
  std::unique_ptr<rtopf::CmdpEnv> env;
};

extern "C" {

const char* rtopf_version(void) { return "rtopf 1.0.0"; }

const char* rtopf_last_error(void) { return g_last_error.c_str(); }

rtopf_status rtopf_network_load(const char* case_path, rtopf_network** out) {
  return guarded([&] {
    if (!case_path || !out) rtopf::fail(rtopf::Errc::usage, "null argument");
    auto handle = std::make_unique<rtopf_network>();
    handle->net = rtopf::parse_case(case_path);
    *out = handle.release();
  });
}

void rtopf_network_free(rtopf_network* net) { delete net; }

int rtopf_network_bus_count(const rtopf_network* net) { return net ? net->net.n_bus() : -1; }
int rtopf_network_branch_count(const rtopf_network* net) { return net ? net->net.n_branch() : -1; }
int rtopf_network_gen_count(const rtopf_network* net) { return net ? net->net.n_gen() : -1; }

rtopf_status rtopf_network_dims(const rtopf_network* net, int* state_dim, int* action_dim) {
  return guarded([&] {
    if (!net) rtopf::fail(rtopf::Errc::usage, "null network");
    const auto [sd, ad] = rtopf::dims(net->net);
    if (state_dim) *state_dim = sd;
    if (action_dim) *action_dim = ad;
  });
}

rtopf_status rtopf_solve_powerflow(const rtopf_network* net, const double* pg_mw, const double* vg,
                                   const double* pd_mw, const double* qd_mvar, double* vm,
                                   double* va, double* qg_mvar, double* pg_solved_mw,
                                   double* violations4, int* converged, int* iterations) {
  return guarded([&] {
    if (!net || !pg_mw || !vg) rtopf::fail(rtopf::Errc::usage, "null argument");
    const int ng = net->net.n_gen();
    rtopf::DispatchSetpoints sp;
    sp.pg_mw.assign(pg_mw, pg_mw + ng);
    sp.vg.assign(vg, vg + ng);
    const rtopf::PowerFlowSolution sol =
        rtopf::solve_nr(net->net, sp, loads_or_base(net->net, pd_mw, qd_mvar));
    if (converged) *converged = sol.converged ? 1 : 0;
    if (iterations) *iterations = sol.iterations;
    if (!sol.converged) return;
    for (int i = 0; i < net->net.n_bus(); ++i) {
      if (vm) vm[i] = sol.vm(i);
      if (va) va[i] = sol.va(i);
    }
    for (int g = 0; g < ng; ++g) {
      if (qg_mvar) qg_mvar[g] = sol.qg_mvar[static_cast<std::size_t>(g)];
      if (pg_solved_mw) pg_solved_mw[g] = sol.pg_solved_mw[static_cast<std::size_t>(g)];
    }
    if (violations4) {
      const rtopf::ViolationVector v = rtopf::violations(net->net, sol);
      violations4[0] = v.c_pg;
      violations4[1] = v.c_qg;
      violations4[2] = v.c_vg;
      violations4[3] = v.c_flow;
    }
  });
}

rtopf_status rtopf_solve_opf(const rtopf_network* net, const double* pd_mw, const double* qd_mvar,
                             const double* prev_pg_mw, double* pg_mw, double* vg, double* qg_mvar,
                             double* objective, int* feasible, int* iterations,
                             double* kkt_residual) {
  return guarded([&] {
    if (!net) rtopf::fail(rtopf::Errc::usage, "null network");
    std::optional<std::vector<double>> prev;
    if (prev_pg_mw) prev.emplace(prev_pg_mw, prev_pg_mw + net->net.n_gen());
    const rtopf::OpfSolution sol =
        rtopf::solve_acopf(net->net, loads_or_base(net->net, pd_mw, qd_mvar), prev);
    for (int g = 0; g < net->net.n_gen(); ++g) {
      if (pg_mw) pg_mw[g] = sol.pg_mw[static_cast<std::size_t>(g)];
      if (vg) vg[g] = sol.vg[static_cast<std::size_t>(g)];
      if (qg_mvar) qg_mvar[g] = sol.qg_mvar[static_cast<std::size_t>(g)];
    }
    if (objective) *objective = sol.objective;
    if (feasible) *feasible = sol.feasible ? 1 : 0;
    if (iterations) *iterations = sol.iterations;
    if (kkt_residual) *kkt_residual = sol.kkt_residual;
  });
}

rtopf_status rtopf_expanded_cost(const rtopf_network* net, const int* outage_branches,
                                 const int* outage_lens, int n_outages, const double* pg_mw,
                                 const double* vg, const double* pd_mw, const double* qd_mvar,
                                 double cost_ceiling, double* costs) {
  return guarded([&] {
    if (!net || !pg_mw || !vg || !costs) rtopf::fail(rtopf::Errc::usage, "null argument");
    rtopf::ContingencySet cs;
    int off = 0;
    for (int i = 0; i < n_outages; ++i) {
      std::vector<int> branches;
      for (int k = 0; k < outage_lens[i]; ++k) branches.push_back(outage_branches[off++]);
      cs.outages.push_back(std::move(branches));
    }
    const int ng = net->net.n_gen();
    rtopf::DispatchSetpoints sp;
    sp.pg_mw.assign(pg_mw, pg_mw + ng);
    sp.vg.assign(vg, vg + ng);
    const std::vector<double> out = rtopf::expanded_cost(
        net->net, cs, sp, loads_or_base(net->net, pd_mw, qd_mvar), cost_ceiling);
    std::memcpy(costs, out.data(), out.size() * sizeof(double));
  });
}

int rtopf_find_branch(const rtopf_network* net, int from_bus_id, int to_bus_id) {
  if (!net) return -1;
  try {
    return rtopf::find_branch(net->net, from_bus_id, to_bus_id);
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return -1;
  }
}

rtopf_status rtopf_env_create(const char* case_path, const char* trajectory_path,
                              const char* env_config_json, uint64_t seed, rtopf_env** out) {
  return guarded([&] {
    if (!case_path || !trajectory_path || !out) rtopf::fail(rtopf::Errc::usage, "null argument");
    auto handle = std::make_unique<rtopf_env>();
    handle->net = std::make_shared<const rtopf::Network>(rtopf::parse_case(case_path));
    auto traj = std::make_shared<const rtopf::ExpertTrajectory>(
        rtopf::import_trajectory(trajectory_path, *handle->net));
    rtopf::EnvConfig cfg;
    if (env_config_json && std::strlen(env_config_json) > 0) {
      rtopf::json j = rtopf::json::parse(env_config_json, nullptr, false);
      if (j.is_discarded()) rtopf::fail(rtopf::Errc::config, "env config: invalid JSON");
      cfg.episode_len = j.value("episode_len", cfg.episode_len);
      cfg.dv_max = j.value("dv_max", cfg.dv_max);
      cfg.reward_scale = j.value("reward_scale", cfg.reward_scale);
      cfg.reward_floor = j.value("reward_floor", cfg.reward_floor);
      cfg.cost_ceiling = j.value("cost_ceiling", cfg.cost_ceiling);
      if (j.contains("mode")) cfg.mode = rtopf::reward_mode_from_string(j.at("mode"));
      cfg.load_scale_low = j.value("load_scale_low", cfg.load_scale_low);
      cfg.load_scale_high = j.value("load_scale_high", cfg.load_scale_high);
      cfg.pf_scale_low = j.value("pf_scale_low", cfg.pf_scale_low);
      cfg.pf_scale_high = j.value("pf_scale_high", cfg.pf_scale_high);
    }
    handle->env = std::make_unique<rtopf::CmdpEnv>(*handle->net, std::move(traj), cfg, seed);
    *out = handle.release();
  });
}

void rtopf_env_free(rtopf_env* env) { delete env; }

rtopf_status rtopf_env_dims(const rtopf_env* env, int* state_dim, int* action_dim) {
  return guarded([&] {
    if (!env) rtopf::fail(rtopf::Errc::usage, "null env");
    if (state_dim) *state_dim = env->env->state_dim();
    if (action_dim) *action_dim = env->env->action_dim();
  });
}

rtopf_status rtopf_env_reset(rtopf_env* env, int step_index, double* state_normalized) {
  return guarded([&] {
    if (!env || !state_normalized) rtopf::fail(rtopf::Errc::usage, "null argument");
    const rtopf::CmdpState st =
        step_index < 0 ? env->env->reset_sampled() : env->env->reset(step_index);
    std::memcpy(state_normalized, st.normalized.data(), st.normalized.size() * sizeof(double));
  });
}

rtopf_status rtopf_env_step(rtopf_env* env, const double* raw_action, double* next_state_normalized,
                            double* reward, double* cost4, int* terminal, int* pf_converged) {
  return guarded([&] {
    if (!env || !raw_action) rtopf::fail(rtopf::Errc::usage, "null argument");
    const std::vector<double> action(raw_action, raw_action + env->env->action_dim());
    const rtopf::StepResult r = env->env->step(action);
    if (next_state_normalized)
      std::memcpy(next_state_normalized, r.next_state.normalized.data(),
                  r.next_state.normalized.size() * sizeof(double));
    if (reward) *reward = r.reward;
    if (cost4) {
      cost4[0] = r.cost.c_pg;
      cost4[1] = r.cost.c_qg;
      cost4[2] = r.cost.c_vg;
      cost4[3] = r.cost.c_flow;
    }
    if (terminal) *terminal = r.terminal ? 1 : 0;
    if (pf_converged) *pf_converged = r.pf_converged ? 1 : 0;
  });
}

rtopf_status rtopf_run_command(const char* command, const char* config_path,
                               const char* overrides_json) {
  return guarded([&] {
    if (!command || !config_path) rtopf::fail(rtopf::Errc::usage, "null argument");
    rtopf::json overrides = rtopf::json::object();
    if (overrides_json && std::strlen(overrides_json) > 0) {
      overrides = rtopf::json::parse(overrides_json, nullptr, false);
      if (overrides.is_discarded())
        rtopf::fail(rtopf::Errc::config, "overrides: invalid JSON");
    }
    const rtopf::RunConfig cfg = rtopf::RunConfig::load(config_path, overrides);
    rtopf::run_command(command, cfg);
  });
}

}  // extern "C"
