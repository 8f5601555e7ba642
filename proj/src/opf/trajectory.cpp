// SPDX-License-Identifier: Apache-2.0
#include "opf/trajectory.hpp"

#include <cmath>

#include "util/error.hpp"
#include "util/fileio.hpp"

namespace rtopf {

ExpertTrajectory generate_expert_trajectory(const Network& net,
                                            const std::vector<LoadState>& scenario,
                                            const OpfOptions& opt) {
  if (scenario.size() < 2) fail(Errc::usage, "scenario must have at least 2 steps");
  ExpertTrajectory traj;
  traj.network_id = net.name;
  traj.horizon = static_cast<int>(scenario.size());

  // t = 0 starts from the optimum of its own conditions
  OpfOptions step_opt = opt;
  OpfSolution prev = solve_acopf(net, scenario[0], std::nullopt, step_opt);
  if (!prev.feasible)
    fail(Errc::solver, "expert trajectory step 0: initial OPF did not converge");

  for (int t = 0; t < traj.horizon; ++t) {
    step_opt.warm = OpfWarmStart{prev.vm, prev.va, prev.pg_mw, prev.qg_mvar};
    OpfSolution sol = solve_acopf(net, scenario[static_cast<std::size_t>(t)], prev.pg_mw, step_opt);
    if (!sol.feasible) {
      // a cold start occasionally succeeds where the warm one stalls
      OpfOptions cold = opt;
      OpfSolution retry = solve_acopf(net, scenario[static_cast<std::size_t>(t)], prev.pg_mw, cold);
      if (retry.feasible) sol = std::move(retry);
    }
    ExpertStep step;
    step.loads = scenario[static_cast<std::size_t>(t)];
    step.prev_pg_mw = prev.pg_mw;
    step.prev_vg = prev.vg;
    step.pg_mw = sol.pg_mw;
    step.vg = sol.vg;
    step.objective = sol.objective;
    step.feasible = sol.feasible;
    traj.steps.push_back(std::move(step));
    // infeasible conditions are flagged; the dispatch chain continues from
    // the last solvable step
    if (sol.feasible) prev = std::move(sol);
  }
  return traj;
}

int count_infeasible(const ExpertTrajectory& traj) {
  int n = 0;
  for (const ExpertStep& s : traj.steps)
    if (!s.feasible) ++n;
  return n;
}

std::vector<int> feasible_steps(const ExpertTrajectory& traj) {
  std::vector<int> idx;
  for (int t = 0; t < static_cast<int>(traj.steps.size()); ++t)
    if (traj.steps[static_cast<std::size_t>(t)].feasible) idx.push_back(t);
  return idx;
}

void export_trajectory(const ExpertTrajectory& traj, const std::string& path,
                       const std::string& config_hash_hex) {
  json j;
  j["network_id"] = traj.network_id;
  j["horizon"] = traj.horizon;
  if (!config_hash_hex.empty()) j["config_hash"] = config_hash_hex;
  j["steps"] = json::array();
  for (const ExpertStep& s : traj.steps) {
    j["steps"].push_back({{"loads", {{"pd_mw", s.loads.pd_mw}, {"qd_mvar", s.loads.qd_mvar}}},
                          {"prev_pg", s.prev_pg_mw},
                          {"prev_vg", s.prev_vg},
                          {"pg", s.pg_mw},
                          {"vg", s.vg},
                          {"objective", s.objective},
                          {"feasible", s.feasible}});
  }
  atomic_write(path, j.dump(1) + "\n");
}

ExpertTrajectory import_trajectory(const std::string& path, const Network& net) {
  const json j = load_json(path);
  ExpertTrajectory traj;
  traj.network_id = j.value("network_id", "");
  if (!traj.network_id.empty() && !net.name.empty() && traj.network_id != net.name)
    fail(Errc::config, path + ": trajectory was produced for network '" + traj.network_id +
                           "', not '" + net.name + "'");
  traj.horizon = j.at("horizon").get<int>();
  const std::size_t nb = net.buses.size();
  const std::size_t ng = net.generators.size();
  for (const json& js : j.at("steps")) {
    ExpertStep s;
    s.loads.pd_mw = js.at("loads").at("pd_mw").get<std::vector<double>>();
    s.loads.qd_mvar = js.at("loads").at("qd_mvar").get<std::vector<double>>();
    s.prev_pg_mw = js.at("prev_pg").get<std::vector<double>>();
    s.prev_vg = js.value("prev_vg", std::vector<double>{});
    s.pg_mw = js.at("pg").get<std::vector<double>>();
    s.vg = js.at("vg").get<std::vector<double>>();
    s.objective = js.at("objective").get<double>();
    s.feasible = js.at("feasible").get<bool>();
    if (s.prev_vg.empty()) s.prev_vg = s.vg;
    if (s.loads.pd_mw.size() != nb || s.loads.qd_mvar.size() != nb ||
        s.prev_pg_mw.size() != ng || s.pg_mw.size() != ng || s.vg.size() != ng)
      fail(Errc::config, path + ": steps[" + std::to_string(traj.steps.size()) +
                             "]: vector sizes do not match the network");
    traj.steps.push_back(std::move(s));
  }
  if (static_cast<int>(traj.steps.size()) != traj.horizon)
    fail(Errc::config, path + ": horizon does not match the number of steps");
  validate_trajectory(traj, net);
  return traj;
}

void validate_trajectory(const ExpertTrajectory& traj, const Network& net) {
  const double tol = 1e-6;
  for (std::size_t t = 0; t < traj.steps.size(); ++t) {
    const ExpertStep& s = traj.steps[t];
    if (!s.feasible) continue;
    const std::string ctx = "steps[" + std::to_string(t) + "]";
    for (int k = 0; k < net.n_gen(); ++k) {
      const Generator& gen = net.generators[static_cast<std::size_t>(k)];
      const double pg = s.pg_mw[static_cast<std::size_t>(k)];
      const double vg = s.vg[static_cast<std::size_t>(k)];
      const Bus& bus = net.buses[static_cast<std::size_t>(net.gen_bus[static_cast<std::size_t>(k)])];
      if (pg < gen.pmin - tol || pg > gen.pmax + tol)
        fail(Errc::config, ctx + ": generator " + std::to_string(k) + " active power outside limits");
      if (vg < bus.vmin - tol || vg > bus.vmax + tol)
        fail(Errc::config, ctx + ": generator " + std::to_string(k) + " voltage outside limits");
      const double delta = pg - s.prev_pg_mw[static_cast<std::size_t>(k)];
      if (delta > gen.r_up + tol || delta < -gen.r_down - tol)
        fail(Errc::config, ctx + ": generator " + std::to_string(k) + " violates the ramp limit");
    }
    if (t > 0) {
      const ExpertStep& prev = traj.steps[t - 1];
      if (prev.feasible)
        for (int k = 0; k < net.n_gen(); ++k)
          if (std::abs(s.prev_pg_mw[static_cast<std::size_t>(k)] -
                       prev.pg_mw[static_cast<std::size_t>(k)]) > 1e-9)
            fail(Errc::config, ctx + ": previous dispatch does not chain from step " +
                                   std::to_string(t - 1));
    }
  }
}

}  // namespace rtopf
