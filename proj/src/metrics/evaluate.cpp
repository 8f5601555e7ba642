// SPDX-License-Identifier: Apache-2.0
#include "metrics/evaluate.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "opf/ipm.hpp"
#include "util/error.hpp"
#include "util/fileio.hpp"

namespace rtopf {

std::pair<double, double> feasibility(const std::vector<ScenarioRow>& rows,
                                      const std::vector<double>& d) {
  if (rows.empty()) return {0.0, 0.0};
  int feas_count = 0;
  double cbar = 0.0;
  for (const ScenarioRow& r : rows) {
    double excess = 0.0;
    for (int j = 0; j < ViolationVector::size; ++j)
      excess += std::max(0.0, r.cost[j] - (j < static_cast<int>(d.size()) ? d[static_cast<std::size_t>(j)] : 0.0));
    if (excess == 0.0) ++feas_count;
    cbar += excess;
  }
  return {100.0 * feas_count / static_cast<double>(rows.size()),
          cbar / static_cast<double>(rows.size())};
}

KappaStats optimality_gap(const std::vector<double>& agent_objectives,
                          const std::vector<double>& expert_objectives) {
  if (agent_objectives.size() != expert_objectives.size() || agent_objectives.empty())
    fail(Errc::usage, "optimality_gap: paired non-empty objective rows required");
  KappaStats st;
  st.max = -1e300;
  st.min = 1e300;
  for (std::size_t i = 0; i < agent_objectives.size(); ++i) {
    if (!(expert_objectives[i] > 0.0))
      fail(Errc::usage, "optimality_gap: expert objective must be positive");
    const double k = 100.0 * (agent_objectives[i] - expert_objectives[i]) / expert_objectives[i];
    st.max = std::max(st.max, k);
    st.min = std::min(st.min, k);
    st.aver += k;
  }
  st.aver /= static_cast<double>(agent_objectives.size());
  return st;
}

EvalReport evaluate_policy(const std::string& method, const Network& net,
                           std::shared_ptr<const ExpertTrajectory> test_traj,
                           const EnvConfig& env_cfg, const nn::GaussianPolicy& policy,
                           const std::vector<double>& d) {
  EvalReport rep;
  rep.method = method;
  CmdpEnv env(net, test_traj, env_cfg);
  std::vector<double> agent_obj, expert_obj;
  for (int idx : feasible_steps(*test_traj)) {
    const CmdpState st = env.reset(idx);
    const std::vector<double> action = policy.mean(st.normalized);
    const StepResult sr = env.step(action);
    ScenarioRow row;
    row.index = idx;
    row.cost = sr.cost;
    row.objective_agent = sr.pf_converged ? sr.operating_cost : -1.0;
    row.objective_expert = test_traj->steps[static_cast<std::size_t>(idx)].objective;
    double excess = 0.0;
    for (int j = 0; j < ViolationVector::size; ++j)
      excess += std::max(0.0, sr.cost[j] - (j < static_cast<int>(d.size()) ? d[static_cast<std::size_t>(j)] : 0.0));
    row.feasible = sr.pf_converged && excess == 0.0;
    if (sr.pf_converged && row.objective_expert > 0.0)
      row.kappa_percent =
          100.0 * (row.objective_agent - row.objective_expert) / row.objective_expert;
    rep.rows.push_back(row);
    if (sr.pf_converged) {
      agent_obj.push_back(row.objective_agent);
      expert_obj.push_back(row.objective_expert);
    }
  }
  const auto [feas, cbar] = feasibility(rep.rows, d);
  rep.feas_percent = feas;
  rep.c_bar = cbar;
  if (!agent_obj.empty()) {
    const KappaStats ks = optimality_gap(agent_obj, expert_obj);
    rep.kappa_max = ks.max;
    rep.kappa_min = ks.min;
    rep.kappa_aver = ks.aver;
  }
  return rep;
}

namespace {

double now_ms() {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

// median wall time of one call, with the inner repetition count grown until
// a batch comfortably exceeds the clock resolution
template <typename Fn>
double median_ms(Fn&& fn, int repetitions) {
  int inner = 1;
  for (;;) {
    const double t0 = now_ms();
    for (int i = 0; i < inner; ++i) fn();
    const double dt = now_ms() - t0;
    if (dt > 0.05 || inner >= (1 << 20)) break;
    inner *= 4;
  }
  std::vector<double> samples;
  samples.reserve(static_cast<std::size_t>(repetitions));
  for (int r = 0; r < repetitions; ++r) {
    const double t0 = now_ms();
    for (int i = 0; i < inner; ++i) fn();
    samples.push_back((now_ms() - t0) / inner);
  }
  std::sort(samples.begin(), samples.end());
  return samples[samples.size() / 2];
}

}  // namespace

TimingBlock timing_benchmark(const Network& net, const ExpertTrajectory& traj,
                             const EnvConfig& env_cfg, const nn::GaussianPolicy& policy,
                             int repetitions) {
  if (repetitions < 30) fail(Errc::usage, "timing benchmark needs at least 30 repetitions");
  if (traj.steps.empty()) fail(Errc::usage, "timing benchmark needs a scenario trajectory");
  TimingBlock tb;
  tb.repetitions = repetitions;

  // warm-up plus per-scenario rotation so medians cover the test conditions
  std::size_t cursor = 0;
  auto next_step = [&]() -> const ExpertStep& {
    const ExpertStep& s = traj.steps[cursor];
    cursor = (cursor + 1) % traj.steps.size();
    return s;
  };

  {
    const ExpertStep& s = traj.steps[0];
    (void)solve_acopf(net, s.loads);
  }
  tb.t_expert_ms = median_ms(
      [&] {
        const ExpertStep& s = next_step();
        (void)solve_acopf(net, s.loads, s.prev_pg_mw);
      },
      repetitions);

  NewtonWorkspace ws(net);
  cursor = 0;
  tb.t_powerflow_ms = median_ms(
      [&] {
        const ExpertStep& s = next_step();
        (void)ws.solve(DispatchSetpoints{s.pg_mw, s.vg}, s.loads);
      },
      repetitions);

  auto traj_ptr = std::make_shared<const ExpertTrajectory>(traj);
  CmdpEnv env(net, traj_ptr, env_cfg);
  const CmdpState st = env.reset(0);
  volatile double sink = 0.0;
  tb.t_actor_ms = median_ms(
      [&] {
        const auto mu = policy.mean(st.normalized);
        sink = mu[0];
      },
      repetitions);
  (void)sink;

  tb.speedup = tb.t_expert_ms / (tb.t_powerflow_ms + tb.t_actor_ms);
  return tb;
}

std::vector<EvalReport> compare_baselines(std::vector<EvalReport> reports) {
  std::stable_sort(reports.begin(), reports.end(), [](const EvalReport& a, const EvalReport& b) {
    if (a.feas_percent != b.feas_percent) return a.feas_percent > b.feas_percent;
    return a.c_bar < b.c_bar;
  });
  return reports;
}

std::string report_to_text(const EvalReport& rep, const std::string& config_hash_hex) {
  std::ostringstream out;
  out << "# rtopf evaluation report config_hash=" << config_hash_hex << "\n";
  out << "method " << rep.method << "\n";
  out << "scenarios " << rep.rows.size() << "\n";
  out << "feas_percent " << format_double(rep.feas_percent) << "\n";
  out << "c_bar " << format_double(rep.c_bar) << "\n";
  out << "kappa_max_percent " << format_double(rep.kappa_max) << "\n";
  out << "kappa_min_percent " << format_double(rep.kappa_min) << "\n";
  out << "kappa_aver_percent " << format_double(rep.kappa_aver) << "\n";
  if (rep.timing.repetitions > 0) {
    out << "t_expert_ms " << format_double(rep.timing.t_expert_ms) << "\n";
    out << "t_powerflow_ms " << format_double(rep.timing.t_powerflow_ms) << "\n";
    out << "t_actor_ms " << format_double(rep.timing.t_actor_ms) << "\n";
    out << "speedup " << format_double(rep.timing.speedup) << "\n";
  }
  out << "# rows: index objective_agent objective_expert c_pg c_qg c_vg c_flow feasible kappa\n";
  for (const ScenarioRow& r : rep.rows) {
    out << r.index << ' ' << format_double(r.objective_agent) << ' '
        << format_double(r.objective_expert);
    for (int j = 0; j < ViolationVector::size; ++j) out << ' ' << format_double(r.cost[j]);
    out << ' ' << (r.feasible ? 1 : 0) << ' ' << format_double(r.kappa_percent) << '\n';
  }
  return out.str();
}

}  // namespace rtopf
