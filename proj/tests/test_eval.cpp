// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "env/dataset.hpp"
#include "metrics/evaluate.hpp"
#include "opf/ipm.hpp"
#include "test_paths.hpp"
#include "util/error.hpp"
#include "util/rng.hpp"

using namespace rtopf;

namespace {

ScenarioRow row_with(double c_pg, double c_qg, double c_vg, double c_flow) {
  ScenarioRow r;
  r.cost.c_pg = c_pg;
  r.cost.c_qg = c_qg;
  r.cost.c_vg = c_vg;
  r.cost.c_flow = c_flow;
  return r;
}

}  // namespace

TEST_CASE("feasibility statistics") {
  const std::vector<double> d{0.0, 0.0, 0.0, 0.0};

  SUBCASE("all feasible scenarios give (100, 0)") {
    std::vector<ScenarioRow> rows(10, row_with(0, 0, 0, 0));
    const auto [feas, cbar] = feasibility(rows, d);
    CHECK(feas == 100.0);
    CHECK(cbar == 0.0);
  }
  SUBCASE("one of four infeasible gives 75 percent") {
    std::vector<ScenarioRow> rows{row_with(0, 0, 0, 0), row_with(0, 0, 0.2, 0),
                                  row_with(0, 0, 0, 0), row_with(0, 0, 0, 0)};
    const auto [feas, cbar] = feasibility(rows, d);
    CHECK(feas == 75.0);
    CHECK(cbar == doctest::Approx(0.05).epsilon(1e-12));
  }
  SUBCASE("random violation tables match brute-force recomputation") {
    Rng rng(3);
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<ScenarioRow> rows;
      std::vector<double> limits{rng.uniform(0, 0.1), rng.uniform(0, 0.1), rng.uniform(0, 0.1),
                                 rng.uniform(0, 0.1)};
      const int n = 1 + static_cast<int>(rng.uniform_int(20));
      int feas_count = 0;
      double total = 0.0;
      for (int k = 0; k < n; ++k) {
        ScenarioRow r = row_with(rng.uniform(0, 0.2) * (rng.uniform() < 0.5),
                                 rng.uniform(0, 0.2) * (rng.uniform() < 0.5),
                                 rng.uniform(0, 0.2) * (rng.uniform() < 0.5),
                                 rng.uniform(0, 0.2) * (rng.uniform() < 0.5));
        double excess = 0.0;
        for (int j = 0; j < 4; ++j)
          excess += std::max(0.0, r.cost[j] - limits[static_cast<std::size_t>(j)]);
        if (excess == 0.0) ++feas_count;
        total += excess;
        rows.push_back(r);
      }
      const auto [feas, cbar] = feasibility(rows, limits);
      CHECK(feas == doctest::Approx(100.0 * feas_count / n).epsilon(1e-12));
      CHECK(cbar == doctest::Approx(total / n).epsilon(1e-12));
    }
  }
  SUBCASE("full feasibility implies zero average cost") {
    Rng rng(7);
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<ScenarioRow> rows(5, row_with(0, 0, 0, 0));
      const auto [feas, cbar] = feasibility(rows, d);
      if (feas == 100.0) CHECK(cbar == 0.0);
    }
  }
}

TEST_CASE("optimality gap statistics") {
  SUBCASE("agent equal to expert is identically zero") {
    const std::vector<double> obj{100.0, 200.0, 50.0};
    const KappaStats ks = optimality_gap(obj, obj);
    CHECK(ks.max == 0.0);
    CHECK(ks.min == 0.0);
    CHECK(ks.aver == 0.0);
  }
  SUBCASE("a 0.5 percent premium reads as 0.5") {
    const std::vector<double> expert{1000.0};
    const std::vector<double> agent{1005.0};
    const KappaStats ks = optimality_gap(agent, expert);
    CHECK(ks.aver == doctest::Approx(0.5).epsilon(1e-12));
  }
  SUBCASE("statistics match direct recomputation") {
    Rng rng(11);
    std::vector<double> agent, expert;
    double mx = -1e300, mn = 1e300, acc = 0.0;
    for (int k = 0; k < 50; ++k) {
      const double e = rng.uniform(100.0, 5000.0);
      const double a = e * rng.uniform(0.99, 1.05);
      agent.push_back(a);
      expert.push_back(e);
      const double kap = 100.0 * (a - e) / e;
      mx = std::max(mx, kap);
      mn = std::min(mn, kap);
      acc += kap;
    }
    const KappaStats ks = optimality_gap(agent, expert);
    CHECK(ks.max == doctest::Approx(mx).epsilon(1e-12));
    CHECK(ks.min == doctest::Approx(mn).epsilon(1e-12));
    CHECK(ks.aver == doctest::Approx(acc / 50).epsilon(1e-12));
  }
  SUBCASE("non-positive expert objectives are rejected") {
    CHECK_THROWS_AS(optimality_gap({1.0}, {0.0}), Error);
  }
}

TEST_CASE("speedup arithmetic and measured timing") {
  SUBCASE("synthetic times give the textbook ratio") {
    TimingBlock tb;
    tb.t_expert_ms = 1000.0;
    tb.t_powerflow_ms = 10.0;
    tb.t_actor_ms = 1.0;
    tb.speedup = tb.t_expert_ms / (tb.t_powerflow_ms + tb.t_actor_ms);
    CHECK(tb.speedup == doctest::Approx(90.909).epsilon(1e-3));
  }
  SUBCASE("measured components are positive and the actor is fastest") {
    const Network net = parse_case(test_path("data/ieee9.case"));
    DatasetConfig dc;
    dc.horizon = 8;
    dc.seed = 3;
    const LoadScenario scen = generate_dataset(net, dc);
    std::vector<LoadState> steps;
    for (int t = 0; t < scen.horizon(); ++t) steps.push_back(scen.loads_at(net, t));
    const ExpertTrajectory traj = generate_expert_trajectory(net, steps);
    Rng rng(1);
    const nn::GaussianPolicy pol = nn::GaussianPolicy::make(13, 6, {64, 64}, -2.0, rng);
    const TimingBlock tb = timing_benchmark(net, traj, EnvConfig{}, pol, 30);
    CHECK(tb.t_expert_ms > 0.0);
    CHECK(tb.t_powerflow_ms > 0.0);
    CHECK(tb.t_actor_ms > 0.0);
    CHECK(tb.t_actor_ms < tb.t_powerflow_ms);
    CHECK(tb.speedup ==
          doctest::Approx(tb.t_expert_ms / (tb.t_powerflow_ms + tb.t_actor_ms)).epsilon(1e-12));
  }
}

TEST_CASE("deterministic evaluation and baseline ranking") {
  const Network net = parse_case(test_path("data/ieee9.case"));
  DatasetConfig dc;
  dc.horizon = 12;
  dc.seed = 9;
  const LoadScenario scen = generate_dataset(net, dc);
  std::vector<LoadState> steps;
  for (int t = 0; t < scen.horizon(); ++t) steps.push_back(scen.loads_at(net, t));
  auto traj = std::make_shared<const ExpertTrajectory>(generate_expert_trajectory(net, steps));
  Rng rng(2);
  nn::GaussianPolicy pol = nn::GaussianPolicy::make(13, 6, {32}, -2.0, rng);
  const std::vector<double> d{0, 0, 0, 0};

  SUBCASE("repeated evaluation of one checkpoint is identical") {
    const EvalReport a = evaluate_policy("m", net, traj, EnvConfig{}, pol, d);
    const EvalReport b = evaluate_policy("m", net, traj, EnvConfig{}, pol, d);
    CHECK(a.feas_percent == b.feas_percent);
    CHECK(a.c_bar == b.c_bar);
    CHECK(a.kappa_aver == b.kappa_aver);
    REQUIRE(a.rows.size() == b.rows.size());
    for (std::size_t k = 0; k < a.rows.size(); ++k)
      CHECK(a.rows[k].objective_agent == b.rows[k].objective_agent);
  }
  SUBCASE("an expert-replaying policy scores a near-zero gap") {
    // evaluate through rows built from the expert itself
    EvalReport rep;
    for (int t = 0; t < traj->horizon; ++t) {
      ScenarioRow r;
      r.objective_agent = traj->steps[static_cast<std::size_t>(t)].objective;
      r.objective_expert = traj->steps[static_cast<std::size_t>(t)].objective;
      r.feasible = true;
      rep.rows.push_back(r);
    }
    std::vector<double> agent, expert;
    for (const auto& r : rep.rows) {
      agent.push_back(r.objective_agent);
      expert.push_back(r.objective_expert);
    }
    const KappaStats ks = optimality_gap(agent, expert);
    CHECK(std::abs(ks.aver) < 1e-12);
  }
  SUBCASE("a constructed loser ranks last") {
    EvalReport good;
    good.method = "good";
    good.feas_percent = 100.0;
    good.c_bar = 0.0;
    EvalReport mid;
    mid.method = "mid";
    mid.feas_percent = 100.0;
    mid.c_bar = 0.01;
    EvalReport bad;
    bad.method = "bad";
    bad.feas_percent = 40.0;
    bad.c_bar = 0.5;
    const auto ranked = compare_baselines({mid, bad, good});
    CHECK(ranked[0].method == "good");
    CHECK(ranked[1].method == "mid");
    CHECK(ranked[2].method == "bad");
  }
  SUBCASE("identical reports stay tied in order") {
    EvalReport a;
    a.method = "first";
    a.feas_percent = 90.0;
    EvalReport b = a;
    b.method = "second";
    const auto ranked = compare_baselines({a, b});
    CHECK(ranked[0].method == "first");
    CHECK(ranked[1].method == "second");
  }
}
