// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "grid/network.hpp"
#include "pf/newton.hpp"
#include "test_paths.hpp"
#include "util/error.hpp"
#include "util/rng.hpp"

using namespace rtopf;

namespace {

Network two_bus(double x = 0.1) {
  json j;
  j["base_mva"] = 100.0;
  j["buses"] = {{{"id", 1}, {"kind", "slack"}, {"pd", 0.0}, {"qd", 0.0}, {"vmin", 0.5}, {"vmax", 1.5}},
                {{"id", 2}, {"kind", "pq"}, {"pd", 50.0}, {"qd", 0.0}, {"vmin", 0.5}, {"vmax", 1.5}}};
  j["branches"] = {{{"from", 1}, {"to", 2}, {"r", 0.0}, {"x", x}, {"smax", 0.0}}};
  j["generators"] = {{{"bus", 1}, {"pmin", 0.0}, {"pmax", 500.0}, {"qmin", -500.0}, {"qmax", 500.0}}};
  j["gencosts"] = {{{"c2", 0.0}, {"c1", 1.0}, {"c0", 0.0}}};
  return parse_case_json(j);
}

DispatchSetpoints base_setpoints(const Network& net, double vg) {
  DispatchSetpoints sp;
  for (const Generator& g : net.generators) {
    sp.pg_mw.push_back(g.pg0);
    sp.vg.push_back(vg);
  }
  return sp;
}

}  // namespace

TEST_CASE("flat no-load state solves to the trivial fixed point") {
  Network net = parse_case(test_path("data/ieee9.case"));
  LoadState ls = LoadState::base(net);
  for (auto& v : ls.pd_mw) v = 0.0;
  for (auto& v : ls.qd_mvar) v = 0.0;
  Network bare = net;
  for (Branch& br : bare.branches) br.b_ch = 0.0;
  DispatchSetpoints idle;
  for (int g = 0; g < bare.n_gen(); ++g) {
    idle.pg_mw.push_back(0.0);
    idle.vg.push_back(1.0);
  }
  const PowerFlowSolution sol = solve_nr(bare, idle, ls);
  REQUIRE(sol.converged);
  for (int i = 0; i < bare.n_bus(); ++i) {
    CHECK(sol.vm(i) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(std::abs(sol.va(i)) < 1e-10);
  }
  for (const auto& f : sol.flow_from_mva) CHECK(std::abs(f) < 1e-8);
}

TEST_CASE("case9 newton solution matches the reference solver") {
  const Network net = parse_case(test_path("data/ieee9.case"));
  const json golden = load_json(test_path("tests/golden/ieee9.golden.json"));

  SUBCASE("flat voltage set-points") {
    const json& g = golden["pf_flat"];
    const PowerFlowSolution sol = solve_nr(net, base_setpoints(net, 1.0), LoadState::base(net));
    REQUIRE(sol.converged);
    CHECK(sol.iterations <= 5);
    CHECK(sol.pg_solved_mw[net.slack_gen()] ==
          doctest::Approx(g["slack_pg_mw"].get<double>()).epsilon(1e-9));
    // the classic flat-voltage dispatch: the slack picks up about 71.95 MW
    CHECK(sol.pg_solved_mw[net.slack_gen()] == doctest::Approx(71.95).epsilon(1e-3));
    for (int i = 0; i < net.n_bus(); ++i)
      CHECK(std::abs(sol.vm(i) - g["vm"][i].get<double>()) < 1e-6);
  }
  SUBCASE("classic generator set-points") {
    const json& g = golden["pf_base"];
    DispatchSetpoints sp;
    for (const Generator& gen : net.generators) {
      sp.pg_mw.push_back(gen.pg0);
      sp.vg.push_back(gen.vg0);
    }
    const PowerFlowSolution sol = solve_nr(net, sp, LoadState::base(net));
    REQUIRE(sol.converged);
    CHECK(sol.pg_solved_mw[net.slack_gen()] ==
          doctest::Approx(g["slack_pg_mw"].get<double>()).epsilon(1e-9));
    for (int i = 0; i < net.n_bus(); ++i)
      CHECK(std::abs(sol.vm(i) - g["vm"][i].get<double>()) < 1e-6);
    for (int k = 0; k < net.n_gen(); ++k)
      CHECK(sol.qg_mvar[static_cast<std::size_t>(k)] ==
            doctest::Approx(g["qg_mvar"][k].get<double>()).epsilon(1e-6));
  }
}

TEST_CASE("two-bus case matches the closed-form solution") {
  // lossless line, pure active load: 10 V2 sin d = -0.5 and V2 = cos d
  const Network net = two_bus();
  const PowerFlowSolution sol =
      solve_nr(net, base_setpoints(net, 1.0), LoadState::base(net), {1e-12, 30, {}, {}});
  REQUIRE(sol.converged);
  const double delta = 0.5 * std::asin(-0.1);
  CHECK(std::abs(sol.va(1) - delta) < 1e-10);
  CHECK(std::abs(sol.vm(1) - std::cos(delta)) < 1e-10);
}

TEST_CASE("mismatch residual is tiny at every converged solution") {
  const Network net = parse_case(test_path("data/ieee30.case"));
  NewtonWorkspace ws(net);
  DispatchSetpoints sp;
  for (const Generator& g : net.generators) {
    sp.pg_mw.push_back(g.pg0);
    sp.vg.push_back(g.vg0);
  }
  const PowerFlowSolution sol = ws.solve(sp, LoadState::base(net));
  REQUIRE(sol.converged);
  ws.set_operating_point(sp, LoadState::base(net));
  const Eigen::VectorXd mis = ws.mismatch(sol.vm, sol.va);
  CHECK(mis.cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("analytic jacobian matches central differences on perturbed case9 states") {
  const Network net = parse_case(test_path("data/ieee9.case"));
  NewtonWorkspace ws(net);
  DispatchSetpoints sp = base_setpoints(net, 1.0);
  ws.set_operating_point(sp, LoadState::base(net));
  Rng rng(11);
  for (int trial = 0; trial < 5; ++trial) {
    Eigen::VectorXd vm = Eigen::VectorXd::Ones(net.n_bus());
    Eigen::VectorXd va = Eigen::VectorXd::Zero(net.n_bus());
    for (int i = 0; i < net.n_bus(); ++i) {
      vm(i) += rng.uniform(-0.05, 0.05);
      if (i != net.slack) va(i) += rng.uniform(-0.2, 0.2);
    }
    const Eigen::MatrixXd jac = ws.jacobian(vm, va);
    // numeric jacobian of the mismatch in the solver's variable ordering:
    // angles at pv+pq buses, magnitudes at pq buses
    std::vector<int> pv, pq;
    std::vector<char> has_gen(static_cast<std::size_t>(net.n_bus()), 0);
    for (int gb : net.gen_bus) has_gen[static_cast<std::size_t>(gb)] = 1;
    for (int i = 0; i < net.n_bus(); ++i) {
      if (i == net.slack) continue;
      (has_gen[static_cast<std::size_t>(i)] ? pv : pq).push_back(i);
    }
    std::vector<int> rows = pv;
    rows.insert(rows.end(), pq.begin(), pq.end());
    const double h = 1e-6;
    const double scale = jac.cwiseAbs().maxCoeff();
    for (std::size_t c = 0; c < rows.size() + pq.size(); ++c) {
      Eigen::VectorXd vm_p = vm, vm_m = vm, va_p = va, va_m = va;
      if (c < rows.size()) {
        va_p(rows[c]) += h;
        va_m(rows[c]) -= h;
      } else {
        vm_p(pq[c - rows.size()]) += h;
        vm_m(pq[c - rows.size()]) -= h;
      }
      const Eigen::VectorXd col =
          (ws.mismatch(vm_p, va_p) - ws.mismatch(vm_m, va_m)) / (2.0 * h);
      // mismatch = scheduled - calculated, so the jacobian of the calculated
      // injections carries the opposite sign
      for (int r = 0; r < col.size(); ++r)
        CHECK(std::abs(-col(r) - jac(r, static_cast<int>(c))) / scale < 1e-6);
    }
  }
}

TEST_CASE("branch flows balance at every bus and respect orientation") {
  const Network net = parse_case(test_path("data/ieee9.case"));
  const PowerFlowSolution sol = solve_nr(net, base_setpoints(net, 1.0), LoadState::base(net));
  REQUIRE(sol.converged);

  SUBCASE("power balance at every bus") {
    const LoadState ls = LoadState::base(net);
    for (int i = 0; i < net.n_bus(); ++i) {
      std::complex<double> acc = 0.0;
      for (int k = 0; k < net.n_branch(); ++k) {
        if (net.bus_pos(net.branches[static_cast<std::size_t>(k)].from) == i)
          acc += sol.flow_from_mva[static_cast<std::size_t>(k)];
        if (net.bus_pos(net.branches[static_cast<std::size_t>(k)].to) == i)
          acc += sol.flow_to_mva[static_cast<std::size_t>(k)];
      }
      const Bus& bus = net.buses[static_cast<std::size_t>(i)];
      std::complex<double> inj(-ls.pd_mw[static_cast<std::size_t>(i)], -ls.qd_mvar[static_cast<std::size_t>(i)]);
      for (int g = 0; g < net.n_gen(); ++g)
        if (net.gen_bus[static_cast<std::size_t>(g)] == i)
          inj += std::complex<double>(sol.pg_solved_mw[static_cast<std::size_t>(g)],
                                      sol.qg_mvar[static_cast<std::size_t>(g)]);
      const std::complex<double> shunt =
          std::conj(std::complex<double>(bus.gsh, bus.bsh)) * sol.vm(i) * sol.vm(i) * net.base_mva;
      CHECK(std::abs(inj - shunt - acc) / net.base_mva < 1e-8);
    }
  }
  SUBCASE("case9 flows match the reference-consistent state") {
    // the reference voltages pin the flows; recompute from golden voltages
    const json golden = load_json(test_path("tests/golden/ieee9.golden.json"));
    PowerFlowSolution ref = sol;
    for (int i = 0; i < net.n_bus(); ++i) {
      ref.vm(i) = golden["pf_flat"]["vm"][i].get<double>();
      ref.va(i) = golden["pf_flat"]["va"][i].get<double>();
    }
    branch_flows(net, ref);
    for (int k = 0; k < net.n_branch(); ++k)
      CHECK(std::abs(ref.flow_from_mva[static_cast<std::size_t>(k)] -
                     sol.flow_from_mva[static_cast<std::size_t>(k)]) < 1e-6);
  }
  SUBCASE("reversing a lossless branch swaps the end flows, which negate each other") {
    Network rev = two_bus();
    const PowerFlowSolution fwd =
        solve_nr(rev, base_setpoints(rev, 1.0), LoadState::base(rev));
    std::swap(rev.branches[0].from, rev.branches[0].to);
    rev.rebuild_index();
    const PowerFlowSolution bwd =
        solve_nr(rev, base_setpoints(rev, 1.0), LoadState::base(rev));
    REQUIRE(fwd.converged);
    REQUIRE(bwd.converged);
    // each physical end keeps its injection, so the labels swap
    CHECK(std::abs(fwd.flow_from_mva[0] - bwd.flow_to_mva[0]) < 1e-8);
    CHECK(std::abs(fwd.flow_to_mva[0] - bwd.flow_from_mva[0]) < 1e-8);
    // and with r = 0 the active flow entering one end leaves the other
    CHECK(std::abs(fwd.flow_from_mva[0].real() + fwd.flow_to_mva[0].real()) < 1e-8);
  }
  SUBCASE("non-converged solution is a usage error") {
    PowerFlowSolution bad = sol;
    bad.converged = false;
    CHECK_THROWS_AS(branch_flows(net, bad), Error);
    CHECK_THROWS_AS(violations(net, bad), Error);
  }
}

TEST_CASE("non-convergence is reported, not thrown") {
  // absurd load far beyond the line's transfer capability
  Network net = two_bus(1.0);
  net.buses[1].pd = 500.0;
  const PowerFlowSolution sol = solve_nr(net, base_setpoints(net, 1.0), LoadState::base(net));
  CHECK_FALSE(sol.converged);
  CHECK(sol.max_mismatch > 0.0);
}

TEST_CASE("violation vector arithmetic") {
  const Network net = parse_case(test_path("data/ieee9.case"));
  PowerFlowSolution sol = solve_nr(net, base_setpoints(net, 1.0), LoadState::base(net));
  REQUIRE(sol.converged);

  SUBCASE("strictly interior point has zero violations") {
    const ViolationVector v = violations(net, sol);
    CHECK(v.sum() == 0.0);
  }
  SUBCASE("single reactive excess of 10 MVAr costs 0.1 pu") {
    PowerFlowSolution mod = sol;
    mod.qg_mvar[1] = net.generators[1].qmax + 10.0;
    const ViolationVector v = violations(net, mod);
    CHECK(v.c_qg == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(v.c_pg == 0.0);
    CHECK(v.c_vg == 0.0);
    CHECK(v.c_flow == 0.0);
  }
  SUBCASE("voltage violations sum per-bus excesses") {
    Network tight = net;
    for (int i = 0; i < tight.n_bus(); ++i) tight.buses[static_cast<std::size_t>(i)].vmax = 1.0;
    DispatchSetpoints sp = base_setpoints(tight, 1.02);
    const PowerFlowSolution hot = solve_nr(tight, sp, LoadState::base(tight));
    REQUIRE(hot.converged);
    const ViolationVector v = violations(tight, hot);
    double expected = 0.0;
    for (int i = 0; i < tight.n_bus(); ++i)
      expected += std::max(0.0, hot.vm(i) - 1.0) + std::max(0.0, 0.9 - hot.vm(i));
    CHECK(v.c_vg == doctest::Approx(expected).epsilon(1e-12));
    CHECK(v.c_vg > 0.0);
  }
  SUBCASE("tightening a limit never decreases its component") {
    Rng rng(5);
    for (int trial = 0; trial < 20; ++trial) {
      Network tight = net;
      const double shrink = rng.uniform(0.0, 0.5);
      for (Branch& br : tight.branches) br.smax *= (1.0 - shrink);
      for (Bus& b : tight.buses) b.vmax = 1.0 + (b.vmax - 1.0) * (1.0 - shrink);
      for (Generator& g : tight.generators) g.qmax *= (1.0 - shrink);
      const ViolationVector v0 = violations(net, sol);
      const ViolationVector v1 = violations(tight, sol);
      CHECK(v1.c_flow >= v0.c_flow);
      CHECK(v1.c_vg >= v0.c_vg);
      CHECK(v1.c_qg >= v0.c_qg);
    }
  }
}
