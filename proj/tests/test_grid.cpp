// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <complex>

#include "grid/network.hpp"
#include "test_paths.hpp"
#include "util/error.hpp"

using namespace rtopf;

TEST_CASE("bundled case files parse to the documented shapes") {
  const Network n9 = parse_case(test_path("data/ieee9.case"));
  CHECK(n9.n_bus() == 9);
  CHECK(n9.n_branch() == 9);
  CHECK(n9.n_gen() == 3);
  CHECK(n9.total_pd() == doctest::Approx(315.0));

  const Network n30 = parse_case(test_path("data/ieee30.case"));
  CHECK(n30.n_bus() == 30);
  CHECK(n30.n_branch() == 41);
  CHECK(n30.n_gen() == 6);
  CHECK(static_cast<int>(n30.load_buses.size()) == 20);
}

TEST_CASE("parser reports schema violations with field paths") {
  const json base = load_json(test_path("data/ieee9.case"));

  SUBCASE("two slack buses") {
    json bad = base;
    bad["buses"][1]["kind"] = "slack";
    CHECK_THROWS_WITH_AS(parse_case_json(bad), doctest::Contains("multiple slack"), Error);
  }
  SUBCASE("missing slack") {
    json bad = base;
    bad["buses"][0]["kind"] = "pv";
    CHECK_THROWS_WITH_AS(parse_case_json(bad), doctest::Contains("missing slack"), Error);
  }
  SUBCASE("duplicate bus id") {
    json bad = base;
    bad["buses"][3]["id"] = 2;
    CHECK_THROWS_WITH_AS(parse_case_json(bad), doctest::Contains("duplicate bus id"), Error);
  }
  SUBCASE("unknown branch endpoint") {
    json bad = base;
    bad["branches"][0]["to"] = 77;
    CHECK_THROWS_WITH_AS(parse_case_json(bad), doctest::Contains("branches[0].to"), Error);
  }
  SUBCASE("off-nominal tap rejected") {
    json bad = base;
    bad["branches"][2]["tap"] = 0.95;
    CHECK_THROWS_WITH_AS(parse_case_json(bad), doctest::Contains("tap"), Error);
  }
  SUBCASE("voltage band") {
    json bad = base;
    bad["buses"][4]["vmin"] = 1.2;
    CHECK_THROWS_AS(parse_case_json(bad), Error);
  }
  SUBCASE("gencost count mismatch") {
    json bad = base;
    bad["gencosts"].erase(2);
    CHECK_THROWS_WITH_AS(parse_case_json(bad), doctest::Contains("gencosts"), Error);
  }
}

TEST_CASE("ramp limits default to a quarter of the dispatchable range") {
  const Network net = parse_case(test_path("data/ieee9.case"));
  for (const Generator& g : net.generators) {
    CHECK(g.r_up == doctest::Approx(0.25 * (g.pmax - g.pmin)));
    CHECK(g.r_down == doctest::Approx(0.25 * (g.pmax - g.pmin)));
  }
}

TEST_CASE("two-bus ybus from a single reactance branch") {
  json j;
  j["base_mva"] = 100.0;
  j["buses"] = {{{"id", 1}, {"kind", "slack"}, {"pd", 0.0}, {"qd", 0.0}, {"vmin", 0.9}, {"vmax", 1.1}},
                {{"id", 2}, {"kind", "pq"}, {"pd", 0.0}, {"qd", 0.0}, {"vmin", 0.9}, {"vmax", 1.1}}};
  j["branches"] = {{{"from", 1}, {"to", 2}, {"r", 0.0}, {"x", 0.1}}};
  j["generators"] = {{{"bus", 1}, {"pmin", 0.0}, {"pmax", 100.0}, {"qmin", -100.0}, {"qmax", 100.0}}};
  j["gencosts"] = {{{"c2", 0.0}, {"c1", 1.0}, {"c0", 0.0}}};
  const Network net = parse_case_json(j);
  const Eigen::MatrixXcd y = build_ybus(net);
  CHECK(y(0, 0) == std::complex<double>(0.0, -10.0));
  CHECK(y(1, 1) == std::complex<double>(0.0, -10.0));
  CHECK(y(0, 1) == std::complex<double>(0.0, 10.0));
  CHECK(y(1, 0) == std::complex<double>(0.0, 10.0));
}

TEST_CASE("out-of-service branch contributes nothing") {
  Network net = parse_case(test_path("data/ieee9.case"));
  Network without = net;
  without.branches.erase(without.branches.begin() + 3);
  net.branches[3].in_service = false;
  CHECK(build_ybus(net).isApprox(build_ybus(without), 0.0));
}

TEST_CASE("case9 ybus matches the reference builder entrywise") {
  const Network net = parse_case(test_path("data/ieee9.case"));
  const json golden = load_json(test_path("tests/golden/ieee9.golden.json"));
  const Eigen::MatrixXcd y = build_ybus(net);
  const auto& re = golden["ybus"]["re"];
  const auto& im = golden["ybus"]["im"];
  for (int i = 0; i < net.n_bus(); ++i)
    for (int j = 0; j < net.n_bus(); ++j) {
      CHECK(std::abs(y(i, j).real() - re[i][j].get<double>()) < 1e-12);
      CHECK(std::abs(y(i, j).imag() - im[i][j].get<double>()) < 1e-12);
    }
}

TEST_CASE("rows without line charging or shunts sum to zero") {
  const Network net = parse_case(test_path("data/ieee9.case"));
  Network bare = net;
  for (Branch& br : bare.branches) br.b_ch = 0.0;
  for (Bus& b : bare.buses) {
    b.gsh = 0.0;
    b.bsh = 0.0;
  }
  const Eigen::MatrixXcd y = build_ybus(bare);
  for (int i = 0; i < bare.n_bus(); ++i) {
    std::complex<double> row_sum = 0.0;
    for (int j = 0; j < bare.n_bus(); ++j) row_sum += y(i, j);
    CHECK(std::abs(row_sum) < 1e-12);
  }
}

TEST_CASE("removing a branch changes exactly four ybus entries") {
  const Network net = parse_case(test_path("data/ieee30.case"));
  const Eigen::MatrixXcd y0 = build_ybus(net);
  for (int k : {0, 10, 40}) {
    Network cut = net;
    cut.branches[static_cast<std::size_t>(k)].in_service = false;
    const Eigen::MatrixXcd y1 = build_ybus(cut);
    int changed = 0;
    for (int i = 0; i < net.n_bus(); ++i)
      for (int j = 0; j < net.n_bus(); ++j)
        if (std::abs(y0(i, j) - y1(i, j)) > 1e-15) ++changed;
    CHECK(changed == 4);
  }
}

TEST_CASE("parse -> serialize -> parse round-trips the network") {
  const Network net = parse_case(test_path("data/ieee30.case"));
  const std::string tmp = test_tmpdir() + "/roundtrip.case";
  save_case(net, tmp);
  const Network again = parse_case(tmp);
  CHECK(case_to_json(net) == case_to_json(again));
}

TEST_CASE("outage application and islanding detection") {
  const Network net = parse_case(test_path("data/ieee9.case"));
  SUBCASE("empty outage keeps the network identical") {
    const Network same = apply_outage(net, {});
    CHECK(case_to_json(same) == case_to_json(net));
  }
  SUBCASE("isolating a bus is rejected") {
    // branch 0 is the only line at bus 1
    CHECK_THROWS_WITH_AS(apply_outage(net, {0}), doctest::Contains("splits"), Error);
  }
  SUBCASE("a loop branch can be dropped") {
    const Network cut = apply_outage(net, {1});
    CHECK(is_connected(cut));
    CHECK_FALSE(cut.branches[1].in_service);
  }
}
