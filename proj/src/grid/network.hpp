// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "util/fileio.hpp"

namespace rtopf {

enum class BusKind { slack, pv, pq };

struct Bus {
  int id = 0;
  BusKind kind = BusKind::pq;
  double pd = 0.0;    // MW
  double qd = 0.0;    // MVAr
  double vmin = 0.9;  // pu
  double vmax = 1.1;  // pu
  double gsh = 0.0;   // pu
  double bsh = 0.0;   // pu
};

struct Branch {
  int from = 0;
  int to = 0;
  double r = 0.0;      // pu
  double x = 0.0;      // pu
  double b_ch = 0.0;   // pu, total line charging
  double smax = 0.0;   // MVA; 0 disables the flow limit
  double tap = 0.0;    // reserved; parser accepts only 0 or 1 (nominal)
  bool in_service = true;
};

struct Generator {
  int bus = 0;
  double pmin = 0.0;    // MW
  double pmax = 0.0;    // MW
  double qmin = 0.0;    // MVAr
  double qmax = 0.0;    // MVAr
  double r_up = 0.0;    // MW per dispatch interval
  double r_down = 0.0;  // MW per dispatch interval
  double pg0 = 0.0;     // base-case active set-point (MW)
  double vg0 = 1.0;     // base-case voltage set-point (pu)
};

struct GenCost {
  double c2 = 0.0;  // $/MW^2 h
  double c1 = 0.0;  // $/MWh
  double c0 = 0.0;  // $/h
};

// Immutable electrical model. Index-based lookups are precomputed at parse
// time; treat instances as read-only after construction.
struct Network {
  std::string name;
  double base_mva = 100.0;
  std::vector<Bus> buses;
  std::vector<Branch> branches;
  std::vector<Generator> generators;
  std::vector<GenCost> gencosts;

  // derived at construction
  int slack = -1;                       // position in buses
  std::vector<int> gen_bus;             // generator -> bus position
  std::vector<int> load_buses;          // positions with nonzero net load
  std::vector<int> bus_pos_by_id;       // external id -> position (-1 if absent)

  int n_bus() const { return static_cast<int>(buses.size()); }
  int n_branch() const { return static_cast<int>(branches.size()); }
  int n_gen() const { return static_cast<int>(generators.size()); }

  int bus_pos(int id) const;
  int slack_gen() const;  // generator index at the slack bus

  double total_pd() const;
  double gen_cost(int g, double pg_mw) const {
    const GenCost& c = gencosts[static_cast<std::size_t>(g)];
    return c.c2 * pg_mw * pg_mw + c.c1 * pg_mw + c.c0;
  }

  void rebuild_index();  // fills derived members, validates invariants
};

Network parse_case(const std::string& path);
Network parse_case_json(const json& j);
json case_to_json(const Network& net);
void save_case(const Network& net, const std::string& path);

// Dense per-unit bus admittance matrix. Off-diagonal (i,j) carries -y_ij for
// each in-service branch; diagonals accumulate series terms, half the line
// charging at each end, and bus shunts.
Eigen::MatrixXcd build_ybus(const Network& net);

// Copy of the network with the listed branch positions switched out of
// service. Throws if the remaining in-service graph is disconnected.
Network apply_outage(const Network& net, const std::vector<int>& branch_positions);

bool is_connected(const Network& net);

}  // namespace rtopf
