// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "grid/network.hpp"

namespace rtopf {

struct DispatchSetpoints {
  std::vector<double> pg_mw;  // one per generator; the slack entry is ignored
  std::vector<double> vg;     // voltage set-point per generator bus (pu)
};

struct LoadState {
  std::vector<double> pd_mw;    // per bus
  std::vector<double> qd_mvar;  // per bus

  static LoadState base(const Network& net);
};

struct PowerFlowSolution {
  Eigen::VectorXd vm;                 // pu, per bus
  Eigen::VectorXd va;                 // rad, per bus (slack fixed at 0)
  std::vector<double> qg_mvar;        // per generator
  std::vector<double> pg_solved_mw;   // per generator, slack re-dispatched
  std::vector<std::complex<double>> flow_from_mva;
  std::vector<std::complex<double>> flow_to_mva;
  bool converged = false;
  int iterations = 0;
  double max_mismatch = 0.0;  // pu
};

struct ViolationVector {
  double c_pg = 0.0;
  double c_qg = 0.0;
  double c_vg = 0.0;
  double c_flow = 0.0;

  double sum() const { return c_pg + c_qg + c_vg + c_flow; }
  double operator[](int i) const {
    switch (i) {
      case 0: return c_pg;
      case 1: return c_qg;
      case 2: return c_vg;
      default: return c_flow;
    }
  }
  static constexpr int size = 4;
};

struct NewtonOptions {
  double tol = 1e-8;  // pu mismatch
  int max_iter = 20;
  // warm start; both must be sized n_bus when present
  std::optional<Eigen::VectorXd> vm0;
  std::optional<Eigen::VectorXd> va0;
};

// Polar Newton-Raphson workspace. One instance per worker; not thread-safe,
// but distinct instances on a shared immutable Network are.
class NewtonWorkspace {
 public:
  explicit NewtonWorkspace(const Network& net);

  PowerFlowSolution solve(const DispatchSetpoints& sp, const LoadState& loads,
                          const NewtonOptions& opt = {});

  // Exposed for the finite-difference Jacobian check: mismatch vector
  // [dP(pv+pq); dQ(pq)] and its analytic Jacobian at the given state.
  void set_operating_point(const DispatchSetpoints& sp, const LoadState& loads);
  Eigen::VectorXd mismatch(const Eigen::VectorXd& vm, const Eigen::VectorXd& va) const;
  Eigen::MatrixXd jacobian(const Eigen::VectorXd& vm, const Eigen::VectorXd& va) const;

  const Eigen::MatrixXcd& ybus() const { return ybus_; }
  const Network& net() const { return net_; }

 private:
  void compute_injections(const Eigen::VectorXd& vm, const Eigen::VectorXd& va,
                          Eigen::VectorXd& p, Eigen::VectorXd& q) const;

  const Network& net_;
  Eigen::MatrixXcd ybus_;
  std::vector<int> pv_, pq_, rows_p_;  // bus positions
  Eigen::VectorXd psched_, qsched_;    // pu, valid after set_operating_point
  Eigen::VectorXd vset_;               // per-bus voltage set-points at gen buses
};

PowerFlowSolution solve_nr(const Network& net, const DispatchSetpoints& sp, const LoadState& loads,
                           const NewtonOptions& opt = {});

// Recomputes branch terminal flows (MVA) from a converged solution. Also used
// by solve_nr to fill the solution's flow fields.
void branch_flows(const Network& net, PowerFlowSolution& sol);

// Aggregate per-unit limit violations of a converged solved state.
ViolationVector violations(const Network& net, const PowerFlowSolution& sol);

}  // namespace rtopf
