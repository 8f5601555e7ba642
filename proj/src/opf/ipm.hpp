// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <vector>

#include <Eigen/Core>

#include "grid/network.hpp"
#include "pf/newton.hpp"

namespace rtopf {

enum class OpfStatus { ok, max_iterations, singular_kkt, stalled };

struct OpfWarmStart {
  Eigen::VectorXd vm, va;          // per bus
  std::vector<double> pg_mw, qg_mvar;  // per generator
};

struct OpfOptions {
  double tol_primal = 1e-9;  // pu infeasibility
  double tol_dual = 1e-6;    // scaled dual residual
  double tol_mu = 1e-9;      // duality measure
  int max_iter = 200;
  double sigma = 0.1;        // fixed centering
  double tau = 0.995;        // fraction-to-boundary
  std::optional<OpfWarmStart> warm;
};

struct OpfSolution {
  std::vector<double> pg_mw;    // optimal active set-points (slack included)
  std::vector<double> vg;       // optimal voltage set-points per generator
  std::vector<double> qg_mvar;  // reactive output at the optimum
  Eigen::VectorXd vm, va;       // full voltage profile
  double objective = 0.0;       // $/h
  bool feasible = false;
  int iterations = 0;
  double kkt_residual = 0.0;
  OpfStatus status = OpfStatus::ok;
  std::vector<double> mu_path;  // duality measure per accepted iterate
};

// Primal-dual interior-point AC OPF on the polar formulation. Variables
// (va, vm, pg, qg); power-balance equalities; slacked inequalities for
// generator/voltage/flow limits and, when prev_pg_mw is given, the ramp box.
// First derivatives are analytic; the Lagrangian Hessian is approximated by
// the objective curvature plus an adaptive diagonal.
OpfSolution solve_acopf(const Network& net, const LoadState& loads,
                        const std::optional<std::vector<double>>& prev_pg_mw = std::nullopt,
                        const OpfOptions& opt = {});

}  // namespace rtopf
