// SPDX-License-Identifier: Apache-2.0
#include "pf/newton.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "util/error.hpp"

namespace rtopf {

LoadState LoadState::base(const Network& net) {
  LoadState ls;
  ls.pd_mw.reserve(net.buses.size());
  ls.qd_mvar.reserve(net.buses.size());
  for (const Bus& b : net.buses) {
    ls.pd_mw.push_back(b.pd);
    ls.qd_mvar.push_back(b.qd);
  }
  return ls;
}

NewtonWorkspace::NewtonWorkspace(const Network& net) : net_(net), ybus_(build_ybus(net)) {
  const int n = net.n_bus();
  std::vector<char> has_gen(static_cast<std::size_t>(n), 0);
  for (int gb : net.gen_bus) has_gen[static_cast<std::size_t>(gb)] = 1;
  for (int i = 0; i < n; ++i) {
    if (i == net.slack) continue;
    if (has_gen[static_cast<std::size_t>(i)])
      pv_.push_back(i);
    else
      pq_.push_back(i);
  }
  rows_p_ = pv_;
  rows_p_.insert(rows_p_.end(), pq_.begin(), pq_.end());
  psched_ = Eigen::VectorXd::Zero(n);
  qsched_ = Eigen::VectorXd::Zero(n);
  vset_ = Eigen::VectorXd::Ones(n);
}

void NewtonWorkspace::set_operating_point(const DispatchSetpoints& sp, const LoadState& loads) {
  const int n = net_.n_bus();
  const int ng = net_.n_gen();
  if (static_cast<int>(sp.pg_mw.size()) != ng || static_cast<int>(sp.vg.size()) != ng)
    fail(Errc::usage, "setpoint vectors must have one entry per generator");
  if (static_cast<int>(loads.pd_mw.size()) != n || static_cast<int>(loads.qd_mvar.size()) != n)
    fail(Errc::usage, "load vectors must have one entry per bus");

  psched_.setZero();
  qsched_.setZero();
  vset_.setOnes();
  for (int g = 0; g < ng; ++g) {
    const int b = net_.gen_bus[static_cast<std::size_t>(g)];
    if (b != net_.slack) psched_(b) += sp.pg_mw[static_cast<std::size_t>(g)] / net_.base_mva;
    vset_(b) = sp.vg[static_cast<std::size_t>(g)];
  }
  for (int i = 0; i < n; ++i) {
    psched_(i) -= loads.pd_mw[static_cast<std::size_t>(i)] / net_.base_mva;
    qsched_(i) -= loads.qd_mvar[static_cast<std::size_t>(i)] / net_.base_mva;
  }
}

void NewtonWorkspace::compute_injections(const Eigen::VectorXd& vm, const Eigen::VectorXd& va,
                                         Eigen::VectorXd& p, Eigen::VectorXd& q) const {
  const int n = net_.n_bus();
  p.setZero(n);
  q.setZero(n);
  for (int i = 0; i < n; ++i) {
    double pi = 0.0, qi = 0.0;
    for (int j = 0; j < n; ++j) {
      const std::complex<double> y = ybus_(i, j);
      if (y == std::complex<double>(0.0, 0.0)) continue;
      const double d = va(i) - va(j);
      const double c = std::cos(d), s = std::sin(d);
      pi += vm(j) * (y.real() * c + y.imag() * s);
      qi += vm(j) * (y.real() * s - y.imag() * c);
    }
    p(i) = vm(i) * pi;
    q(i) = vm(i) * qi;
  }
}

Eigen::VectorXd NewtonWorkspace::mismatch(const Eigen::VectorXd& vm, const Eigen::VectorXd& va) const {
  Eigen::VectorXd p, q;
  compute_injections(vm, va, p, q);
  const int np = static_cast<int>(rows_p_.size());
  const int nq = static_cast<int>(pq_.size());
  Eigen::VectorXd m(np + nq);
  for (int k = 0; k < np; ++k) m(k) = psched_(rows_p_[static_cast<std::size_t>(k)]) - p(rows_p_[static_cast<std::size_t>(k)]);
  for (int k = 0; k < nq; ++k) m(np + k) = qsched_(pq_[static_cast<std::size_t>(k)]) - q(pq_[static_cast<std::size_t>(k)]);
  return m;
}

Eigen::MatrixXd NewtonWorkspace::jacobian(const Eigen::VectorXd& vm, const Eigen::VectorXd& va) const {
  Eigen::VectorXd p, q;
  compute_injections(vm, va, p, q);
  const int np = static_cast<int>(rows_p_.size());
  const int nq = static_cast<int>(pq_.size());
  Eigen::MatrixXd jac(np + nq, np + nq);

  auto dp_dva = [&](int i, int j) {
    if (i == j) return -q(i) - vm(i) * vm(i) * ybus_(i, i).imag();
    const double d = va(i) - va(j);
    return vm(i) * vm(j) * (ybus_(i, j).real() * std::sin(d) - ybus_(i, j).imag() * std::cos(d));
  };
  auto dp_dvm = [&](int i, int j) {
    if (i == j) return p(i) / vm(i) + ybus_(i, i).real() * vm(i);
    const double d = va(i) - va(j);
    return vm(i) * (ybus_(i, j).real() * std::cos(d) + ybus_(i, j).imag() * std::sin(d));
  };
  auto dq_dva = [&](int i, int j) {
    if (i == j) return p(i) - vm(i) * vm(i) * ybus_(i, i).real();
    const double d = va(i) - va(j);
    return -vm(i) * vm(j) * (ybus_(i, j).real() * std::cos(d) + ybus_(i, j).imag() * std::sin(d));
  };
  auto dq_dvm = [&](int i, int j) {
    if (i == j) return q(i) / vm(i) - ybus_(i, i).imag() * vm(i);
    const double d = va(i) - va(j);
    return vm(i) * (ybus_(i, j).real() * std::sin(d) - ybus_(i, j).imag() * std::cos(d));
  };

  for (int r = 0; r < np; ++r) {
    const int i = rows_p_[static_cast<std::size_t>(r)];
    for (int c = 0; c < np; ++c) jac(r, c) = dp_dva(i, rows_p_[static_cast<std::size_t>(c)]);
    for (int c = 0; c < nq; ++c) jac(r, np + c) = dp_dvm(i, pq_[static_cast<std::size_t>(c)]);
  }
  for (int r = 0; r < nq; ++r) {
    const int i = pq_[static_cast<std::size_t>(r)];
    for (int c = 0; c < np; ++c) jac(np + r, c) = dq_dva(i, rows_p_[static_cast<std::size_t>(c)]);
    for (int c = 0; c < nq; ++c) jac(np + r, np + c) = dq_dvm(i, pq_[static_cast<std::size_t>(c)]);
  }
  return jac;
}

PowerFlowSolution NewtonWorkspace::solve(const DispatchSetpoints& sp, const LoadState& loads,
                                         const NewtonOptions& opt) {
  set_operating_point(sp, loads);
  const int n = net_.n_bus();

  Eigen::VectorXd vm = Eigen::VectorXd::Ones(n);
  Eigen::VectorXd va = Eigen::VectorXd::Zero(n);
  if (opt.vm0 && opt.va0) {
    vm = *opt.vm0;
    va = *opt.va0;
    va.array() -= va(net_.slack);  // keep the slack reference at zero
  }
  // generator buses hold their set-point magnitude
  for (int g = 0; g < net_.n_gen(); ++g) vm(net_.gen_bus[static_cast<std::size_t>(g)]) = vset_(net_.gen_bus[static_cast<std::size_t>(g)]);

  PowerFlowSolution sol;
  sol.converged = false;

  const int np = static_cast<int>(rows_p_.size());
  Eigen::VectorXd mis = mismatch(vm, va);
  double mmax = mis.size() ? mis.cwiseAbs().maxCoeff() : 0.0;
  int it = 0;
  while (mmax >= opt.tol && it < opt.max_iter) {
    const Eigen::MatrixXd jac = jacobian(vm, va);
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(jac);
    const Eigen::VectorXd dx = lu.solve(mis);
    if (!dx.allFinite()) break;
    for (int k = 0; k < np; ++k) va(rows_p_[static_cast<std::size_t>(k)]) += dx(k);
    for (int k = 0; k < static_cast<int>(pq_.size()); ++k) vm(pq_[static_cast<std::size_t>(k)]) += dx(np + k);
    if (vm.minCoeff() <= 0.0) break;  // collapsed voltage, hopeless iterate
    mis = mismatch(vm, va);
    if (!mis.allFinite()) break;
    mmax = mis.size() ? mis.cwiseAbs().maxCoeff() : 0.0;
    ++it;
  }

  sol.vm = vm;
  sol.va = va;
  sol.iterations = it;
  sol.max_mismatch = mmax;
  sol.converged = mmax < opt.tol;
  if (!sol.converged) return sol;

  // recover injections: slack active power and reactive output at gen buses
  Eigen::VectorXd p, q;
  compute_injections(vm, va, p, q);
  const int ng = net_.n_gen();
  sol.pg_solved_mw.assign(static_cast<std::size_t>(ng), 0.0);
  sol.qg_mvar.assign(static_cast<std::size_t>(ng), 0.0);
  std::vector<int> gens_on_bus(static_cast<std::size_t>(n), 0);
  for (int gb : net_.gen_bus) ++gens_on_bus[static_cast<std::size_t>(gb)];
  for (int g = 0; g < ng; ++g) {
    const int b = net_.gen_bus[static_cast<std::size_t>(g)];
    const double share = 1.0 / gens_on_bus[static_cast<std::size_t>(b)];
    sol.qg_mvar[static_cast<std::size_t>(g)] =
        share * (q(b) * net_.base_mva + loads.qd_mvar[static_cast<std::size_t>(b)]);
    if (b == net_.slack)
      sol.pg_solved_mw[static_cast<std::size_t>(g)] =
          share * (p(b) * net_.base_mva + loads.pd_mw[static_cast<std::size_t>(b)]);
    else
      sol.pg_solved_mw[static_cast<std::size_t>(g)] = sp.pg_mw[static_cast<std::size_t>(g)];
  }
  branch_flows(net_, sol);
  return sol;
}

PowerFlowSolution solve_nr(const Network& net, const DispatchSetpoints& sp, const LoadState& loads,
                           const NewtonOptions& opt) {
  NewtonWorkspace ws(net);
  return ws.solve(sp, loads, opt);
}

void branch_flows(const Network& net, PowerFlowSolution& sol) {
  if (!sol.converged) fail(Errc::usage, "branch_flows requires a converged solution");
  const int nl = net.n_branch();
  sol.flow_from_mva.assign(static_cast<std::size_t>(nl), {0.0, 0.0});
  sol.flow_to_mva.assign(static_cast<std::size_t>(nl), {0.0, 0.0});
  for (int k = 0; k < nl; ++k) {
    const Branch& br = net.branches[static_cast<std::size_t>(k)];
    if (!br.in_service) continue;
    const int f = net.bus_pos(br.from);
    const int t = net.bus_pos(br.to);
    const std::complex<double> ys = 1.0 / std::complex<double>(br.r, br.x);
    const std::complex<double> bc(0.0, 0.5 * br.b_ch);
    const std::complex<double> vf = std::polar(sol.vm(f), sol.va(f));
    const std::complex<double> vt = std::polar(sol.vm(t), sol.va(t));
    const std::complex<double> iff = (ys + bc) * vf - ys * vt;
    const std::complex<double> itt = (ys + bc) * vt - ys * vf;
    sol.flow_from_mva[static_cast<std::size_t>(k)] = vf * std::conj(iff) * net.base_mva;
    sol.flow_to_mva[static_cast<std::size_t>(k)] = vt * std::conj(itt) * net.base_mva;
  }
}

ViolationVector violations(const Network& net, const PowerFlowSolution& sol) {
  if (!sol.converged) fail(Errc::usage, "violations requires a converged solution");
  ViolationVector v;
  const double base = net.base_mva;
  for (int g = 0; g < net.n_gen(); ++g) {
    const Generator& gen = net.generators[static_cast<std::size_t>(g)];
    const double pg = sol.pg_solved_mw[static_cast<std::size_t>(g)];
    const double qg = sol.qg_mvar[static_cast<std::size_t>(g)];
    v.c_pg += (std::max(0.0, pg - gen.pmax) + std::max(0.0, gen.pmin - pg)) / base;
    v.c_qg += (std::max(0.0, qg - gen.qmax) + std::max(0.0, gen.qmin - qg)) / base;
  }
  for (int i = 0; i < net.n_bus(); ++i) {
    const Bus& b = net.buses[static_cast<std::size_t>(i)];
    v.c_vg += std::max(0.0, sol.vm(i) - b.vmax) + std::max(0.0, b.vmin - sol.vm(i));
  }
  for (int k = 0; k < net.n_branch(); ++k) {
    const Branch& br = net.branches[static_cast<std::size_t>(k)];
    if (!br.in_service || br.smax <= 0.0) continue;
    const double s = std::max(std::abs(sol.flow_from_mva[static_cast<std::size_t>(k)]),
                              std::abs(sol.flow_to_mva[static_cast<std::size_t>(k)]));
    v.c_flow += std::max(0.0, s - br.smax) / base;
  }
  return v;
}

}  // namespace rtopf
