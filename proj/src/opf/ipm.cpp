// SPDX-License-Identifier: Apache-2.0
#include "opf/ipm.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "util/error.hpp"

namespace rtopf {

namespace {

// variable layout: [va(n), vm(n), pg(g), qg(g)], all per-unit
struct Layout {
  int n, g, nx;
  int va(int i) const { return i; }
  int vm(int i) const { return n + i; }
  int pg(int k) const { return 2 * n + k; }
  int qg(int k) const { return 2 * n + g + k; }
};

struct BranchYc {
  int f, t;
  double gff, bff, gft, bft;  // from-side admittance blocks
  double gtt, btt, gtf, btf;  // to-side
  double smax2;               // (smax/base)^2, 0 when unlimited
};

class IpmProblem {
 public:
  IpmProblem(const Network& net, const LoadState& loads,
             const std::optional<std::vector<double>>& prev_pg_mw)
      : net_(net), ybus_(build_ybus(net)), lay_{net.n_bus(), net.n_gen(), 0} {
    lay_.nx = 2 * lay_.n + 2 * lay_.g;
    const double base = net.base_mva;
    pd_ = Eigen::VectorXd::Zero(lay_.n);
    qd_ = Eigen::VectorXd::Zero(lay_.n);
    for (int i = 0; i < lay_.n; ++i) {
      pd_(i) = loads.pd_mw[static_cast<std::size_t>(i)] / base;
      qd_(i) = loads.qd_mvar[static_cast<std::size_t>(i)] / base;
    }
    for (const Branch& br : net.branches) {
      if (!br.in_service) continue;
      BranchYc bc;
      bc.f = net.bus_pos(br.from);
      bc.t = net.bus_pos(br.to);
      const std::complex<double> ys = 1.0 / std::complex<double>(br.r, br.x);
      const std::complex<double> sh(0.0, 0.5 * br.b_ch);
      bc.gff = (ys + sh).real();
      bc.bff = (ys + sh).imag();
      bc.gft = (-ys).real();
      bc.bft = (-ys).imag();
      bc.gtt = bc.gff;
      bc.btt = bc.bff;
      bc.gtf = bc.gft;
      bc.btf = bc.bft;
      bc.smax2 = br.smax > 0.0 ? (br.smax / base) * (br.smax / base) : 0.0;
      branches_.push_back(bc);
    }
    if (prev_pg_mw) {
      prev_pg_pu_.resize(static_cast<std::size_t>(lay_.g));
      for (int k = 0; k < lay_.g; ++k) {
        const Generator& gen = net.generators[static_cast<std::size_t>(k)];
        const double prev = (*prev_pg_mw)[static_cast<std::size_t>(k)];
        const double lo = std::max(gen.pmin, prev - gen.r_down);
        const double hi = std::min(gen.pmax, prev + gen.r_up);
        if (lo > hi + 1e-9)
          fail(Errc::usage, "empty ramp box for generator " + std::to_string(k));
        prev_pg_pu_[static_cast<std::size_t>(k)] = prev / base;
      }
      has_ramp_ = true;
    }
    count_rows();
  }

  const Layout& layout() const { return lay_; }
  int n_eq() const { return 2 * lay_.n + 1; }
  int n_ineq() const { return m_ineq_; }

  double objective(const Eigen::VectorXd& x) const {
    const double base = net_.base_mva;
    double f = 0.0;
    for (int k = 0; k < lay_.g; ++k) {
      const double p = x(lay_.pg(k)) * base;
      f += net_.gen_cost(k, p);
    }
    return f;
  }

  Eigen::VectorXd objective_grad(const Eigen::VectorXd& x) const {
    const double base = net_.base_mva;
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(lay_.nx);
    for (int k = 0; k < lay_.g; ++k) {
      const GenCost& c = net_.gencosts[static_cast<std::size_t>(k)];
      grad(lay_.pg(k)) = base * (2.0 * c.c2 * x(lay_.pg(k)) * base + c.c1);
    }
    return grad;
  }

  Eigen::VectorXd objective_hess_diag(const Eigen::VectorXd&) const {
    const double base = net_.base_mva;
    Eigen::VectorXd h = Eigen::VectorXd::Zero(lay_.nx);
    for (int k = 0; k < lay_.g; ++k)
      h(lay_.pg(k)) = 2.0 * net_.gencosts[static_cast<std::size_t>(k)].c2 * base * base;
    return h;
  }

  // Exact Hessian of the Lagrangian: objective curvature plus the curvature
  // of the power-balance equalities (weights y) and of the squared-flow
  // inequalities (weights z). pg/qg enter the constraints linearly, so all
  // constraint curvature lives in the (va, vm) block.
  Eigen::MatrixXd lagrangian_hessian(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                                     const Eigen::VectorXd& z) const {
    const int n = lay_.n;
    Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(lay_.nx, lay_.nx);
    hess.diagonal() = objective_hess_diag(x);

    auto add_sym = [&](int r, int c, double v) {
      hess(r, c) += v;
      if (r != c) hess(c, r) += v;
    };

    // sum_i yP_i P_i + yQ_i Q_i = sum_{ij} vm_i vm_j (a_ij cos d_ij + b_ij sin d_ij)
    const Eigen::VectorXd vm = x.segment(n, n);
    const Eigen::VectorXd va = x.segment(0, n);
    for (int i = 0; i < n; ++i) {
      const double lp = y(i), lq = y(n + i);
      for (int j = 0; j < n; ++j) {
        const std::complex<double> ybij = ybus_(i, j);
        if (ybij == std::complex<double>(0.0, 0.0)) continue;
        const double a = lp * ybij.real() - lq * ybij.imag();
        const double b = lp * ybij.imag() + lq * ybij.real();
        if (j == i) {
          add_sym(lay_.vm(i), lay_.vm(i), 2.0 * a);
          continue;
        }
        const double d = va(i) - va(j);
        const double wv = a * std::cos(d) + b * std::sin(d);
        const double wd = -a * std::sin(d) + b * std::cos(d);
        add_sym(lay_.va(i), lay_.va(i), -vm(i) * vm(j) * wv);
        add_sym(lay_.va(j), lay_.va(j), -vm(i) * vm(j) * wv);
        add_sym(lay_.va(i), lay_.va(j), vm(i) * vm(j) * wv);
        add_sym(lay_.vm(i), lay_.vm(j), wv);
        add_sym(lay_.vm(i), lay_.va(i), vm(j) * wd);
        add_sym(lay_.vm(i), lay_.va(j), -vm(j) * wd);
        add_sym(lay_.vm(j), lay_.va(i), vm(i) * wd);
        add_sym(lay_.vm(j), lay_.va(j), -vm(i) * wd);
      }
    }

    // flow rows: grad^2(p^2+q^2) = 2(grad p grad p' + p hess p + ...)
    int r = flow_row_start_;
    for (const BranchYc& bc : branches_) {
      if (bc.smax2 <= 0.0) continue;
      flow_hessian(x, bc, true, z(r), hess);
      ++r;
      flow_hessian(x, bc, false, z(r), hess);
      ++r;
    }
    return hess;
  }

  // power-balance equalities plus the slack-angle reference
  void equalities(const Eigen::VectorXd& x, Eigen::VectorXd& g, Eigen::MatrixXd& jac) const {
    const int n = lay_.n;
    g.setZero(n_eq());
    jac.setZero(n_eq(), lay_.nx);

    Eigen::VectorXd vm = x.segment(n, n);
    Eigen::VectorXd va = x.segment(0, n);
    for (int i = 0; i < n; ++i) {
      double pi = 0.0, qi = 0.0;
      for (int j = 0; j < n; ++j) {
        const std::complex<double> y = ybus_(i, j);
        if (y == std::complex<double>(0.0, 0.0)) continue;
        const double d = va(i) - va(j);
        const double cs = std::cos(d), sn = std::sin(d);
        const double gij = y.real(), bij = y.imag();
        pi += vm(j) * (gij * cs + bij * sn);
        qi += vm(j) * (gij * sn - bij * cs);

        if (j != i) {
          jac(i, lay_.va(j)) = vm(i) * vm(j) * (gij * sn - bij * cs);
          jac(i, lay_.vm(j)) = vm(i) * (gij * cs + bij * sn);
          jac(n + i, lay_.va(j)) = -vm(i) * vm(j) * (gij * cs + bij * sn);
          jac(n + i, lay_.vm(j)) = vm(i) * (gij * sn - bij * cs);
        }
      }
      const double p = vm(i) * pi;
      const double q = vm(i) * qi;
      g(i) = p + pd_(i);
      g(n + i) = q + qd_(i);
      jac(i, lay_.va(i)) = -q - vm(i) * vm(i) * ybus_(i, i).imag();
      jac(i, lay_.vm(i)) = p / vm(i) + ybus_(i, i).real() * vm(i);
      jac(n + i, lay_.va(i)) = p - vm(i) * vm(i) * ybus_(i, i).real();
      jac(n + i, lay_.vm(i)) = q / vm(i) - ybus_(i, i).imag() * vm(i);
    }
    for (int k = 0; k < lay_.g; ++k) {
      const int b = net_.gen_bus[static_cast<std::size_t>(k)];
      g(b) -= x(lay_.pg(k));
      g(n + b) -= x(lay_.qg(k));
      jac(b, lay_.pg(k)) = -1.0;
      jac(n + b, lay_.qg(k)) = -1.0;
    }
    g(2 * n) = x(lay_.va(net_.slack));
    jac(2 * n, lay_.va(net_.slack)) = 1.0;
  }

  // h(x) <= 0 rows: generator boxes, voltage band, squared flow limits, ramp
  void inequalities(const Eigen::VectorXd& x, Eigen::VectorXd& h, Eigen::MatrixXd& jac) const {
    const double base = net_.base_mva;
    h.setZero(m_ineq_);
    jac.setZero(m_ineq_, lay_.nx);
    int r = 0;
    for (int k = 0; k < lay_.g; ++k) {
      const Generator& gen = net_.generators[static_cast<std::size_t>(k)];
      h(r) = x(lay_.pg(k)) - gen.pmax / base;
      jac(r++, lay_.pg(k)) = 1.0;
      h(r) = gen.pmin / base - x(lay_.pg(k));
      jac(r++, lay_.pg(k)) = -1.0;
      h(r) = x(lay_.qg(k)) - gen.qmax / base;
      jac(r++, lay_.qg(k)) = 1.0;
      h(r) = gen.qmin / base - x(lay_.qg(k));
      jac(r++, lay_.qg(k)) = -1.0;
    }
    for (int i = 0; i < lay_.n; ++i) {
      const Bus& b = net_.buses[static_cast<std::size_t>(i)];
      h(r) = x(lay_.vm(i)) - b.vmax;
      jac(r++, lay_.vm(i)) = 1.0;
      h(r) = b.vmin - x(lay_.vm(i));
      jac(r++, lay_.vm(i)) = -1.0;
    }
    for (const BranchYc& bc : branches_) {
      if (bc.smax2 <= 0.0) continue;
      flow_row(x, bc, /*from_side=*/true, h, jac, r);
      ++r;
      flow_row(x, bc, /*from_side=*/false, h, jac, r);
      ++r;
    }
    if (has_ramp_) {
      for (int k = 0; k < lay_.g; ++k) {
        const Generator& gen = net_.generators[static_cast<std::size_t>(k)];
        h(r) = x(lay_.pg(k)) - (prev_pg_pu_[static_cast<std::size_t>(k)] + gen.r_up / base);
        jac(r++, lay_.pg(k)) = 1.0;
        h(r) = (prev_pg_pu_[static_cast<std::size_t>(k)] - gen.r_down / base) - x(lay_.pg(k));
        jac(r++, lay_.pg(k)) = -1.0;
      }
    }
  }

  Eigen::VectorXd initial_point(const std::optional<OpfWarmStart>& warm) const {
    const double base = net_.base_mva;
    Eigen::VectorXd x = Eigen::VectorXd::Zero(lay_.nx);
    auto inset = [](double v, double lo, double hi) {
      const double margin = 0.05 * (hi - lo);
      return std::clamp(v, lo + margin, hi - margin);
    };
    if (warm) {
      for (int i = 0; i < lay_.n; ++i) {
        const Bus& b = net_.buses[static_cast<std::size_t>(i)];
        x(lay_.va(i)) = warm->va(i) - warm->va(net_.slack);
        x(lay_.vm(i)) = inset(warm->vm(i), b.vmin, b.vmax);
      }
      for (int k = 0; k < lay_.g; ++k) {
        const Generator& gen = net_.generators[static_cast<std::size_t>(k)];
        double lo = gen.pmin, hi = gen.pmax;
        if (has_ramp_) {
          lo = std::max(lo, prev_pg_pu_[static_cast<std::size_t>(k)] * base - gen.r_down);
          hi = std::min(hi, prev_pg_pu_[static_cast<std::size_t>(k)] * base + gen.r_up);
        }
        x(lay_.pg(k)) = inset(warm->pg_mw[static_cast<std::size_t>(k)], lo, hi) / base;
        x(lay_.qg(k)) = inset(warm->qg_mvar[static_cast<std::size_t>(k)], gen.qmin, gen.qmax) / base;
      }
      return x;
    }
    for (int i = 0; i < lay_.n; ++i) {
      const Bus& b = net_.buses[static_cast<std::size_t>(i)];
      x(lay_.vm(i)) = inset(1.0, b.vmin, b.vmax);
    }
    for (int k = 0; k < lay_.g; ++k) {
      const Generator& gen = net_.generators[static_cast<std::size_t>(k)];
      double lo = gen.pmin, hi = gen.pmax;
      if (has_ramp_) {
        lo = std::max(lo, prev_pg_pu_[static_cast<std::size_t>(k)] * base - gen.r_down);
        hi = std::min(hi, prev_pg_pu_[static_cast<std::size_t>(k)] * base + gen.r_up);
      }
      const double start = net_.generators[static_cast<std::size_t>(k)].pg0 > 0.0
                               ? net_.generators[static_cast<std::size_t>(k)].pg0
                               : 0.5 * (lo + hi);
      x(lay_.pg(k)) = inset(start, lo, hi) / base;
      x(lay_.qg(k)) = inset(0.5 * (gen.qmin + gen.qmax), gen.qmin, gen.qmax) / base;
    }
    return x;
  }

 private:
  void count_rows() {
    flow_row_start_ = 4 * lay_.g + 2 * lay_.n;
    m_ineq_ = flow_row_start_;
    for (const BranchYc& bc : branches_)
      if (bc.smax2 > 0.0) m_ineq_ += 2;
    if (has_ramp_) m_ineq_ += 2 * lay_.g;
  }

  void flow_hessian(const Eigen::VectorXd& x, const BranchYc& bc, bool from_side, double weight,
                    Eigen::MatrixXd& hess) const {
    if (weight == 0.0) return;
    const int a = from_side ? bc.f : bc.t;
    const int b = from_side ? bc.t : bc.f;
    const double gaa = from_side ? bc.gff : bc.gtt;
    const double baa = from_side ? bc.bff : bc.btt;
    const double gab = from_side ? bc.gft : bc.gtf;
    const double bab = from_side ? bc.bft : bc.btf;
    const double vma = x(lay_.vm(a)), vmb = x(lay_.vm(b));
    const double d = x(lay_.va(a)) - x(lay_.va(b));
    const double u = gab * std::cos(d) + bab * std::sin(d);
    const double w = gab * std::sin(d) - bab * std::cos(d);
    const double du = -w;  // u' = -g sin + b cos ... equals -(g sin - b cos)
    const double dw = u;

    const double p = vma * vma * gaa + vma * vmb * u;
    const double q = -vma * vma * baa + vma * vmb * w;

    const int iva = lay_.va(a), ivb = lay_.va(b), ima = lay_.vm(a), imb = lay_.vm(b);
    // gradients in (va_a, va_b, vm_a, vm_b) order
    const double gp[4] = {vma * vmb * du, -vma * vmb * du, 2.0 * vma * gaa + vmb * u, vma * u};
    const double gq[4] = {vma * vmb * dw, -vma * vmb * dw, -2.0 * vma * baa + vmb * w, vma * w};
    const int vidx[4] = {iva, ivb, ima, imb};

    // second derivatives of p and q (d/d delta maps to +va_a, -va_b)
    double hp[4][4] = {}, hq[4][4] = {};
    const double ddu = -u, ddw = -w;
    hp[0][0] = vma * vmb * ddu;
    hp[1][1] = vma * vmb * ddu;
    hp[0][1] = hp[1][0] = -vma * vmb * ddu;
    hp[2][2] = 2.0 * gaa;
    hp[2][3] = hp[3][2] = u;
    hp[0][2] = hp[2][0] = vmb * du;
    hp[0][3] = hp[3][0] = vma * du;
    hp[1][2] = hp[2][1] = -vmb * du;
    hp[1][3] = hp[3][1] = -vma * du;
    hq[0][0] = vma * vmb * ddw;
    hq[1][1] = vma * vmb * ddw;
    hq[0][1] = hq[1][0] = -vma * vmb * ddw;
    hq[2][2] = -2.0 * baa;
    hq[2][3] = hq[3][2] = w;
    hq[0][2] = hq[2][0] = vmb * dw;
    hq[0][3] = hq[3][0] = vma * dw;
    hq[1][2] = hq[2][1] = -vmb * dw;
    hq[1][3] = hq[3][1] = -vma * dw;

    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c) {
        const double v = 2.0 * weight *
                         (gp[r] * gp[c] + p * hp[r][c] + gq[r] * gq[c] + q * hq[r][c]);
        hess(vidx[r], vidx[c]) += v;
      }
  }

  void flow_row(const Eigen::VectorXd& x, const BranchYc& bc, bool from_side, Eigen::VectorXd& h,
                Eigen::MatrixXd& jac, int r) const {
    const int a = from_side ? bc.f : bc.t;
    const int b = from_side ? bc.t : bc.f;
    const double gaa = from_side ? bc.gff : bc.gtt;
    const double baa = from_side ? bc.bff : bc.btt;
    const double gab = from_side ? bc.gft : bc.gtf;
    const double bab = from_side ? bc.bft : bc.btf;
    const double vma = x(lay_.vm(a)), vmb = x(lay_.vm(b));
    const double d = x(lay_.va(a)) - x(lay_.va(b));
    const double cs = std::cos(d), sn = std::sin(d);

    // S_ab = V_a conj(y_aa V_a + y_ab V_b)
    const double p = vma * vma * gaa + vma * vmb * (gab * cs + bab * sn);
    const double q = -vma * vma * baa + vma * vmb * (gab * sn - bab * cs);
    const double dp_dvma = 2.0 * vma * gaa + vmb * (gab * cs + bab * sn);
    const double dp_dvmb = vma * (gab * cs + bab * sn);
    const double dp_dd = vma * vmb * (-gab * sn + bab * cs);
    const double dq_dvma = -2.0 * vma * baa + vmb * (gab * sn - bab * cs);
    const double dq_dvmb = vma * (gab * sn - bab * cs);
    const double dq_dd = vma * vmb * (gab * cs + bab * sn);

    h(r) = p * p + q * q - bc.smax2;
    jac(r, lay_.vm(a)) = 2.0 * (p * dp_dvma + q * dq_dvma);
    jac(r, lay_.vm(b)) = 2.0 * (p * dp_dvmb + q * dq_dvmb);
    jac(r, lay_.va(a)) = 2.0 * (p * dp_dd + q * dq_dd);
    jac(r, lay_.va(b)) = -2.0 * (p * dp_dd + q * dq_dd);
  }

  const Network& net_;
  Eigen::MatrixXcd ybus_;
  Layout lay_;
  Eigen::VectorXd pd_, qd_;
  std::vector<BranchYc> branches_;
  std::vector<double> prev_pg_pu_;
  bool has_ramp_ = false;
  int m_ineq_ = 0;
  int flow_row_start_ = 0;
};

}  // namespace

OpfSolution solve_acopf(const Network& net, const LoadState& loads,
                        const std::optional<std::vector<double>>& prev_pg_mw,
                        const OpfOptions& opt) {
  if (prev_pg_mw && static_cast<int>(prev_pg_mw->size()) != net.n_gen())
    fail(Errc::usage, "prev_pg must have one entry per generator");

  IpmProblem prob(net, loads, prev_pg_mw);
  const Layout& lay = prob.layout();
  const int nx = lay.nx;
  const int me = prob.n_eq();
  const int mi = prob.n_ineq();

  Eigen::VectorXd x = prob.initial_point(opt.warm);
  Eigen::VectorXd g(me), h(mi);
  Eigen::MatrixXd jg(me, nx), jh(mi, nx);
  prob.equalities(x, g, jg);
  prob.inequalities(x, h, jh);

  Eigen::VectorXd s(mi), z(mi);
  const double mu0 = 0.1;
  for (int i = 0; i < mi; ++i) {
    s(i) = std::max(0.01, -h(i) + 0.01);
    z(i) = mu0 / s(i);
  }
  // least-squares equality multipliers so the first dual residual is not
  // dominated by the raw cost gradient
  Eigen::VectorXd y;
  {
    const Eigen::VectorXd grad = prob.objective_grad(x) + jh.transpose() * z;
    const Eigen::MatrixXd jgt = jg.transpose();
    y = jgt.colPivHouseholderQr().solve(-grad);
    if (!y.allFinite()) y = Eigen::VectorXd::Zero(me);
  }

  OpfSolution sol;
  double delta = 1e-8;
  int stall = 0;
  double mu_prev = std::numeric_limits<double>::infinity();

  auto residuals = [&](const Eigen::VectorXd& xx, const Eigen::VectorXd& ss,
                       const Eigen::VectorXd& yy, const Eigen::VectorXd& zz, double sigma_mu,
                       Eigen::VectorXd& rd, Eigen::VectorXd& rg, Eigen::VectorXd& rh,
                       Eigen::VectorXd& rc, Eigen::VectorXd& gg, Eigen::MatrixXd& jgg,
                       Eigen::VectorXd& hh, Eigen::MatrixXd& jhh) {
    prob.equalities(xx, gg, jgg);
    prob.inequalities(xx, hh, jhh);
    rd = prob.objective_grad(xx) + jgg.transpose() * yy + jhh.transpose() * zz;
    rg = gg;
    rh = hh + ss;
    rc = ss.cwiseProduct(zz).array() - sigma_mu;
  };

  Eigen::VectorXd rd, rg, rh, rc;
  int it = 0;
  for (; it < opt.max_iter; ++it) {
    const double mu = mi > 0 ? s.dot(z) / mi : 0.0;
    const double sigma_mu = opt.sigma * mu;
    residuals(x, s, y, z, sigma_mu, rd, rg, rh, rc, g, jg, h, jh);

    const double dscale = std::max(1.0, prob.objective_grad(x).cwiseAbs().maxCoeff());
    const double pviol = std::max(g.cwiseAbs().maxCoeff(), h.maxCoeff());
    const double dres = rd.cwiseAbs().maxCoeff() / dscale;
    sol.kkt_residual = std::max({pviol, dres, mu});
#ifdef RTOPF_IPM_DEBUG
    std::printf("it %3d mu=%9.2e pviol=%9.2e dres=%9.2e obj=%10.3f vm=[%.3f,%.3f] delta=%.1e\n",
                it, mu, pviol, dres, prob.objective(x), x.segment(lay.n, lay.n).minCoeff(),
                x.segment(lay.n, lay.n).maxCoeff(), delta);
#endif

    if (pviol < opt.tol_primal && dres < opt.tol_dual && mu < opt.tol_mu) {
      sol.status = OpfStatus::ok;
      sol.feasible = true;
      break;
    }

    // reduced KKT: [H + Jh' (z/s) Jh, Jg'; Jg, 0]
    Eigen::VectorXd zs = z.cwiseQuotient(s);
    Eigen::MatrixXd m = prob.lagrangian_hessian(x, y, z);
    m.diagonal().array() += delta;
    m.noalias() += jh.transpose() * zs.asDiagonal() * jh;

    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(nx + me, nx + me);
    kkt.topLeftCorner(nx, nx) = m;
    kkt.topRightCorner(nx, me) = jg.transpose();
    kkt.bottomLeftCorner(me, nx) = jg;
    Eigen::VectorXd rhs(nx + me);
    rhs.head(nx) = -rd - jh.transpose() * (s.cwiseInverse().cwiseProduct(z.cwiseProduct(rh) - rc));
    rhs.tail(me) = -rg;

    Eigen::PartialPivLU<Eigen::MatrixXd> lu(kkt);
    Eigen::VectorXd dxy = lu.solve(rhs);
    if (!dxy.allFinite()) {
      delta *= 100.0;
      if (delta > 1e8) {
        sol.status = OpfStatus::singular_kkt;
        break;
      }
      --it;
      continue;
    }
    const Eigen::VectorXd dx = dxy.head(nx);
    const Eigen::VectorXd dy = dxy.tail(me);
    const Eigen::VectorXd ds = -rh - jh * dx;
    const Eigen::VectorXd dz = s.cwiseInverse().cwiseProduct(-rc - z.cwiseProduct(ds));

    // fraction to the boundary, primal and dual separately
    double ap = 1.0, ad = 1.0;
    for (int i = 0; i < mi; ++i) {
      if (ds(i) < 0.0) ap = std::min(ap, -opt.tau * s(i) / ds(i));
      if (dz(i) < 0.0) ad = std::min(ad, -opt.tau * z(i) / dz(i));
    }
    // keep voltage steps short so the iterates stay in the physical
    // (high-voltage) solution basin
    const double dv = dx.segment(lay.n, lay.n).cwiseAbs().maxCoeff();
    const double da = dx.segment(0, lay.n).cwiseAbs().maxCoeff();
    if (dv > 0.1) ap = std::min(ap, 0.1 / dv);
    if (da > 0.5) ap = std::min(ap, 0.5 / da);

    // full fraction-to-boundary step, halved only while voltages would
    // leave the positive orthant
    double scale = 1.0;
    Eigen::VectorXd xt = x + scale * ap * dx;
    for (int ls = 0; ls < 30 && xt.segment(lay.n, lay.n).minCoeff() <= 0.0; ++ls) {
      scale *= 0.5;
      xt = x + scale * ap * dx;
    }
    x = xt;
    s = (s + scale * ap * ds).cwiseMax(1e-14);
    y += scale * ad * dy;
    z = (z + scale * ad * dz).cwiseMax(1e-14);

    const double mu_new = mi > 0 ? s.dot(z) / mi : 0.0;
    sol.mu_path.push_back(mu_new);
    if (mu_new >= 0.9999 * mu_prev)
      ++stall;
    else
      stall = 0;
    mu_prev = mu_new;
    if (stall >= 15 || !x.allFinite() || z.maxCoeff() > 1e12) {
      sol.status = OpfStatus::stalled;  // diverging duals: no feasible point in reach
      break;
    }
  }
  if (it >= opt.max_iter) sol.status = OpfStatus::max_iterations;
  sol.iterations = it;

  const int n = lay.n;
  const double base = net.base_mva;
  sol.vm = x.segment(n, n);
  sol.va = x.segment(0, n);
  sol.pg_mw.resize(static_cast<std::size_t>(lay.g));
  sol.qg_mvar.resize(static_cast<std::size_t>(lay.g));
  sol.vg.resize(static_cast<std::size_t>(lay.g));
  for (int k = 0; k < lay.g; ++k) {
    sol.pg_mw[static_cast<std::size_t>(k)] = x(lay.pg(k)) * base;
    sol.qg_mvar[static_cast<std::size_t>(k)] = x(lay.qg(k)) * base;
    sol.vg[static_cast<std::size_t>(k)] = x(lay.vm(net.gen_bus[static_cast<std::size_t>(k)]));
  }
  sol.objective = prob.objective(x);
  return sol;
}

}  // namespace rtopf
