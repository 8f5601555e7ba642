// SPDX-License-Identifier: Apache-2.0
#include "nn/tape.hpp"

#include <cassert>
#include <cmath>

namespace rtopf::nn {

Tape::Var Tape::push(std::vector<double>&& value, std::function<void(Tape&)> back) {
  Node n;
  n.val = std::move(value);
  n.grad.assign(n.val.size(), 0.0);
  n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Tape::Var Tape::leaf(const std::vector<double>& value) {
  std::vector<double> v = value;
  return push(std::move(v), nullptr);
}

Tape::Var Tape::leaf(std::vector<double>&& value) { return push(std::move(value), nullptr); }

Tape::Var Tape::affine(Var w, Var b, Var x, int rows, int cols) {
  const auto& wv = value(w);
  const auto& bv = value(b);
  const auto& xv = value(x);
  assert(static_cast<int>(wv.size()) == rows * cols);
  assert(static_cast<int>(bv.size()) == rows);
  assert(static_cast<int>(xv.size()) == cols);
  std::vector<double> y(static_cast<std::size_t>(rows));
  for (int r = 0; r < rows; ++r) {
    double acc = bv[static_cast<std::size_t>(r)];
    const double* wrow = wv.data() + static_cast<std::size_t>(r) * static_cast<std::size_t>(cols);
    for (int c = 0; c < cols; ++c) acc += wrow[c] * xv[static_cast<std::size_t>(c)];
    y[static_cast<std::size_t>(r)] = acc;
  }
  Var out = push(std::move(y), nullptr);
  nodes_.back().back = [out, w, b, x, rows, cols](Tape& t) {
    const auto& gy = t.grad(out);
    const auto& wv2 = t.value(w);
    const auto& xv2 = t.value(x);
    auto& gw = t.grad_mut(w);
    auto& gb = t.grad_mut(b);
    auto& gx = t.grad_mut(x);
    for (int r = 0; r < rows; ++r) {
      const double gr = gy[static_cast<std::size_t>(r)];
      gb[static_cast<std::size_t>(r)] += gr;
      const std::size_t off = static_cast<std::size_t>(r) * static_cast<std::size_t>(cols);
      for (int c = 0; c < cols; ++c) {
        gw[off + static_cast<std::size_t>(c)] += gr * xv2[static_cast<std::size_t>(c)];
        gx[static_cast<std::size_t>(c)] += gr * wv2[off + static_cast<std::size_t>(c)];
      }
    }
  };
  return out;
}

Tape::Var Tape::relu(Var x) {
  std::vector<double> y = value(x);
  for (double& v : y) v = v > 0.0 ? v : 0.0;
  Var out = push(std::move(y), nullptr);
  nodes_.back().back = [out, x](Tape& t) {
    const auto& gy = t.grad(out);
    const auto& xv = t.value(x);
    auto& gx = t.grad_mut(x);
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += xv[i] > 0.0 ? gy[i] : 0.0;
  };
  return out;
}

Tape::Var Tape::sigmoid(Var x) {
  std::vector<double> y = value(x);
  for (double& v : y) v = 1.0 / (1.0 + std::exp(-v));
  Var out = push(std::move(y), nullptr);
  nodes_.back().back = [out, x](Tape& t) {
    const auto& gy = t.grad(out);
    const auto& yv = t.value(out);
    auto& gx = t.grad_mut(x);
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += gy[i] * yv[i] * (1.0 - yv[i]);
  };
  return out;
}

Tape::Var Tape::add(Var a, Var b) {
  std::vector<double> y = value(a);
  const auto& bv = value(b);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += bv[i];
  Var out = push(std::move(y), nullptr);
  nodes_.back().back = [out, a, b](Tape& t) {
    const auto& gy = t.grad(out);
    auto& ga = t.grad_mut(a);
    auto& gb = t.grad_mut(b);
    for (std::size_t i = 0; i < gy.size(); ++i) {
      ga[i] += gy[i];
      gb[i] += gy[i];
    }
  };
  return out;
}

Tape::Var Tape::sub(Var a, Var b) {
  std::vector<double> y = value(a);
  const auto& bv = value(b);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] -= bv[i];
  Var out = push(std::move(y), nullptr);
  nodes_.back().back = [out, a, b](Tape& t) {
    const auto& gy = t.grad(out);
    auto& ga = t.grad_mut(a);
    auto& gb = t.grad_mut(b);
    for (std::size_t i = 0; i < gy.size(); ++i) {
      ga[i] += gy[i];
      gb[i] -= gy[i];
    }
  };
  return out;
}

Tape::Var Tape::mul(Var a, Var b) {
  std::vector<double> y = value(a);
  const auto& bv = value(b);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] *= bv[i];
  Var out = push(std::move(y), nullptr);
  nodes_.back().back = [out, a, b](Tape& t) {
    const auto& gy = t.grad(out);
    const auto& av = t.value(a);
    const auto& bv2 = t.value(b);
    auto& ga = t.grad_mut(a);
    auto& gb = t.grad_mut(b);
    for (std::size_t i = 0; i < gy.size(); ++i) {
      ga[i] += gy[i] * bv2[i];
      gb[i] += gy[i] * av[i];
    }
  };
  return out;
}

Tape::Var Tape::scale(Var a, double c) {
  std::vector<double> y = value(a);
  for (double& v : y) v *= c;
  Var out = push(std::move(y), nullptr);
  nodes_.back().back = [out, a, c](Tape& t) {
    const auto& gy = t.grad(out);
    auto& ga = t.grad_mut(a);
    for (std::size_t i = 0; i < gy.size(); ++i) ga[i] += c * gy[i];
  };
  return out;
}

Tape::Var Tape::add_const(Var a, double c) {
  std::vector<double> y = value(a);
  for (double& v : y) v += c;
  Var out = push(std::move(y), nullptr);
  nodes_.back().back = [out, a](Tape& t) {
    const auto& gy = t.grad(out);
    auto& ga = t.grad_mut(a);
    for (std::size_t i = 0; i < gy.size(); ++i) ga[i] += gy[i];
  };
  return out;
}

Tape::Var Tape::exp(Var a) {
  std::vector<double> y = value(a);
  for (double& v : y) v = std::exp(v);
  Var out = push(std::move(y), nullptr);
  nodes_.back().back = [out, a](Tape& t) {
    const auto& gy = t.grad(out);
    const auto& yv = t.value(out);
    auto& ga = t.grad_mut(a);
    for (std::size_t i = 0; i < gy.size(); ++i) ga[i] += gy[i] * yv[i];
  };
  return out;
}

Tape::Var Tape::square(Var a) {
  std::vector<double> y = value(a);
  for (double& v : y) v *= v;
  Var out = push(std::move(y), nullptr);
  nodes_.back().back = [out, a](Tape& t) {
    const auto& gy = t.grad(out);
    const auto& av = t.value(a);
    auto& ga = t.grad_mut(a);
    for (std::size_t i = 0; i < gy.size(); ++i) ga[i] += 2.0 * av[i] * gy[i];
  };
  return out;
}

Tape::Var Tape::sum(Var a) {
  double acc = 0.0;
  for (double v : value(a)) acc += v;
  Var out = push({acc}, nullptr);
  nodes_.back().back = [out, a](Tape& t) {
    const double g = t.grad(out)[0];
    auto& ga = t.grad_mut(a);
    for (double& v : ga) v += g;
  };
  return out;
}

Tape::Var Tape::mean(Var a) {
  const std::size_t n = value(a).size();
  double acc = 0.0;
  for (double v : value(a)) acc += v;
  Var out = push({acc / static_cast<double>(n)}, nullptr);
  nodes_.back().back = [out, a, n](Tape& t) {
    const double g = t.grad(out)[0] / static_cast<double>(n);
    auto& ga = t.grad_mut(a);
    for (double& v : ga) v += g;
  };
  return out;
}

Tape::Var Tape::min2(Var a, Var b) {
  std::vector<double> y = value(a);
  const auto& bv = value(b);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = std::min(y[i], bv[i]);
  Var out = push(std::move(y), nullptr);
  nodes_.back().back = [out, a, b](Tape& t) {
    const auto& gy = t.grad(out);
    const auto& av = t.value(a);
    const auto& bv2 = t.value(b);
    auto& ga = t.grad_mut(a);
    auto& gb = t.grad_mut(b);
    for (std::size_t i = 0; i < gy.size(); ++i) {
      if (av[i] <= bv2[i])
        ga[i] += gy[i];
      else
        gb[i] += gy[i];
    }
  };
  return out;
}

Tape::Var Tape::clamp(Var a, double lo, double hi) {
  std::vector<double> y = value(a);
  for (double& v : y) v = std::min(std::max(v, lo), hi);
  Var out = push(std::move(y), nullptr);
  nodes_.back().back = [out, a, lo, hi](Tape& t) {
    const auto& gy = t.grad(out);
    const auto& av = t.value(a);
    auto& ga = t.grad_mut(a);
    for (std::size_t i = 0; i < gy.size(); ++i)
      if (av[i] > lo && av[i] < hi) ga[i] += gy[i];
  };
  return out;
}

Tape::Var Tape::gauss_log_prob(Var mu, Var log_std, const std::vector<double>& action) {
  static const double half_log_2pi = 0.5 * std::log(2.0 * M_PI);
  const auto& m = value(mu);
  const auto& ls = value(log_std);
  double acc = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    const double sd = std::exp(ls[i]);
    const double zz = (action[i] - m[i]) / sd;
    acc += -0.5 * zz * zz - ls[i] - half_log_2pi;
  }
  Var out = push({acc}, nullptr);
  nodes_.back().back = [out, mu, log_std, action](Tape& t) {
    const double g = t.grad(out)[0];
    const auto& m2 = t.value(mu);
    const auto& ls2 = t.value(log_std);
    auto& gm = t.grad_mut(mu);
    auto& gl = t.grad_mut(log_std);
    for (std::size_t i = 0; i < m2.size(); ++i) {
      const double sd = std::exp(ls2[i]);
      const double d = action[i] - m2[i];
      gm[i] += g * d / (sd * sd);
      gl[i] += g * (d * d / (sd * sd) - 1.0);
    }
  };
  return out;
}

Tape::Var Tape::mse(Var pred, const std::vector<double>& target) {
  const auto& p = value(pred);
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double d = p[i] - target[i];
    acc += d * d;
  }
  Var out = push({acc / static_cast<double>(p.size())}, nullptr);
  nodes_.back().back = [out, pred, target](Tape& t) {
    const double g = t.grad(out)[0];
    const auto& p2 = t.value(pred);
    auto& gp = t.grad_mut(pred);
    const double c = 2.0 / static_cast<double>(p2.size());
    for (std::size_t i = 0; i < p2.size(); ++i) gp[i] += g * c * (p2[i] - target[i]);
  };
  return out;
}

void Tape::backward(Var loss) {
  assert(value(loss).size() == 1);
  grad_mut(loss)[0] = 1.0;
  for (int i = loss.id; i >= 0; --i) {
    auto& node = nodes_[static_cast<std::size_t>(i)];
    if (node.back) node.back(*this);
  }
}

void Tape::clear() { nodes_.clear(); }

}  // namespace rtopf::nn
