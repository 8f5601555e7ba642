// SPDX-License-Identifier: Apache-2.0
#include "nn/mlp.hpp"

#include <cassert>
#include <cmath>

#include "util/error.hpp"

namespace rtopf::nn {

std::size_t Mlp::w_offset(int layer) const {
  std::size_t off = 0;
  for (int l = 0; l < layer; ++l)
    off += static_cast<std::size_t>(sizes[static_cast<std::size_t>(l)]) *
               static_cast<std::size_t>(sizes[static_cast<std::size_t>(l) + 1]) +
           static_cast<std::size_t>(sizes[static_cast<std::size_t>(l) + 1]);
  return off;
}

std::size_t Mlp::b_offset(int layer) const {
  return w_offset(layer) + static_cast<std::size_t>(sizes[static_cast<std::size_t>(layer)]) *
                               static_cast<std::size_t>(sizes[static_cast<std::size_t>(layer) + 1]);
}

std::size_t Mlp::param_count() const { return w_offset(n_layers()); }

Mlp Mlp::make(std::vector<int> sizes, OutputAct act, Rng& rng) {
  if (sizes.size() < 2) fail(Errc::usage, "mlp needs at least input and output sizes");
  Mlp net;
  net.sizes = std::move(sizes);
  net.out_act = act;
  net.theta.assign(net.param_count(), 0.0);
  for (int l = 0; l < net.n_layers(); ++l) {
    const int fan_in = net.sizes[static_cast<std::size_t>(l)];
    const int fan_out = net.sizes[static_cast<std::size_t>(l) + 1];
    const double sd = std::sqrt(2.0 / fan_in);
    double* w = net.theta.data() + net.w_offset(l);
    for (int i = 0; i < fan_in * fan_out; ++i) w[i] = sd * rng.normal();
    // biases stay zero
  }
  return net;
}

std::vector<double> Mlp::forward(const std::vector<double>& input) const {
  assert(static_cast<int>(input.size()) == in_dim());
  std::vector<double> cur = input;
  for (int l = 0; l < n_layers(); ++l) {
    const int rows = sizes[static_cast<std::size_t>(l) + 1];
    const int cols = sizes[static_cast<std::size_t>(l)];
    const double* w = theta.data() + w_offset(l);
    const double* b = theta.data() + b_offset(l);
    std::vector<double> next(static_cast<std::size_t>(rows));
    for (int r = 0; r < rows; ++r) {
      double acc = b[r];
      const double* wr = w + static_cast<std::size_t>(r) * static_cast<std::size_t>(cols);
      for (int c = 0; c < cols; ++c) acc += wr[c] * cur[static_cast<std::size_t>(c)];
      next[static_cast<std::size_t>(r)] = acc;
    }
    const bool last = l + 1 == n_layers();
    if (!last) {
      for (double& v : next) v = v > 0.0 ? v : 0.0;
    } else if (out_act == OutputAct::sigmoid) {
      for (double& v : next) v = 1.0 / (1.0 + std::exp(-v));
    }
    cur = std::move(next);
  }
  return cur;
}

MlpVars bind(Tape& tape, const Mlp& net) {
  MlpVars vars;
  for (int l = 0; l < net.n_layers(); ++l) {
    const std::size_t wn = static_cast<std::size_t>(net.sizes[static_cast<std::size_t>(l)]) *
                           static_cast<std::size_t>(net.sizes[static_cast<std::size_t>(l) + 1]);
    std::vector<double> w(net.theta.begin() + static_cast<long>(net.w_offset(l)),
                          net.theta.begin() + static_cast<long>(net.w_offset(l) + wn));
    std::vector<double> b(net.theta.begin() + static_cast<long>(net.b_offset(l)),
                          net.theta.begin() + static_cast<long>(net.w_offset(l + 1)));
    vars.w.push_back(tape.leaf(std::move(w)));
    vars.b.push_back(tape.leaf(std::move(b)));
  }
  return vars;
}

Tape::Var forward_tape(Tape& tape, const Mlp& net, const MlpVars& vars, Tape::Var input) {
  Tape::Var cur = input;
  for (int l = 0; l < net.n_layers(); ++l) {
    const int rows = net.sizes[static_cast<std::size_t>(l) + 1];
    const int cols = net.sizes[static_cast<std::size_t>(l)];
    cur = tape.affine(vars.w[static_cast<std::size_t>(l)], vars.b[static_cast<std::size_t>(l)], cur,
                      rows, cols);
    const bool last = l + 1 == net.n_layers();
    if (!last)
      cur = tape.relu(cur);
    else if (net.out_act == OutputAct::sigmoid)
      cur = tape.sigmoid(cur);
  }
  return cur;
}

void accumulate_grads(const Tape& tape, const Mlp& net, const MlpVars& vars,
                      std::vector<double>& grad) {
  assert(grad.size() == net.param_count());
  for (int l = 0; l < net.n_layers(); ++l) {
    const auto& gw = tape.grad(vars.w[static_cast<std::size_t>(l)]);
    const auto& gb = tape.grad(vars.b[static_cast<std::size_t>(l)]);
    double* w = grad.data() + net.w_offset(l);
    double* b = grad.data() + net.b_offset(l);
    for (std::size_t i = 0; i < gw.size(); ++i) w[i] += gw[i];
    for (std::size_t i = 0; i < gb.size(); ++i) b[i] += gb[i];
  }
}

double gauss_log_prob(const std::vector<double>& mu, const std::vector<double>& log_std,
                      const std::vector<double>& action) {
  static const double half_log_2pi = 0.5 * std::log(2.0 * M_PI);
  double acc = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const double sd = std::exp(log_std[i]);
    const double z = (action[i] - mu[i]) / sd;
    acc += -0.5 * z * z - log_std[i] - half_log_2pi;
  }
  return acc;
}

double gauss_kl(const std::vector<double>& mu_new, const std::vector<double>& log_std_new,
                const std::vector<double>& mu_old, const std::vector<double>& log_std_old) {
  double acc = 0.0;
  for (std::size_t i = 0; i < mu_new.size(); ++i) {
    const double s_new = std::exp(log_std_new[i]);
    const double s_old = std::exp(log_std_old[i]);
    const double d = mu_new[i] - mu_old[i];
    acc += log_std_old[i] - log_std_new[i] +
           (s_new * s_new + d * d) / (2.0 * s_old * s_old) - 0.5;
  }
  return acc;
}

GaussianPolicy::Sample GaussianPolicy::sample(const std::vector<double>& state, Rng& rng) const {
  const std::vector<double> mu = mean(state);
  Sample s;
  s.action.resize(mu.size());
  for (std::size_t i = 0; i < mu.size(); ++i)
    s.action[i] = mu[i] + std::exp(log_std[i]) * rng.normal();
  s.log_prob = gauss_log_prob(mu, log_std, s.action);
  // the pre-clip sample carries the density; the support clip is numerical
  constexpr double eps = 1e-6;
  for (double& a : s.action) a = std::clamp(a, eps, 1.0 - eps);
  return s;
}

double GaussianPolicy::log_prob(const std::vector<double>& state,
                                const std::vector<double>& action) const {
  return gauss_log_prob(mean(state), log_std, action);
}

GaussianPolicy GaussianPolicy::make(int state_dim, int action_dim, const std::vector<int>& hidden,
                                    double init_log_std, Rng& rng) {
  std::vector<int> sizes;
  sizes.push_back(state_dim);
  for (int h : hidden) sizes.push_back(h);
  sizes.push_back(action_dim);
  GaussianPolicy pol;
  pol.mean_net = Mlp::make(sizes, OutputAct::sigmoid, rng);
  pol.log_std.assign(static_cast<std::size_t>(action_dim), init_log_std);
  return pol;
}

void AdamState::init(std::size_t n, double learning_rate) {
  m.assign(n, 0.0);
  v.assign(n, 0.0);
  step = 0;
  lr = learning_rate;
}

void AdamState::update(std::vector<double>& params, const std::vector<double>& grad) {
  assert(params.size() == m.size() && grad.size() == m.size());
  ++step;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m[i] = beta1 * m[i] + (1.0 - beta1) * grad[i];
    v[i] = beta2 * v[i] + (1.0 - beta2) * grad[i] * grad[i];
    const double mhat = m[i] / bc1;
    const double vhat = v[i] / bc2;
    params[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

}  // namespace rtopf::nn
