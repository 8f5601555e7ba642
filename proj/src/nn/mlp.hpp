// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <utility>
#include <vector>

#include "nn/tape.hpp"
#include "util/rng.hpp"

namespace rtopf::nn {

enum class OutputAct { identity, sigmoid };

// Fully connected network with rectifier hidden layers, parameters in one
// flat vector (per layer: row-major W, then b).
struct Mlp {
  std::vector<int> sizes;
  OutputAct out_act = OutputAct::identity;
  std::vector<double> theta;

  int n_layers() const { return static_cast<int>(sizes.size()) - 1; }
  int in_dim() const { return sizes.front(); }
  int out_dim() const { return sizes.back(); }
  std::size_t w_offset(int layer) const;
  std::size_t b_offset(int layer) const;
  std::size_t param_count() const;

  static Mlp make(std::vector<int> sizes, OutputAct act, Rng& rng);

  std::vector<double> forward(const std::vector<double>& input) const;
};

// Tape bindings: parameter leaves per layer, shared across many forward
// passes recorded on the same tape.
struct MlpVars {
  std::vector<Tape::Var> w, b;
};

MlpVars bind(Tape& tape, const Mlp& net);
Tape::Var forward_tape(Tape& tape, const Mlp& net, const MlpVars& vars, Tape::Var input);
// adds the tape gradients of the bound parameter leaves into grad (flat layout)
void accumulate_grads(const Tape& tape, const Mlp& net, const MlpVars& vars,
                      std::vector<double>& grad);

// Diagonal Gaussian policy: sigmoid mean network, learnable log-std vector.
struct GaussianPolicy {
  Mlp mean_net;
  std::vector<double> log_std;

  int action_dim() const { return mean_net.out_dim(); }
  std::vector<double> mean(const std::vector<double>& state) const { return mean_net.forward(state); }

  struct Sample {
    std::vector<double> action;  // in (0,1) after numerical clipping
    double log_prob;             // density at the pre-clip sample
  };
  Sample sample(const std::vector<double>& state, Rng& rng) const;
  double log_prob(const std::vector<double>& state, const std::vector<double>& action) const;

  static GaussianPolicy make(int state_dim, int action_dim, const std::vector<int>& hidden,
                             double init_log_std, Rng& rng);
};

double gauss_log_prob(const std::vector<double>& mu, const std::vector<double>& log_std,
                      const std::vector<double>& action);

// KL(new || old) for diagonal Gaussians, summed over dimensions
double gauss_kl(const std::vector<double>& mu_new, const std::vector<double>& log_std_new,
                const std::vector<double>& mu_old, const std::vector<double>& log_std_old);

// Adaptive-moment estimation with bias correction.
struct AdamState {
  std::vector<double> m, v;
  long step = 0;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  void init(std::size_t n, double learning_rate);
  void update(std::vector<double>& params, const std::vector<double>& grad);
};

}  // namespace rtopf::nn
