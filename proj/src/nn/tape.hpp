// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace rtopf::nn {

// Recorded computation graph over double vectors with exact reverse-mode
// gradients. Nodes are appended in evaluation order; backward() walks them in
// reverse. Small by design: the networks in this project have a few thousand
// parameters and graphs of a few hundred nodes.
class Tape {
 public:
  struct Var {
    int id = -1;
  };

  Var leaf(const std::vector<double>& value);
  Var leaf(std::vector<double>&& value);

  // y = W x + b, W row-major (rows x cols) stored in a leaf of size rows*cols
  Var affine(Var w, Var b, Var x, int rows, int cols);
  Var relu(Var x);
  Var sigmoid(Var x);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);  // elementwise
  Var scale(Var a, double c);
  Var add_const(Var a, double c);
  Var exp(Var a);
  Var square(Var a);
  Var sum(Var a);   // size-1 result
  Var mean(Var a);  // size-1 result
  Var min2(Var a, Var b);  // elementwise min
  Var clamp(Var a, double lo, double hi);  // pass-through gradient inside the box

  // diagonal Gaussian log density of a fixed action at (mu, log_std)
  Var gauss_log_prob(Var mu, Var log_std, const std::vector<double>& action);

  // mean squared error against a fixed target
  Var mse(Var pred, const std::vector<double>& target);

  const std::vector<double>& value(Var v) const { return nodes_[static_cast<std::size_t>(v.id)].val; }
  double scalar(Var v) const { return nodes_[static_cast<std::size_t>(v.id)].val[0]; }
  const std::vector<double>& grad(Var v) const { return nodes_[static_cast<std::size_t>(v.id)].grad; }

  // seeds d(loss)=1 and accumulates gradients into every node
  void backward(Var loss);

  void clear();
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    std::vector<double> val;
    std::vector<double> grad;
    std::function<void(Tape&)> back;  // empty for leaves
  };

  Var push(std::vector<double>&& value, std::function<void(Tape&)> back);
  std::vector<double>& grad_mut(Var v) { return nodes_[static_cast<std::size_t>(v.id)].grad; }

  std::vector<Node> nodes_;
};

}  // namespace rtopf::nn
