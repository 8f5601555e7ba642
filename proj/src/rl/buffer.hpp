// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

namespace rtopf::rl {

struct Transition {
  std::vector<double> state;        // normalized observation
  std::vector<double> action;       // raw policy sample in (0,1)
  double reward = 0.0;
  std::vector<double> cost;         // violation components, >= 0
  std::vector<double> next_state;
  double log_prob = 0.0;            // behavior policy density at collection
  std::vector<double> behavior_mu;  // behavior mean, for the KL check
  bool terminal = false;            // episode ended here
  bool truncated = false;           // ended by the step cap, not by a real death
};

// Backward-recursive discounted sums per episode segment. `stop` marks the
// last row of a segment; `boot` carries the value the recursion restarts
// from there (zero for a real terminal state, V(s_next) for a truncation or
// a buffer tail cut mid-episode).
std::vector<double> discounted_returns(const std::vector<double>& signal,
                                       const std::vector<char>& stop,
                                       const std::vector<double>& boot, double gamma);

// Generalized advantage estimation: A_t = delta_t + gamma*lambda*A_{t+1}
// within a segment, delta_t = signal_t + gamma*value_next_t - value_s_t.
// value_next must already be zero for real terminal rows.
std::vector<double> gae(const std::vector<double>& signal, const std::vector<double>& value_s,
                        const std::vector<double>& value_next, const std::vector<char>& stop,
                        double gamma, double lambda_gae);

// A_L = A_R - sum_i lambda_i * A_Ci
std::vector<double> lagrange_advantage(const std::vector<double>& adv_r,
                                       const std::vector<std::vector<double>>& adv_c,
                                       const std::vector<double>& lambda);

// Transitions plus the columns computed between collection and update. The
// reward column never carries violation terms and the cost columns never
// carry generation cost; the writer enforces the split.
class RolloutBuffer {
 public:
  explicit RolloutBuffer(int n_cost) : n_cost_(n_cost) {}

  void push(Transition t);
  void clear();
  int size() const { return static_cast<int>(data_.size()); }
  int n_cost() const { return n_cost_; }
  const std::vector<Transition>& transitions() const { return data_; }
  const Transition& operator[](int i) const { return data_[static_cast<std::size_t>(i)]; }

  // computed columns; valid only after the trainer finalizes the round
  std::vector<double> returns_r;
  std::vector<std::vector<double>> returns_c;  // [n_cost][T]
  std::vector<double> adv_r;
  std::vector<std::vector<double>> adv_c;  // [n_cost][T]
  std::vector<double> adv_l;
  std::vector<double> behavior_log_std;  // snapshot at collection
  bool finalized = false;

 private:
  int n_cost_;
  std::vector<Transition> data_;
};

}  // namespace rtopf::rl
