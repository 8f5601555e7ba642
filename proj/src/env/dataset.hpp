// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "grid/network.hpp"
#include "pf/newton.hpp"
#include "util/rng.hpp"

namespace rtopf {

struct DatasetConfig {
  int horizon = 96;             // T steps
  double load_scale_low = 0.7;  // fraction of base demand
  double load_scale_high = 1.3;
  double pf_scale_low = 0.9;  // fraction of base power factor, capped at 1
  double pf_scale_high = 1.1;
  std::uint64_t seed = 0;

  void validate() const;
};

// Per-step net-load conditions over the nonzero-load bus subset, plus the
// next-step total used as the look-ahead state component.
class LoadScenario {
 public:
  LoadScenario() = default;
  LoadScenario(const Network& net, int horizon);

  int horizon() const { return static_cast<int>(p_mw_.size()); }
  int n_load_bus() const { return static_cast<int>(load_buses_.size()); }
  const std::vector<int>& load_buses() const { return load_buses_; }

  double p_mw(int t, int k) const { return p_mw_[static_cast<std::size_t>(t)][static_cast<std::size_t>(k)]; }
  double q_mvar(int t, int k) const { return q_mvar_[static_cast<std::size_t>(t)][static_cast<std::size_t>(k)]; }
  double next_total_mw(int t) const { return next_total_mw_[static_cast<std::size_t>(t)]; }

  void set(int t, int k, double p, double q);
  void finalize_totals();  // next-step totals; the final step repeats its own

  LoadState loads_at(const Network& net, int t) const;

  void save(const std::string& path, const std::string& config_hash_hex) const;
  static LoadScenario load(const std::string& path, const Network& net,
                           std::string* config_hash_hex = nullptr);

 private:
  std::vector<int> load_buses_;  // bus positions, aligned with columns
  std::vector<std::vector<double>> p_mw_;
  std::vector<std::vector<double>> q_mvar_;
  std::vector<double> next_total_mw_;
};

// Uniform perturbation of the base demands: P ~ U[low, high] * Pd_base per
// load bus, power factor ~ U over its band capped at unity, Q from the
// sampled pair. Deterministic for a given seed.
LoadScenario generate_dataset(const Network& net, const DatasetConfig& cfg);

}  // namespace rtopf
