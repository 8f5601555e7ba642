// SPDX-License-Identifier: Apache-2.0
#include "env/dataset.hpp"

#include <cmath>
#include <sstream>

#include "util/error.hpp"
#include "util/fileio.hpp"

namespace rtopf {

void DatasetConfig::validate() const {
  if (horizon < 2) fail(Errc::config, "dataset.horizon: must be >= 2");
  if (!(load_scale_low > 0.0 && load_scale_low <= load_scale_high))
    fail(Errc::config, "dataset: load scale band requires 0 < low <= high");
  if (!(pf_scale_low > 0.0 && pf_scale_low <= pf_scale_high))
    fail(Errc::config, "dataset: power-factor band requires 0 < low <= high");
}

LoadScenario::LoadScenario(const Network& net, int horizon)
    : load_buses_(net.load_buses),
      p_mw_(static_cast<std::size_t>(horizon), std::vector<double>(net.load_buses.size(), 0.0)),
      q_mvar_(static_cast<std::size_t>(horizon), std::vector<double>(net.load_buses.size(), 0.0)),
      next_total_mw_(static_cast<std::size_t>(horizon), 0.0) {}

void LoadScenario::set(int t, int k, double p, double q) {
  p_mw_[static_cast<std::size_t>(t)][static_cast<std::size_t>(k)] = p;
  q_mvar_[static_cast<std::size_t>(t)][static_cast<std::size_t>(k)] = q;
}

void LoadScenario::finalize_totals() {
  const int t_end = horizon();
  for (int t = 0; t < t_end; ++t) {
    const int src = (t + 1 < t_end) ? t + 1 : t;  // last step repeats its own total
    double total = 0.0;
    for (double p : p_mw_[static_cast<std::size_t>(src)]) total += p;
    next_total_mw_[static_cast<std::size_t>(t)] = total;
  }
}

LoadState LoadScenario::loads_at(const Network& net, int t) const {
  if (t < 0 || t >= horizon()) fail(Errc::usage, "scenario step out of range");
  LoadState ls;
  ls.pd_mw.assign(net.buses.size(), 0.0);
  ls.qd_mvar.assign(net.buses.size(), 0.0);
  for (int k = 0; k < n_load_bus(); ++k) {
    ls.pd_mw[static_cast<std::size_t>(load_buses_[static_cast<std::size_t>(k)])] = p_mw(t, k);
    ls.qd_mvar[static_cast<std::size_t>(load_buses_[static_cast<std::size_t>(k)])] = q_mvar(t, k);
  }
  return ls;
}

LoadScenario generate_dataset(const Network& net, const DatasetConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  const int nl = static_cast<int>(net.load_buses.size());
  LoadScenario scen(net, cfg.horizon);
  for (int t = 0; t < cfg.horizon; ++t) {
    for (int k = 0; k < nl; ++k) {
      const Bus& bus = net.buses[static_cast<std::size_t>(net.load_buses[static_cast<std::size_t>(k)])];
      const double p = bus.pd * rng.uniform(cfg.load_scale_low, cfg.load_scale_high);
      const double beta0 = bus.pd == 0.0 ? 0.0 : bus.pd / std::hypot(bus.pd, bus.qd);
      const double blo = cfg.pf_scale_low * beta0;
      const double bhi = std::min(cfg.pf_scale_high * beta0, 1.0);
      const double beta = rng.uniform(blo, std::max(blo, bhi));
      const double q = (p == 0.0 || beta <= 0.0) ? 0.0 : p * std::tan(std::acos(std::min(beta, 1.0)));
      scen.set(t, k, p, bus.qd < 0.0 ? -q : q);
    }
  }
  scen.finalize_totals();
  return scen;
}

void LoadScenario::save(const std::string& path, const std::string& config_hash_hex) const {
  std::ostringstream out;
  out << "# rtopf dataset";
  if (!config_hash_hex.empty()) out << " config_hash=" << config_hash_hex;
  out << "\n# columns: step";
  for (int b : load_buses_) out << " p_bus" << b;
  for (int b : load_buses_) out << " q_bus" << b;
  out << " next_total_p\n";
  for (int t = 0; t < horizon(); ++t) {
    out << t;
    for (int k = 0; k < n_load_bus(); ++k) out << ' ' << format_double(p_mw(t, k));
    for (int k = 0; k < n_load_bus(); ++k) out << ' ' << format_double(q_mvar(t, k));
    out << ' ' << format_double(next_total_mw(t)) << '\n';
  }
  atomic_write(path, out.str());
}

LoadScenario LoadScenario::load(const std::string& path, const Network& net,
                                std::string* config_hash_hex) {
  std::istringstream in(read_text(path));
  std::string line;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto pos = line.find("config_hash=");
      if (pos != std::string::npos && config_hash_hex)
        *config_hash_hex = line.substr(pos + 12, 16);
      continue;
    }
    std::istringstream ls(line);
    std::vector<double> row;
    double v;
    while (ls >> v) row.push_back(v);
    rows.push_back(std::move(row));
  }
  const int nl = static_cast<int>(net.load_buses.size());
  if (rows.empty()) fail(Errc::config, path + ": empty dataset");
  LoadScenario scen(net, static_cast<int>(rows.size()));
  for (std::size_t t = 0; t < rows.size(); ++t) {
    const auto& row = rows[t];
    if (static_cast<int>(row.size()) != 2 + 2 * nl)
      fail(Errc::config, path + ": row " + std::to_string(t) + ": expected " +
                             std::to_string(2 + 2 * nl) + " columns, got " +
                             std::to_string(row.size()));
    for (int k = 0; k < nl; ++k)
      scen.set(static_cast<int>(t), k, row[static_cast<std::size_t>(1 + k)],
               row[static_cast<std::size_t>(1 + nl + k)]);
    scen.next_total_mw_[t] = row.back();
  }
  return scen;
}

}  // namespace rtopf
