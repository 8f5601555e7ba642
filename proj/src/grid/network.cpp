// SPDX-License-Identifier: Apache-2.0
#include "grid/network.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "util/error.hpp"

namespace rtopf {

namespace {

template <typename T>
T require(const json& j, const std::string& ctx, const char* key) {
  if (!j.contains(key)) fail(Errc::config, ctx + ": missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    fail(Errc::config, ctx + "." + key + ": wrong type");
  }
}

template <typename T>
T optional(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  return j.at(key).get<T>();
}

BusKind parse_kind(const std::string& s, const std::string& ctx) {
  if (s == "slack") return BusKind::slack;
  if (s == "pv") return BusKind::pv;
  if (s == "pq") return BusKind::pq;
  fail(Errc::config, ctx + ".kind: expected slack|pv|pq, got '" + s + "'");
}

const char* kind_name(BusKind k) {
  switch (k) {
    case BusKind::slack: return "slack";
    case BusKind::pv: return "pv";
    default: return "pq";
  }
}

}  // namespace

int Network::bus_pos(int id) const {
  if (id < 0 || id >= static_cast<int>(bus_pos_by_id.size()) || bus_pos_by_id[static_cast<std::size_t>(id)] < 0)
    fail(Errc::usage, "unknown bus id " + std::to_string(id));
  return bus_pos_by_id[static_cast<std::size_t>(id)];
}

int Network::slack_gen() const {
  for (int g = 0; g < n_gen(); ++g)
    if (gen_bus[static_cast<std::size_t>(g)] == slack) return g;
  fail(Errc::usage, "no generator at the slack bus");
}

double Network::total_pd() const {
  double total = 0.0;
  for (const Bus& b : buses) total += b.pd;
  return total;
}

void Network::rebuild_index() {
  if (base_mva <= 0.0) fail(Errc::config, "base_mva must be positive");
  if (buses.empty()) fail(Errc::config, "buses: empty");
  if (generators.empty()) fail(Errc::config, "generators: empty");
  if (gencosts.size() != generators.size())
    fail(Errc::config, "gencosts: expected " + std::to_string(generators.size()) + " entries, got " +
                           std::to_string(gencosts.size()));

  int max_id = 0;
  for (const Bus& b : buses) max_id = std::max(max_id, b.id);
  bus_pos_by_id.assign(static_cast<std::size_t>(max_id) + 1, -1);

  slack = -1;
  for (int i = 0; i < n_bus(); ++i) {
    const Bus& b = buses[static_cast<std::size_t>(i)];
    const std::string ctx = "buses[" + std::to_string(i) + "]";
    if (b.id <= 0) fail(Errc::config, ctx + ".id: must be a positive integer");
    if (bus_pos_by_id[static_cast<std::size_t>(b.id)] >= 0)
      fail(Errc::config, ctx + ".id: duplicate bus id " + std::to_string(b.id));
    bus_pos_by_id[static_cast<std::size_t>(b.id)] = i;
    if (!(b.vmin > 0.0 && b.vmin < b.vmax))
      fail(Errc::config, ctx + ": voltage bounds require 0 < vmin < vmax");
    if (b.kind == BusKind::slack) {
      if (slack >= 0) fail(Errc::config, ctx + ": multiple slack buses");
      slack = i;
    }
  }
  if (slack < 0) fail(Errc::config, "buses: missing slack bus");

  for (int k = 0; k < n_branch(); ++k) {
    Branch& br = branches[static_cast<std::size_t>(k)];
    const std::string ctx = "branches[" + std::to_string(k) + "]";
    if (br.r == 0.0 && br.x == 0.0) fail(Errc::config, ctx + ": r and x cannot both be zero");
    if (br.smax < 0.0) fail(Errc::config, ctx + ".smax: must be >= 0");
    if (br.tap != 0.0 && br.tap != 1.0)
      fail(Errc::config, ctx + ".tap: off-nominal taps are not supported (got " +
                             std::to_string(br.tap) + ")");
    // resolve endpoints now so later code can index directly
    if (br.from <= 0 || br.from > max_id || bus_pos_by_id[static_cast<std::size_t>(br.from)] < 0)
      fail(Errc::config, ctx + ".from: unknown bus id " + std::to_string(br.from));
    if (br.to <= 0 || br.to > max_id || bus_pos_by_id[static_cast<std::size_t>(br.to)] < 0)
      fail(Errc::config, ctx + ".to: unknown bus id " + std::to_string(br.to));
    if (br.from == br.to) fail(Errc::config, ctx + ": self-loop branch");
  }

  gen_bus.assign(generators.size(), -1);
  bool slack_has_gen = false;
  for (int g = 0; g < n_gen(); ++g) {
    Generator& gen = generators[static_cast<std::size_t>(g)];
    const std::string ctx = "generators[" + std::to_string(g) + "]";
    if (gen.bus <= 0 || gen.bus > max_id || bus_pos_by_id[static_cast<std::size_t>(gen.bus)] < 0)
      fail(Errc::config, ctx + ".bus: unknown bus id " + std::to_string(gen.bus));
    if (gen.pmin > gen.pmax) fail(Errc::config, ctx + ": pmin > pmax");
    if (gen.qmin > gen.qmax) fail(Errc::config, ctx + ": qmin > qmax");
    if (gen.r_up < 0.0 || gen.r_down < 0.0) fail(Errc::config, ctx + ": ramp limits must be >= 0");
    gen_bus[static_cast<std::size_t>(g)] = bus_pos_by_id[static_cast<std::size_t>(gen.bus)];
    if (gen_bus[static_cast<std::size_t>(g)] == slack) slack_has_gen = true;
    const BusKind kind = buses[static_cast<std::size_t>(gen_bus[static_cast<std::size_t>(g)])].kind;
    if (kind == BusKind::pq)
      fail(Errc::config, ctx + ".bus: generator placed on a pq bus " + std::to_string(gen.bus));
  }
  if (!slack_has_gen) fail(Errc::config, "generators: no generator at the slack bus");
  for (int i = 0; i < n_bus(); ++i) {
    const Bus& b = buses[static_cast<std::size_t>(i)];
    if (b.kind == BusKind::pq) continue;
    if (std::find(gen_bus.begin(), gen_bus.end(), i) == gen_bus.end())
      fail(Errc::config, "buses[" + std::to_string(i) + "]: " + kind_name(b.kind) +
                             " bus has no generator");
  }

  load_buses.clear();
  for (int i = 0; i < n_bus(); ++i) {
    const Bus& b = buses[static_cast<std::size_t>(i)];
    if (b.pd != 0.0 || b.qd != 0.0) load_buses.push_back(i);
  }
}

Network parse_case_json(const json& j) {
  Network net;
  net.name = optional<std::string>(j, "name", "");
  net.base_mva = require<double>(j, "case", "base_mva");

  if (!j.contains("buses") || !j["buses"].is_array()) fail(Errc::config, "buses: missing array");
  int i = 0;
  for (const json& jb : j["buses"]) {
    const std::string ctx = "buses[" + std::to_string(i++) + "]";
    Bus b;
    b.id = require<int>(jb, ctx, "id");
    b.kind = parse_kind(require<std::string>(jb, ctx, "kind"), ctx);
    b.pd = require<double>(jb, ctx, "pd");
    b.qd = require<double>(jb, ctx, "qd");
    b.vmin = require<double>(jb, ctx, "vmin");
    b.vmax = require<double>(jb, ctx, "vmax");
    b.gsh = optional<double>(jb, "gsh", 0.0);
    b.bsh = optional<double>(jb, "bsh", 0.0);
    net.buses.push_back(b);
  }

  if (!j.contains("branches") || !j["branches"].is_array()) fail(Errc::config, "branches: missing array");
  i = 0;
  for (const json& jb : j["branches"]) {
    const std::string ctx = "branches[" + std::to_string(i++) + "]";
    Branch br;
    br.from = require<int>(jb, ctx, "from");
    br.to = require<int>(jb, ctx, "to");
    br.r = require<double>(jb, ctx, "r");
    br.x = require<double>(jb, ctx, "x");
    br.b_ch = optional<double>(jb, "b_ch", 0.0);
    br.smax = optional<double>(jb, "smax", 0.0);
    br.tap = optional<double>(jb, "tap", 0.0);
    br.in_service = optional<int>(jb, "status", 1) != 0;
    net.branches.push_back(br);
  }

  if (!j.contains("generators") || !j["generators"].is_array())
    fail(Errc::config, "generators: missing array");
  i = 0;
  for (const json& jg : j["generators"]) {
    const std::string ctx = "generators[" + std::to_string(i++) + "]";
    Generator g;
    g.bus = require<int>(jg, ctx, "bus");
    g.pmin = require<double>(jg, ctx, "pmin");
    g.pmax = require<double>(jg, ctx, "pmax");
    g.qmin = require<double>(jg, ctx, "qmin");
    g.qmax = require<double>(jg, ctx, "qmax");
    // ramp data is absent from published case listings; default to a quarter
    // of the dispatchable range per interval, overridable per generator
    g.r_up = optional<double>(jg, "r_up", 0.25 * (g.pmax - g.pmin));
    g.r_down = optional<double>(jg, "r_down", 0.25 * (g.pmax - g.pmin));
    g.pg0 = optional<double>(jg, "pg0", 0.0);
    g.vg0 = optional<double>(jg, "vg0", 1.0);
    net.generators.push_back(g);
  }

  if (!j.contains("gencosts") || !j["gencosts"].is_array()) fail(Errc::config, "gencosts: missing array");
  i = 0;
  for (const json& jc : j["gencosts"]) {
    const std::string ctx = "gencosts[" + std::to_string(i++) + "]";
    GenCost c;
    c.c2 = require<double>(jc, ctx, "c2");
    c.c1 = require<double>(jc, ctx, "c1");
    c.c0 = require<double>(jc, ctx, "c0");
    if (c.c2 < 0.0) fail(Errc::config, ctx + ".c2: must be >= 0 (convex cost)");
    net.gencosts.push_back(c);
  }

  net.rebuild_index();
  return net;
}

Network parse_case(const std::string& path) { return parse_case_json(load_json(path)); }

json case_to_json(const Network& net) {
  json j;
  j["name"] = net.name;
  j["base_mva"] = net.base_mva;
  j["buses"] = json::array();
  for (const Bus& b : net.buses)
    j["buses"].push_back({{"id", b.id},
                          {"kind", kind_name(b.kind)},
                          {"pd", b.pd},
                          {"qd", b.qd},
                          {"vmin", b.vmin},
                          {"vmax", b.vmax},
                          {"gsh", b.gsh},
                          {"bsh", b.bsh}});
  j["branches"] = json::array();
  for (const Branch& br : net.branches)
    j["branches"].push_back({{"from", br.from},
                             {"to", br.to},
                             {"r", br.r},
                             {"x", br.x},
                             {"b_ch", br.b_ch},
                             {"smax", br.smax},
                             {"tap", br.tap},
                             {"status", br.in_service ? 1 : 0}});
  j["generators"] = json::array();
  for (const Generator& g : net.generators)
    j["generators"].push_back({{"bus", g.bus},
                               {"pmin", g.pmin},
                               {"pmax", g.pmax},
                               {"qmin", g.qmin},
                               {"qmax", g.qmax},
                               {"r_up", g.r_up},
                               {"r_down", g.r_down},
                               {"pg0", g.pg0},
                               {"vg0", g.vg0}});
  j["gencosts"] = json::array();
  for (const GenCost& c : net.gencosts)
    j["gencosts"].push_back({{"c2", c.c2}, {"c1", c.c1}, {"c0", c.c0}});
  return j;
}

void save_case(const Network& net, const std::string& path) {
  atomic_write(path, case_to_json(net).dump(1) + "\n");
}

Eigen::MatrixXcd build_ybus(const Network& net) {
  const int n = net.n_bus();
  Eigen::MatrixXcd y = Eigen::MatrixXcd::Zero(n, n);
  for (const Branch& br : net.branches) {
    if (!br.in_service) continue;
    const int f = net.bus_pos(br.from);
    const int t = net.bus_pos(br.to);
    const std::complex<double> ys = 1.0 / std::complex<double>(br.r, br.x);
    const std::complex<double> bc(0.0, 0.5 * br.b_ch);
    y(f, f) += ys + bc;
    y(t, t) += ys + bc;
    y(f, t) -= ys;
    y(t, f) -= ys;
  }
  for (int i = 0; i < n; ++i)
    y(i, i) += std::complex<double>(net.buses[static_cast<std::size_t>(i)].gsh,
                                    net.buses[static_cast<std::size_t>(i)].bsh);
  return y;
}

bool is_connected(const Network& net) {
  const int n = net.n_bus();
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
  for (const Branch& br : net.branches) {
    if (!br.in_service) continue;
    const int f = net.bus_pos(br.from);
    const int t = net.bus_pos(br.to);
    adj[static_cast<std::size_t>(f)].push_back(t);
    adj[static_cast<std::size_t>(t)].push_back(f);
  }
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  int reached = 1;
  while (!stack.empty()) {
    const int u = stack.back();
    stack.pop_back();
    for (int v : adj[static_cast<std::size_t>(u)]) {
      if (!seen[static_cast<std::size_t>(v)]) {
        seen[static_cast<std::size_t>(v)] = 1;
        ++reached;
        stack.push_back(v);
      }
    }
  }
  return reached == n;
}

Network apply_outage(const Network& net, const std::vector<int>& branch_positions) {
  Network out = net;
  for (int k : branch_positions) {
    if (k < 0 || k >= out.n_branch())
      fail(Errc::usage, "outage: branch index out of range: " + std::to_string(k));
    out.branches[static_cast<std::size_t>(k)].in_service = false;
  }
  if (!is_connected(out)) fail(Errc::usage, "outage splits the network");
  return out;
}

}  // namespace rtopf
