#pragma once

// Independent reference implementations used by the unit tests and the acceptance
// runner. They enumerate paths explicitly instead of relying on topological DPs, so
// they share no traversal code with the library.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "regplace/features.hpp"
#include "regplace/netlist.hpp"
#include "regplace/place.hpp"
#include "regplace/timing.hpp"

namespace oracle {

using namespace regplace;

inline std::vector<Pin> inputs_of(const Node& n) {
  if (n.kind == NodeKind::Gate) return gate_inputs(n.gate) == 2 ? std::vector<Pin>{Pin::A, Pin::B} : std::vector<Pin>{Pin::A};
  if (n.kind == NodeKind::Register) return {Pin::D};
  if (n.kind == NodeKind::OutputPort) return {Pin::P};
  return {};
}

inline Pin output_of(const Node& n) {
  return n.kind == NodeKind::Register ? Pin::Q : n.kind == NodeKind::Gate ? Pin::Y : Pin::P;
}

/// Sequentially acyclic random design: every node's inputs come from nodes created
/// earlier, so the register graph is a DAG and every path is simple.
inline Netlist random_design(std::uint64_t seed, int max_nodes = 60) {
  std::mt19937_64 rng(seed);
  auto uni = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  const double w = 40.0, h = 40.0;
  Netlist nl("rand" + std::to_string(seed), {w, h}, 0.2 + 0.1 * uni(0, 10));

  const int n_in = uni(1, 4), n_out = uni(1, 4), n_reg = uni(1, 6);
  const int n_gate = std::min(uni(0, 24), max_nodes - n_in - n_out - n_reg);
  auto edge_point = [&]() -> Point {
    double t = uni(0, 40);
    switch (uni(0, 3)) {
      case 0: return {0.0, t};
      case 1: return {w, t};
      case 2: return {t, 0.0};
      default: return {t, h};
    }
  };

  std::vector<PinRef> pool;
  for (int i = 0; i < n_in; ++i) pool.push_back({nl.add_input_port("in" + std::to_string(i), edge_point()), Pin::P});
  std::vector<NodeId> outs;
  for (int i = 0; i < n_out; ++i) outs.push_back(nl.add_output_port("out" + std::to_string(i), edge_point()));

  std::map<std::pair<NodeId, Pin>, std::vector<PinRef>> fanout;
  auto pick = [&]() {
    // Mostly recent drivers, so that paths get deep.
    std::size_t n = pool.size();
    std::size_t lo = uni(0, 9) < 7 && n > 6 ? n - 6 : 0;
    return pool[static_cast<std::size_t>(uni(static_cast<int>(lo), static_cast<int>(n - 1)))];
  };
  std::vector<bool> is_reg(static_cast<std::size_t>(n_reg + n_gate), false);
  for (int i = 0; i < n_reg; ++i) is_reg[static_cast<std::size_t>(i)] = true;
  std::shuffle(is_reg.begin(), is_reg.end(), rng);
  int ri = 0, gi = 0;
  const GateType types[] = {GateType::INV, GateType::BUF, GateType::AND2, GateType::OR2,
                            GateType::NAND2, GateType::NOR2, GateType::XOR2};
  for (bool reg : is_reg) {
    if (reg) {
      NodeId r = nl.add_register("r" + std::to_string(ri++));
      PinRef d = pick();
      fanout[{d.node, d.pin}].push_back({r, Pin::D});
      pool.push_back({r, Pin::Q});
    } else {
      GateType t = types[uni(0, 6)];
      NodeId g = nl.add_gate("g" + std::to_string(gi++), t);
      for (Pin p : {Pin::A, Pin::B}) {
        if (p == Pin::B && gate_inputs(t) == 1) break;
        PinRef d = pick();
        fanout[{d.node, d.pin}].push_back({g, p});
      }
      pool.push_back({g, Pin::Y});
    }
  }
  for (NodeId o : outs) {
    PinRef d = pick();
    fanout[{d.node, d.pin}].push_back({o, Pin::P});
  }
  int k = 0;
  for (auto& [drv, sinks] : fanout) nl.add_net("n" + std::to_string(k++), {drv.first, drv.second}, sinks);
  return nl;
}

/// Sinks of the net driven by (node, pin).
inline std::vector<PinRef> sinks_of(const Netlist& nl, NodeId node, Pin pin) {
  for (const Net& n : nl.nets())
    if (n.driver.node == node && n.driver.pin == pin) return n.sinks;
  return {};
}

/// Driver of the net sinking (node, pin), or node = kNoNode.
inline PinRef driver_into(const Netlist& nl, NodeId node, Pin pin) {
  for (const Net& n : nl.nets())
    for (const PinRef& s : n.sinks)
      if (s.node == node && s.pin == pin) return n.driver;
  return {};
}

/// Max gate count over every path from the input port to each register's D pin,
/// crossing at most `s` registers on the way. -1 where no path exists.
inline std::map<NodeId, int> enum_source_depths(const Netlist& nl, NodeId port, int s) {
  std::map<NodeId, int> best;
  std::function<void(NodeId, Pin, int, int)> walk = [&](NodeId node, Pin out, int gates, int crossings) {
    for (const PinRef& sink : sinks_of(nl, node, out)) {
      const Node& n = nl.node(sink.node);
      if (n.kind == NodeKind::Gate) {
        walk(sink.node, Pin::Y, gates + 1, crossings);
      } else if (n.kind == NodeKind::Register) {
        auto [it, fresh] = best.emplace(sink.node, gates);
        if (!fresh) it->second = std::max(it->second, gates);
        if (crossings < s) walk(sink.node, Pin::Q, gates, crossings + 1);
      }
    }
  };
  walk(port, Pin::P, 0, 0);
  return best;
}

/// Mirror of enum_source_depths, walking backwards from an output port to register Q pins.
inline std::map<NodeId, int> enum_sink_depths(const Netlist& nl, NodeId port, int s) {
  std::map<NodeId, int> best;
  std::function<void(NodeId, Pin, int, int)> walk = [&](NodeId node, Pin in, int gates, int crossings) {
    PinRef d = driver_into(nl, node, in);
    if (d.node == kNoNode) return;
    const Node& n = nl.node(d.node);
    if (n.kind == NodeKind::Gate) {
      for (Pin p : inputs_of(n)) walk(d.node, p, gates + 1, crossings);
    } else if (n.kind == NodeKind::Register) {
      auto [it, fresh] = best.emplace(d.node, gates);
      if (!fresh) it->second = std::max(it->second, gates);
      if (crossings < s) walk(d.node, Pin::D, gates, crossings + 1);
    }
  };
  walk(port, Pin::P, 0, 0);
  return best;
}

/// Every (input port, output port) candidate through `reg`, sorted deepest first with
/// name tie-breaks, cut or zero-padded to k entries.
inline std::vector<Chain> enum_chains(const Netlist& nl, NodeId reg, int k, int s) {
  struct Cand {
    Chain c;
    std::string in, out;
  };
  std::vector<Cand> all;
  for (NodeId p : nl.input_ports()) {
    auto up = enum_source_depths(nl, p, s);
    if (!up.count(reg)) continue;
    for (NodeId q : nl.output_ports()) {
      auto down = enum_sink_depths(nl, q, s);
      if (!down.count(reg)) continue;
      const Node& a = nl.node(p);
      const Node& b = nl.node(q);
      all.push_back({{a.location.x, a.location.y, up[reg] + down[reg], b.location.x, b.location.y}, a.name, b.name});
    }
  }
  std::sort(all.begin(), all.end(), [](const Cand& x, const Cand& y) {
    if (x.c.depth != y.c.depth) return x.c.depth > y.c.depth;
    if (x.in != y.in) return x.in < y.in;
    return x.out < y.out;
  });
  std::vector<Chain> out;
  for (const Cand& c : all)
    if (static_cast<int>(out.size()) < k) out.push_back(c.c);
  out.resize(static_cast<std::size_t>(k));
  return out;
}

/// Arrival at every pin as the maximum over explicitly enumerated launch-to-pin paths.
/// Pins no path reaches are absent.
inline std::map<std::pair<NodeId, Pin>, double> enum_arrivals(const Netlist& nl, const Placement& pl,
                                                              const DelayModel& m) {
  std::map<std::pair<NodeId, Pin>, double> best;
  auto record = [&](NodeId n, Pin p, double t) {
    auto [it, fresh] = best.emplace(std::make_pair(n, p), t);
    if (!fresh) it->second = std::max(it->second, t);
  };
  std::function<void(NodeId, Pin, double)> walk = [&](NodeId node, Pin out, double t) {
    record(node, out, t);
    for (const PinRef& sink : sinks_of(nl, node, out)) {
      double ts = t + m.wire_delay * (std::abs(pl[node].x - pl[sink.node].x) + std::abs(pl[node].y - pl[sink.node].y));
      record(sink.node, sink.pin, ts);
      if (nl.node(sink.node).kind == NodeKind::Gate) walk(sink.node, Pin::Y, ts + m.gate_delay);
    }
  };
  for (NodeId p : nl.input_ports()) walk(p, Pin::P, m.input_arrival);
  for (NodeId r : nl.registers()) walk(r, Pin::Q, m.clk_to_q);
  return best;
}

/// Cell-level legality: on the grid, inside the die, one cell per site.
inline bool legal(const Netlist& nl, const Placement& pl, const Grid& g, std::string* why = nullptr) {
  std::set<std::pair<long, long>> taken;
  const double cols = std::floor(nl.die().width / g.site_pitch + 1e-9);
  const double rows = std::floor(nl.die().height / g.row_height + 1e-9);
  for (NodeId id : nl.movable()) {
    Point p = pl[id];
    double c = p.x / g.site_pitch, r = p.y / g.row_height;
    auto fail = [&](const std::string& msg) {
      if (why) *why = nl.node(id).name + ": " + msg;
      return false;
    };
    if (std::abs(c - std::round(c)) > 1e-9 || std::abs(r - std::round(r)) > 1e-9) return fail("off grid");
    if (std::round(c) < 0 || std::round(c) >= cols || std::round(r) < 0 || std::round(r) >= rows)
      return fail("outside the die");
    if (!taken.insert({std::lround(c), std::lround(r)}).second) return fail("overlap");
  }
  return true;
}

}  // namespace oracle
