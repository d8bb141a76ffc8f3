#include "regplace/timing.hpp"

#include <algorithm>
#include <cmath>

#include "regplace/text.hpp"

namespace regplace {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<Pin> input_pins(const Node& n) {
  if (n.kind == NodeKind::Gate) {
    if (gate_inputs(n.gate) == 2) return {Pin::A, Pin::B};
    return {Pin::A};
  }
  return {};
}
}  // namespace

void DelayModel::check() const {
  for (double v : {gate_delay, wire_delay, clk_to_q, setup, input_arrival, output_margin})
    if (!(v >= 0.0)) throw Error(ErrorCode::Domain, "delay model fields must be non-negative");
}

TimingReport sta(const Netlist& nl, const Placement& pl, const DelayModel& model) {
  model.check();
  auto diags = validate(nl);
  if (!diags.empty()) throw NetlistError(std::move(diags));
  validate_placement(nl, pl);

  const std::size_t slots = nl.size() * kPinSlots;
  TimingReport rep;
  rep.arrival.assign(slots, kNaN);
  rep.required.assign(slots, kNaN);
  rep.slack.assign(slots, kNaN);
  rep.register_slack.assign(nl.size(), kNaN);
  auto at = [](NodeId n, Pin p) { return TimingReport::index(n, p); };

  for (NodeId id = 0; id < static_cast<NodeId>(nl.size()); ++id)
    for (int p = 0; p < kPinSlots; ++p)
      if (pin_legal(nl.node(id), static_cast<Pin>(p))) rep.required[at(id, static_cast<Pin>(p))] = kInf;

  // Arrival of a sink pin from its net driver.
  auto sink_arrival = [&](NodeId node, Pin pin) -> double {
    NetId n = nl.net_into(node, pin);
    if (n == kNoNet) return kNaN;
    const PinRef& d = nl.net(n).driver;
    return rep.arrival[at(d.node, d.pin)] + model.wire_delay * manhattan(pl[d.node], pl[node]);
  };

  for (NodeId id : nl.input_ports()) rep.arrival[at(id, Pin::P)] = model.input_arrival;
  for (NodeId id : nl.registers()) rep.arrival[at(id, Pin::Q)] = model.clk_to_q;

  const auto order = nl.comb_order();
  for (NodeId g : order) {
    double worst = -kInf;
    for (Pin p : input_pins(nl.node(g))) {
      double a = sink_arrival(g, p);
      rep.arrival[at(g, p)] = a;
      worst = std::max(worst, a);
    }
    rep.arrival[at(g, Pin::Y)] = worst + model.gate_delay;
  }

  const double period = nl.clock_period();
  for (NodeId id = 0; id < static_cast<NodeId>(nl.size()); ++id) {
    const Node& n = nl.node(id);
    if (n.kind == NodeKind::Register) {
      rep.arrival[at(id, Pin::D)] = sink_arrival(id, Pin::D);
      rep.required[at(id, Pin::D)] = period - model.setup;
      rep.endpoints.push_back({{id, Pin::D}, n.name + ".D", 0, 0, 0});
    } else if (n.kind == NodeKind::OutputPort && nl.net_into(id, Pin::P) != kNoNet) {
      rep.arrival[at(id, Pin::P)] = sink_arrival(id, Pin::P);
      rep.required[at(id, Pin::P)] = period - model.output_margin;
      rep.endpoints.push_back({{id, Pin::P}, n.name, 0, 0, 0});
    }
  }

  // Required time of a driver pin: tightest over its net's sinks.
  auto driver_required = [&](NodeId node, Pin pin) {
    NetId n = nl.net_out_of(node, pin);
    if (n == kNoNet) return kInf;
    double req = kInf;
    for (const PinRef& s : nl.net(n).sinks)
      req = std::min(req, rep.required[at(s.node, s.pin)] - model.wire_delay * manhattan(pl[node], pl[s.node]));
    return req;
  };

  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    NodeId g = *it;
    double ry = driver_required(g, Pin::Y);
    rep.required[at(g, Pin::Y)] = ry;
    for (Pin p : input_pins(nl.node(g))) rep.required[at(g, p)] = ry - model.gate_delay;
  }
  for (NodeId id : nl.registers()) rep.required[at(id, Pin::Q)] = driver_required(id, Pin::Q);
  for (NodeId id : nl.input_ports()) rep.required[at(id, Pin::P)] = driver_required(id, Pin::P);

  for (std::size_t i = 0; i < slots; ++i) {
    if (std::isnan(rep.required[i]) || std::isnan(rep.arrival[i])) continue;
    rep.slack[i] = rep.required[i] == kInf ? kInf : rep.required[i] - rep.arrival[i];
  }

  for (auto& e : rep.endpoints) {
    e.arrival = rep.arrival[at(e.pin.node, e.pin.pin)];
    e.required = rep.required[at(e.pin.node, e.pin.pin)];
    e.slack = rep.slack[at(e.pin.node, e.pin.pin)];
  }
  for (NodeId id : nl.registers())
    rep.register_slack[static_cast<std::size_t>(id)] =
        std::min(rep.slack[at(id, Pin::D)], rep.slack[at(id, Pin::Q)]);

  if (!rep.endpoints.empty()) {
    auto t = tns_wns(rep);
    rep.tns = t.tns;
    rep.wns = t.wns;
  }
  return rep;
}

TnsWns tns_wns(const TimingReport& report) {
  if (report.endpoints.empty()) throw Error(ErrorCode::Domain, "design has no timing endpoints");
  TnsWns out{0.0, kInf};
  for (const auto& e : report.endpoints) {
    out.tns += std::min(e.slack, 0.0);
    out.wns = std::min(out.wns, e.slack);
  }
  return out;
}

double register_worst_slack(const TimingReport& report, const Netlist& nl, std::string_view reg) {
  auto id = nl.find(reg);
  if (!id || nl.node(*id).kind != NodeKind::Register)
    throw Error(ErrorCode::Domain, "unknown register '" + std::string(reg) + "'");
  if (static_cast<std::size_t>(*id) >= report.register_slack.size())
    throw Error(ErrorCode::Domain, "timing report does not match design '" + nl.name() + "'");
  return report.register_slack[static_cast<std::size_t>(*id)];
}

std::string write_timing_text(const TimingReport& report) {
  std::string out;
  for (const auto& e : report.endpoints) out += e.name + " " + text::format_fixed(e.slack, 6) + "\n";
  out += "WNS " + text::format_fixed(report.wns, 6) + " TNS " + text::format_fixed(report.tns, 6) + "\n";
  return out;
}

std::string write_timing_csv(const TimingReport& report) {
  std::string out = "endpoint,arrival,required,slack\n";
  for (const auto& e : report.endpoints)
    out += e.name + "," + text::format_double(e.arrival) + "," + text::format_double(e.required) + "," +
           text::format_double(e.slack) + "\n";
  return out;
}

// ---- TimingGraph ----------------------------------------------------------

TimingGraph::TimingGraph(const Netlist& nl, const DelayModel& model) : model_(model) {
  model.check();
  gates_ = nl.comb_order();
  fanin_offset_.push_back(0);
  for (NodeId g : gates_) {
    for (Pin p : input_pins(nl.node(g))) fanin_.push_back(nl.driver_of(g, p));
    fanin_offset_.push_back(fanin_.size());
  }
  for (NodeId id = 0; id < static_cast<NodeId>(nl.size()); ++id) {
    const Node& n = nl.node(id);
    if (n.kind == NodeKind::InputPort) {
      sources_.push_back(id);
      source_arrival_.push_back(model.input_arrival);
    } else if (n.kind == NodeKind::Register) {
      sources_.push_back(id);
      source_arrival_.push_back(model.clk_to_q);
      endpoints_.push_back({id, nl.driver_of(id, Pin::D), nl.clock_period() - model.setup});
    } else if (n.kind == NodeKind::OutputPort && nl.net_into(id, Pin::P) != kNoNet) {
      endpoints_.push_back({id, nl.driver_of(id, Pin::P), nl.clock_period() - model.output_margin});
    }
  }
  out_arrival_.assign(nl.size(), 0.0);
}

TnsWns TimingGraph::evaluate(const std::vector<Point>& loc) const {
  for (std::size_t i = 0; i < sources_.size(); ++i)
    out_arrival_[static_cast<std::size_t>(sources_[i])] = source_arrival_[i];
  const double w = model_.wire_delay;
  for (std::size_t i = 0; i < gates_.size(); ++i) {
    auto g = static_cast<std::size_t>(gates_[i]);
    double worst = -kInf;
    for (std::size_t k = fanin_offset_[i]; k < fanin_offset_[i + 1]; ++k) {
      auto d = static_cast<std::size_t>(fanin_[k]);
      worst = std::max(worst, out_arrival_[d] + w * manhattan(loc[d], loc[g]));
    }
    out_arrival_[g] = worst + model_.gate_delay;
  }
  TnsWns out{0.0, kInf};
  for (const auto& e : endpoints_) {
    auto d = static_cast<std::size_t>(e.driver);
    auto n = static_cast<std::size_t>(e.node);
    double slack = e.required - (out_arrival_[d] + w * manhattan(loc[d], loc[n]));
    out.tns += std::min(slack, 0.0);
    out.wns = std::min(out.wns, slack);
  }
  return out;
}

}  // namespace regplace
