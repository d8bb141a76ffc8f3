#pragma once

#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "regplace/netlist.hpp"

namespace regplace {

/// Linear delay model: constant per-gate delay plus wire delay proportional to Manhattan length.
struct DelayModel {
  double gate_delay = 0.1;   // ns per gate
  double wire_delay = 0.01;  // ns per um
  double clk_to_q = 0.1;
  double setup = 0.05;
  double input_arrival = 0.0;
  double output_margin = 0.0;

  void check() const;
};

struct Endpoint {
  PinRef pin;
  std::string name;  // "reg.D" or output port name
  double arrival = 0.0;
  double required = 0.0;
  double slack = 0.0;
};

struct TnsWns {
  double tns = 0.0;
  double wns = 0.0;
};

/// Setup-timing result. Per-pin tables are indexed by node * kPinSlots + pin;
/// pins that do not exist hold NaN, unconstrained pins have +inf required/slack.
struct TimingReport {
  std::vector<double> arrival;
  std::vector<double> required;
  std::vector<double> slack;
  std::vector<Endpoint> endpoints;
  std::vector<double> register_slack;  // per node; NaN for non-registers
  double wns = 0.0;
  double tns = 0.0;

  double arrival_at(NodeId n, Pin p) const { return arrival[index(n, p)]; }
  double required_at(NodeId n, Pin p) const { return required[index(n, p)]; }
  double slack_at(NodeId n, Pin p) const { return slack[index(n, p)]; }

  static std::size_t index(NodeId n, Pin p) {
    return static_cast<std::size_t>(n) * kPinSlots + static_cast<std::size_t>(p);
  }
};

TimingReport sta(const Netlist& netlist, const Placement& placement, const DelayModel& model);

/// Throws when the design has no endpoints.
TnsWns tns_wns(const TimingReport& report);

/// min(slack(r.D), slack(r.Q)).
double register_worst_slack(const TimingReport& report, const Netlist& netlist, std::string_view reg);

/// `ENDPOINT SLACK` lines and a `WNS x TNS y` footer.
std::string write_timing_text(const TimingReport& report);
/// endpoint,arrival,required,slack
std::string write_timing_csv(const TimingReport& report);

/// Compiled arrival propagation for repeated TNS evaluation while cells move.
/// Holds scratch state: one instance per thread.
class TimingGraph {
 public:
  TimingGraph(const Netlist& netlist, const DelayModel& model);

  TnsWns evaluate(const std::vector<Point>& locations) const;
  bool has_endpoints() const { return !endpoints_.empty(); }

 private:
  struct EndpointRef {
    NodeId node;
    NodeId driver;
    double required;
  };
  DelayModel model_;
  std::vector<NodeId> gates_;
  std::vector<std::size_t> fanin_offset_;
  std::vector<NodeId> fanin_;
  std::vector<NodeId> sources_;
  std::vector<double> source_arrival_;
  std::vector<EndpointRef> endpoints_;
  mutable std::vector<double> out_arrival_;
};

}  // namespace regplace
