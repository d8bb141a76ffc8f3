#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "regplace/error.hpp"

namespace regplace {

using NodeId = std::int32_t;
using NetId = std::int32_t;
inline constexpr NodeId kNoNode = -1;
inline constexpr NetId kNoNet = -1;

struct Point {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point&, const Point&) = default;
};

inline double manhattan(Point a, Point b) {
  double dx = a.x - b.x;
  double dy = a.y - b.y;
  return (dx < 0 ? -dx : dx) + (dy < 0 ? -dy : dy);
}

struct Die {
  double width = 0.0;
  double height = 0.0;
  bool contains(Point p) const { return p.x >= 0.0 && p.y >= 0.0 && p.x <= width && p.y <= height; }
  Point clamp(Point p) const;
  Point center() const { return {width / 2.0, height / 2.0}; }
  friend bool operator==(const Die&, const Die&) = default;
};

/// Placement site grid: x on multiples of `site_pitch`, y on multiples of `row_height`.
struct Grid {
  double site_pitch = 1.0;
  double row_height = 2.0;
};

enum class NodeKind : std::uint8_t { InputPort, OutputPort, Register, Gate };
enum class GateType : std::uint8_t { INV, BUF, AND2, OR2, NAND2, NOR2, XOR2 };
enum class Pin : std::uint8_t { P, D, Q, A, B, Y };
inline constexpr int kPinSlots = 6;

std::string_view to_string(GateType type);
std::string_view to_string(Pin pin);
std::optional<GateType> parse_gate_type(std::string_view s);
std::optional<Pin> parse_pin(std::string_view s);
int gate_inputs(GateType type);

struct PinRef {
  NodeId node = kNoNode;
  Pin pin = Pin::P;
  friend bool operator==(const PinRef&, const PinRef&) = default;
};

struct Node {
  std::string name;
  NodeKind kind = NodeKind::Gate;
  GateType gate = GateType::BUF;  // meaningful for gates only
  Point location;                 // meaningful for ports only

  bool is_port() const { return kind == NodeKind::InputPort || kind == NodeKind::OutputPort; }
  bool is_movable() const { return !is_port(); }
};

struct Net {
  std::string name;
  PinRef driver;
  std::vector<PinRef> sinks;
};

/// True if `pin` exists on a node of this kind/type.
bool pin_legal(const Node& node, Pin pin);
/// True if the pin can drive a net (input-port P, Q, Y).
bool pin_is_output(const Node& node, Pin pin);

/// Gate-level design over a die rectangle. Built incrementally, then treated as immutable.
class Netlist {
 public:
  Netlist() = default;
  Netlist(std::string name, Die die, double clock_period)
      : name_(std::move(name)), die_(die), clock_period_(clock_period) {}

  NodeId add_input_port(std::string name, Point location);
  NodeId add_output_port(std::string name, Point location);
  NodeId add_register(std::string name);
  NodeId add_gate(std::string name, GateType type);
  NetId add_net(std::string name, PinRef driver, std::vector<PinRef> sinks);

  const std::string& name() const { return name_; }
  const Die& die() const { return die_; }
  double clock_period() const { return clock_period_; }
  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<Net>& nets() const { return nets_; }
  const Node& node(NodeId id) const { return nodes_.at(static_cast<std::size_t>(id)); }
  const Net& net(NetId id) const { return nets_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const { return nodes_.size(); }

  /// First node with this name.
  std::optional<NodeId> find(std::string_view name) const;

  /// Net whose sink list contains (node, pin), or kNoNet.
  NetId net_into(NodeId node, Pin pin) const { return slot(sink_net_, node, pin); }
  /// Net driven by (node, pin), or kNoNet.
  NetId net_out_of(NodeId node, Pin pin) const { return slot(driver_net_, node, pin); }

  /// Node that drives (node, pin) through its net, or kNoNode.
  NodeId driver_of(NodeId node, Pin pin) const;

  std::vector<NodeId> nodes_of(NodeKind kind) const;
  std::vector<NodeId> registers() const { return nodes_of(NodeKind::Register); }
  std::vector<NodeId> gates() const { return nodes_of(NodeKind::Gate); }
  std::vector<NodeId> input_ports() const { return nodes_of(NodeKind::InputPort); }
  std::vector<NodeId> output_ports() const { return nodes_of(NodeKind::OutputPort); }
  std::vector<NodeId> movable() const;

  /// Gates in topological order of the combinational subgraph. Throws on a cycle.
  std::vector<NodeId> comb_order() const;

 private:
  NodeId add_node(Node node);
  NetId slot(const std::vector<NetId>& table, NodeId node, Pin pin) const {
    auto idx = static_cast<std::size_t>(node) * kPinSlots + static_cast<std::size_t>(pin);
    return idx < table.size() ? table[idx] : kNoNet;
  }

  std::string name_;
  Die die_;
  double clock_period_ = 0.0;
  std::vector<Node> nodes_;
  std::vector<Net> nets_;
  std::unordered_map<std::string, NodeId> index_;
  std::vector<NetId> sink_net_;    // first net sinking each pin slot
  std::vector<NetId> driver_net_;  // first net driven by each pin slot
};

// ---- validation -----------------------------------------------------------

enum class DiagCode {
  BadDie,
  BadClock,
  DuplicateName,
  PortOutsideDie,
  IllegalPin,
  PinDirection,
  MultipleDrivers,
  Undriven,
  CombCycle,
};

std::string_view to_string(DiagCode code);

struct Diagnostic {
  DiagCode code;
  std::vector<std::string> names;
  std::string message;
};

/// All invariant violations, in a deterministic order. Empty iff the netlist is valid.
std::vector<Diagnostic> validate(const Netlist& netlist);

class NetlistError : public Error {
 public:
  explicit NetlistError(std::vector<Diagnostic> diagnostics);
  const std::vector<Diagnostic>& diagnostics() const { return diagnostics_; }

 private:
  std::vector<Diagnostic> diagnostics_;
};

// ---- text format (.rnl) ---------------------------------------------------

/// Parses without running validation (unknown names and bad syntax still throw).
Netlist parse_netlist_unchecked(std::string_view text);
/// Parses and validates; throws NetlistError listing every diagnostic.
Netlist parse_netlist(std::string_view text);
std::string write_netlist(const Netlist& netlist);

// ---- placement ------------------------------------------------------------

/// Location per node. Ports carry their fixed netlist coordinates; movable nodes start unset.
class Placement {
 public:
  Placement() = default;
  explicit Placement(const Netlist& netlist);

  Point operator[](NodeId id) const { return points_[static_cast<std::size_t>(id)]; }
  void set(NodeId id, Point p) { points_[static_cast<std::size_t>(id)] = p; }
  bool has(NodeId id) const;
  std::size_t size() const { return points_.size(); }
  const std::vector<Point>& points() const { return points_; }

  friend bool operator==(const Placement&, const Placement&) = default;

 private:
  std::vector<Point> points_;
};

/// Throws Error(Placement) naming missing movable nodes or out-of-die locations.
void validate_placement(const Netlist& netlist, const Placement& placement);

Placement parse_placement(std::string_view text, const Netlist& netlist);
std::string write_placement(const Netlist& netlist, const Placement& placement);

// ---- synthetic benchmarks -------------------------------------------------

struct GenConfig {
  std::string name;  // empty: derived from the seed
  int n_inputs = 16;
  int n_outputs = 16;
  int n_registers = 64;
  int n_stages = 4;
  int max_cone_depth = 4;
  int gates_per_cone = 4;
  Die die{40.0, 40.0};
  double clock_period = 0.6;
  /// Spread of cone inputs around the sink's bit slice, as a fraction of the source
  /// count; 0 draws sources uniformly.
  double locality = 0.1;
  /// Extra input and output ports per stage, on the bottom and top edges above the stage.
  int side_ports = 2;
};

/// Layered pipeline design plus a random legalized initial placement.
std::pair<Netlist, Placement> generate_synthetic(const GenConfig& config, std::uint64_t seed,
                                                 const Grid& grid = {});

}  // namespace regplace
