#include "regplace/netlist.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "regplace/text.hpp"

namespace regplace {

namespace {

constexpr std::array<std::string_view, 7> kGateNames = {"INV", "BUF", "AND2", "OR2", "NAND2", "NOR2", "XOR2"};
constexpr std::array<std::string_view, kPinSlots> kPinNames = {"P", "D", "Q", "A", "B", "Y"};

std::size_t slot_index(NodeId node, Pin pin) {
  return static_cast<std::size_t>(node) * kPinSlots + static_cast<std::size_t>(pin);
}

std::string pin_label(const Netlist& nl, PinRef ref) {
  const Node& n = nl.node(ref.node);
  if (n.is_port()) return n.name;
  return n.name + "." + std::string(to_string(ref.pin));
}

}  // namespace

Point Die::clamp(Point p) const {
  return {std::clamp(p.x, 0.0, width), std::clamp(p.y, 0.0, height)};
}

std::string_view to_string(GateType type) { return kGateNames[static_cast<std::size_t>(type)]; }
std::string_view to_string(Pin pin) { return kPinNames[static_cast<std::size_t>(pin)]; }

std::optional<GateType> parse_gate_type(std::string_view s) {
  for (std::size_t i = 0; i < kGateNames.size(); ++i)
    if (kGateNames[i] == s) return static_cast<GateType>(i);
  return std::nullopt;
}

std::optional<Pin> parse_pin(std::string_view s) {
  for (std::size_t i = 0; i < kPinNames.size(); ++i)
    if (kPinNames[i] == s) return static_cast<Pin>(i);
  return std::nullopt;
}

int gate_inputs(GateType type) { return (type == GateType::INV || type == GateType::BUF) ? 1 : 2; }

bool pin_legal(const Node& node, Pin pin) {
  switch (node.kind) {
    case NodeKind::InputPort:
    case NodeKind::OutputPort: return pin == Pin::P;
    case NodeKind::Register: return pin == Pin::D || pin == Pin::Q;
    case NodeKind::Gate:
      return pin == Pin::A || pin == Pin::Y || (pin == Pin::B && gate_inputs(node.gate) == 2);
  }
  return false;
}

bool pin_is_output(const Node& node, Pin pin) {
  switch (node.kind) {
    case NodeKind::InputPort: return pin == Pin::P;
    case NodeKind::OutputPort: return false;
    case NodeKind::Register: return pin == Pin::Q;
    case NodeKind::Gate: return pin == Pin::Y;
  }
  return false;
}

// ---- Netlist --------------------------------------------------------------

NodeId Netlist::add_node(Node node) {
  auto id = static_cast<NodeId>(nodes_.size());
  index_.try_emplace(node.name, id);
  nodes_.push_back(std::move(node));
  sink_net_.resize(nodes_.size() * kPinSlots, kNoNet);
  driver_net_.resize(nodes_.size() * kPinSlots, kNoNet);
  return id;
}

NodeId Netlist::add_input_port(std::string name, Point location) {
  return add_node({std::move(name), NodeKind::InputPort, GateType::BUF, location});
}

NodeId Netlist::add_output_port(std::string name, Point location) {
  return add_node({std::move(name), NodeKind::OutputPort, GateType::BUF, location});
}

NodeId Netlist::add_register(std::string name) {
  return add_node({std::move(name), NodeKind::Register, GateType::BUF, {}});
}

NodeId Netlist::add_gate(std::string name, GateType type) {
  return add_node({std::move(name), NodeKind::Gate, type, {}});
}

NetId Netlist::add_net(std::string name, PinRef driver, std::vector<PinRef> sinks) {
  auto id = static_cast<NetId>(nets_.size());
  auto check = [&](PinRef r) {
    if (r.node < 0 || static_cast<std::size_t>(r.node) >= nodes_.size())
      throw Error(ErrorCode::Domain, "net '" + name + "' references an unknown node id");
  };
  check(driver);
  for (const auto& s : sinks) check(s);
  if (driver_net_[slot_index(driver.node, driver.pin)] == kNoNet)
    driver_net_[slot_index(driver.node, driver.pin)] = id;
  for (const auto& s : sinks)
    if (sink_net_[slot_index(s.node, s.pin)] == kNoNet) sink_net_[slot_index(s.node, s.pin)] = id;
  nets_.push_back({std::move(name), driver, std::move(sinks)});
  return id;
}

std::optional<NodeId> Netlist::find(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

NodeId Netlist::driver_of(NodeId node, Pin pin) const {
  NetId n = net_into(node, pin);
  return n == kNoNet ? kNoNode : nets_[static_cast<std::size_t>(n)].driver.node;
}

std::vector<NodeId> Netlist::nodes_of(NodeKind kind) const {
  std::vector<NodeId> out;
  for (std::size_t i = 0; i < nodes_.size(); ++i)
    if (nodes_[i].kind == kind) out.push_back(static_cast<NodeId>(i));
  return out;
}

std::vector<NodeId> Netlist::movable() const {
  std::vector<NodeId> out;
  for (std::size_t i = 0; i < nodes_.size(); ++i)
    if (nodes_[i].is_movable()) out.push_back(static_cast<NodeId>(i));
  return out;
}

namespace {

// gate -> gate fanout edges of the combinational subgraph, one entry per (net, sink).
std::vector<std::vector<NodeId>> comb_fanout(const Netlist& nl) {
  std::vector<std::vector<NodeId>> out(nl.size());
  for (const Net& net : nl.nets()) {
    const Node& d = nl.node(net.driver.node);
    if (d.kind != NodeKind::Gate || net.driver.pin != Pin::Y) continue;
    for (const PinRef& s : net.sinks) {
      const Node& sn = nl.node(s.node);
      if (sn.kind == NodeKind::Gate && (s.pin == Pin::A || s.pin == Pin::B))
        out[static_cast<std::size_t>(net.driver.node)].push_back(s.node);
    }
  }
  return out;
}

// One cycle of the gate graph, in traversal order, or empty.
std::vector<NodeId> find_cycle(const Netlist& nl) {
  auto fanout = comb_fanout(nl);
  enum : std::uint8_t { White, Grey, Black };
  std::vector<std::uint8_t> colour(nl.size(), White);
  std::vector<NodeId> path;
  std::vector<std::size_t> next;
  for (NodeId root = 0; root < static_cast<NodeId>(nl.size()); ++root) {
    if (nl.node(root).kind != NodeKind::Gate || colour[static_cast<std::size_t>(root)] != White) continue;
    path = {root};
    next = {0};
    colour[static_cast<std::size_t>(root)] = Grey;
    while (!path.empty()) {
      NodeId u = path.back();
      auto& edges = fanout[static_cast<std::size_t>(u)];
      if (next.back() == edges.size()) {
        colour[static_cast<std::size_t>(u)] = Black;
        path.pop_back();
        next.pop_back();
        continue;
      }
      NodeId v = edges[next.back()++];
      if (colour[static_cast<std::size_t>(v)] == Grey) {
        auto it = std::find(path.begin(), path.end(), v);
        return {it, path.end()};
      }
      if (colour[static_cast<std::size_t>(v)] == White) {
        colour[static_cast<std::size_t>(v)] = Grey;
        path.push_back(v);
        next.push_back(0);
      }
    }
  }
  return {};
}

}  // namespace

std::vector<NodeId> Netlist::comb_order() const {
  auto fanout = comb_fanout(*this);
  std::vector<int> indeg(nodes_.size(), 0);
  for (const auto& edges : fanout)
    for (NodeId v : edges) ++indeg[static_cast<std::size_t>(v)];
  std::vector<NodeId> order;
  std::vector<NodeId> ready;
  for (std::size_t i = 0; i < nodes_.size(); ++i)
    if (nodes_[i].kind == NodeKind::Gate && indeg[i] == 0) ready.push_back(static_cast<NodeId>(i));
  // FIFO over ascending ids keeps the order deterministic
  for (std::size_t head = 0; head < ready.size(); ++head) {
    NodeId u = ready[head];
    order.push_back(u);
    for (NodeId v : fanout[static_cast<std::size_t>(u)])
      if (--indeg[static_cast<std::size_t>(v)] == 0) ready.push_back(v);
  }
  std::size_t n_gates = 0;
  for (const auto& n : nodes_) n_gates += n.kind == NodeKind::Gate;
  if (order.size() != n_gates) throw Error(ErrorCode::Validation, "combinational cycle in '" + name_ + "'");
  return order;
}

// ---- validation -----------------------------------------------------------

std::string_view to_string(DiagCode code) {
  switch (code) {
    case DiagCode::BadDie: return "BAD_DIE";
    case DiagCode::BadClock: return "BAD_CLOCK";
    case DiagCode::DuplicateName: return "DUPLICATE_NAME";
    case DiagCode::PortOutsideDie: return "PORT_OUTSIDE_DIE";
    case DiagCode::IllegalPin: return "ILLEGAL_PIN";
    case DiagCode::PinDirection: return "PIN_DIRECTION";
    case DiagCode::MultipleDrivers: return "MULTIPLE_DRIVERS";
    case DiagCode::Undriven: return "UNDRIVEN";
    case DiagCode::CombCycle: return "COMB_CYCLE";
  }
  return "UNKNOWN";
}

std::vector<Diagnostic> validate(const Netlist& nl) {
  std::vector<Diagnostic> out;
  auto emit = [&](DiagCode code, std::vector<std::string> names, std::string msg) {
    out.push_back({code, std::move(names), std::move(msg)});
  };

  if (!(nl.die().width > 0.0) || !(nl.die().height > 0.0))
    emit(DiagCode::BadDie, {}, "die dimensions must be positive");
  if (!(nl.clock_period() > 0.0)) emit(DiagCode::BadClock, {}, "clock period must be positive");

  std::map<std::string, int> seen;
  for (const Node& n : nl.nodes())
    if (++seen[n.name] == 2) emit(DiagCode::DuplicateName, {n.name}, "duplicate node name '" + n.name + "'");

  for (const Node& n : nl.nodes())
    if (n.is_port() && !nl.die().contains(n.location))
      emit(DiagCode::PortOutsideDie, {n.name}, "port '" + n.name + "' lies outside the die");

  bool pins_ok = true;
  std::vector<std::vector<NetId>> sinking(nl.size() * kPinSlots);
  std::vector<std::vector<NetId>> driving(nl.size() * kPinSlots);
  for (NetId id = 0; id < static_cast<NetId>(nl.nets().size()); ++id) {
    const Net& net = nl.net(id);
    const Node& d = nl.node(net.driver.node);
    if (!pin_legal(d, net.driver.pin)) {
      pins_ok = false;
      emit(DiagCode::IllegalPin, {net.name, pin_label(nl, net.driver)},
           "net '" + net.name + "': pin " + pin_label(nl, net.driver) + " does not exist");
    } else if (!pin_is_output(d, net.driver.pin)) {
      pins_ok = false;
      emit(DiagCode::PinDirection, {net.name, pin_label(nl, net.driver)},
           "net '" + net.name + "': driver " + pin_label(nl, net.driver) + " is not an output");
    } else {
      driving[slot_index(net.driver.node, net.driver.pin)].push_back(id);
    }
    for (const PinRef& s : net.sinks) {
      const Node& sn = nl.node(s.node);
      if (!pin_legal(sn, s.pin)) {
        pins_ok = false;
        emit(DiagCode::IllegalPin, {net.name, pin_label(nl, s)},
             "net '" + net.name + "': pin " + pin_label(nl, s) + " does not exist");
      } else if (pin_is_output(sn, s.pin)) {
        pins_ok = false;
        emit(DiagCode::PinDirection, {net.name, pin_label(nl, s)},
             "net '" + net.name + "': sink " + pin_label(nl, s) + " is not an input");
      } else {
        sinking[slot_index(s.node, s.pin)].push_back(id);
      }
    }
  }

  for (std::size_t slot = 0; slot < sinking.size(); ++slot) {
    PinRef ref{static_cast<NodeId>(slot / kPinSlots), static_cast<Pin>(slot % kPinSlots)};
    if (sinking[slot].size() > 1) {
      std::vector<std::string> names{pin_label(nl, ref)};
      for (NetId n : sinking[slot]) names.push_back(nl.net(n).name);
      emit(DiagCode::MultipleDrivers, names, "pin " + pin_label(nl, ref) + " is driven by more than one net");
    }
    if (driving[slot].size() > 1) {
      std::vector<std::string> names{pin_label(nl, ref)};
      for (NetId n : driving[slot]) names.push_back(nl.net(n).name);
      emit(DiagCode::MultipleDrivers, names, "pin " + pin_label(nl, ref) + " drives more than one net");
    }
  }

  for (NodeId id = 0; id < static_cast<NodeId>(nl.size()); ++id) {
    const Node& n = nl.node(id);
    std::vector<Pin> required;
    if (n.kind == NodeKind::Register) required = {Pin::D};
    if (n.kind == NodeKind::Gate) {
      required = {Pin::A};
      if (gate_inputs(n.gate) == 2) required.push_back(Pin::B);
    }
    for (Pin p : required)
      if (sinking[slot_index(id, p)].empty())
        emit(DiagCode::Undriven, {n.name + "." + std::string(to_string(p))},
             "pin " + n.name + "." + std::string(to_string(p)) + " is undriven");
  }

  if (pins_ok) {
    auto cycle = find_cycle(nl);
    if (!cycle.empty()) {
      std::vector<std::string> names;
      std::string msg = "combinational cycle:";
      for (NodeId id : cycle) {
        names.push_back(nl.node(id).name);
        msg += " " + nl.node(id).name;
      }
      emit(DiagCode::CombCycle, names, msg);
    }
  }
  return out;
}

NetlistError::NetlistError(std::vector<Diagnostic> diagnostics)
    : Error(ErrorCode::Validation,
            [&] {
              std::string msg;
              for (const auto& d : diagnostics) {
                if (!msg.empty()) msg += "; ";
                msg += std::string(to_string(d.code)) + ": " + d.message;
              }
              return msg;
            }()),
      diagnostics_(std::move(diagnostics)) {}

// ---- .rnl text format -----------------------------------------------------

namespace {

[[noreturn]] void syntax_error(int line, int column, const std::string& msg) {
  throw Error(ErrorCode::Parse, "line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + msg);
}

double number(const text::Token& tok, int line) {
  double v = 0.0;
  if (!text::parse_double(tok.text, v)) syntax_error(line, tok.column, "expected a number, got '" + std::string(tok.text) + "'");
  return v;
}

}  // namespace

Netlist parse_netlist_unchecked(std::string_view source) {
  struct PendingNet {
    int line;
    std::vector<text::Token> tokens;
  };
  std::optional<std::string> design;
  std::optional<Die> die;
  std::optional<double> clock;
  struct PendingNode {
    int line;
    std::vector<text::Token> tokens;
  };
  std::vector<PendingNode> node_lines;
  std::vector<PendingNet> net_lines;

  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= source.size()) {
    auto end = source.find('\n', pos);
    if (end == std::string_view::npos) end = source.size();
    std::string_view line = source.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    auto toks = text::tokenize(line);
    if (toks.empty()) {
      if (end == source.size()) break;
      continue;
    }
    std::string_view kw = toks[0].text;
    auto expect_count = [&](std::size_t n) {
      if (toks.size() != n)
        syntax_error(line_no, toks[std::min(toks.size(), n) - 1].column,
                     "'" + std::string(kw) + "' expects " + std::to_string(n - 1) + " arguments");
    };
    if (kw == "design") {
      expect_count(2);
      if (design) syntax_error(line_no, toks[0].column, "repeated 'design'");
      design = std::string(toks[1].text);
    } else if (kw == "die") {
      expect_count(3);
      if (die) syntax_error(line_no, toks[0].column, "repeated 'die'");
      die = Die{number(toks[1], line_no), number(toks[2], line_no)};
    } else if (kw == "clock") {
      expect_count(2);
      if (clock) syntax_error(line_no, toks[0].column, "repeated 'clock'");
      clock = number(toks[1], line_no);
    } else if (kw == "port") {
      expect_count(5);
      if (toks[2].text != "in" && toks[2].text != "out")
        syntax_error(line_no, toks[2].column, "port direction must be 'in' or 'out'");
      number(toks[3], line_no);
      number(toks[4], line_no);
      node_lines.push_back({line_no, toks});
    } else if (kw == "reg") {
      expect_count(2);
      node_lines.push_back({line_no, toks});
    } else if (kw == "gate") {
      expect_count(3);
      if (!parse_gate_type(toks[2].text))
        syntax_error(line_no, toks[2].column, "unknown gate type '" + std::string(toks[2].text) + "'");
      node_lines.push_back({line_no, toks});
    } else if (kw == "net") {
      if (toks.size() < 3) syntax_error(line_no, toks[0].column, "'net' expects a name, a driver and sinks");
      net_lines.push_back({line_no, toks});
    } else {
      syntax_error(line_no, toks[0].column, "unknown keyword '" + std::string(kw) + "'");
    }
    if (end == source.size()) break;
  }
  if (!design) syntax_error(line_no, 1, "missing 'design' line");
  if (!die) syntax_error(line_no, 1, "missing 'die' line");
  if (!clock) syntax_error(line_no, 1, "missing 'clock' line");

  Netlist nl(*design, *die, *clock);
  for (const auto& pn : node_lines) {
    const auto& t = pn.tokens;
    std::string name(t[1].text);
    if (t[0].text == "port") {
      Point p{number(t[3], pn.line), number(t[4], pn.line)};
      if (t[2].text == "in")
        nl.add_input_port(name, p);
      else
        nl.add_output_port(name, p);
    } else if (t[0].text == "reg") {
      nl.add_register(name);
    } else {
      nl.add_gate(name, *parse_gate_type(t[2].text));
    }
  }

  auto resolve = [&](const text::Token& tok, int line) -> PinRef {
    std::string_view s = tok.text;
    auto dot = s.rfind('.');
    std::string_view owner = dot == std::string_view::npos ? s : s.substr(0, dot);
    auto id = nl.find(owner);
    if (!id) syntax_error(line, tok.column, "unknown node '" + std::string(owner) + "'");
    if (dot == std::string_view::npos) {
      if (!nl.node(*id).is_port())
        syntax_error(line, tok.column, "'" + std::string(owner) + "' is not a port; write NAME.PIN");
      return {*id, Pin::P};
    }
    auto pin = parse_pin(s.substr(dot + 1));
    if (!pin) syntax_error(line, tok.column, "unknown pin '" + std::string(s.substr(dot + 1)) + "'");
    return {*id, *pin};
  };

  for (const auto& pn : net_lines) {
    const auto& t = pn.tokens;
    PinRef driver = resolve(t[2], pn.line);
    std::vector<PinRef> sinks;
    for (std::size_t i = 3; i < t.size(); ++i) sinks.push_back(resolve(t[i], pn.line));
    nl.add_net(std::string(t[1].text), driver, std::move(sinks));
  }
  return nl;
}

Netlist parse_netlist(std::string_view text) {
  Netlist nl = parse_netlist_unchecked(text);
  auto diags = validate(nl);
  if (!diags.empty()) throw NetlistError(std::move(diags));
  return nl;
}

std::string write_netlist(const Netlist& nl) {
  using text::format_double;
  std::string out;
  out += "design " + nl.name() + "\n";
  out += "die " + format_double(nl.die().width) + " " + format_double(nl.die().height) + "\n";
  out += "clock " + format_double(nl.clock_period()) + "\n";
  for (const Node& n : nl.nodes()) {
    switch (n.kind) {
      case NodeKind::InputPort:
      case NodeKind::OutputPort:
        out += "port " + n.name + (n.kind == NodeKind::InputPort ? " in " : " out ") + format_double(n.location.x) +
               " " + format_double(n.location.y) + "\n";
        break;
      case NodeKind::Register: out += "reg " + n.name + "\n"; break;
      case NodeKind::Gate: out += "gate " + n.name + " " + std::string(to_string(n.gate)) + "\n"; break;
    }
  }
  for (const Net& net : nl.nets()) {
    out += "net " + net.name + " " + pin_label(nl, net.driver);
    for (const PinRef& s : net.sinks) out += " " + pin_label(nl, s);
    out += "\n";
  }
  return out;
}

// ---- placement ------------------------------------------------------------

Placement::Placement(const Netlist& netlist) {
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  points_.assign(netlist.size(), Point{nan, nan});
  for (NodeId id = 0; id < static_cast<NodeId>(netlist.size()); ++id)
    if (netlist.node(id).is_port()) points_[static_cast<std::size_t>(id)] = netlist.node(id).location;
}

bool Placement::has(NodeId id) const {
  auto i = static_cast<std::size_t>(id);
  return i < points_.size() && !std::isnan(points_[i].x) && !std::isnan(points_[i].y);
}

void validate_placement(const Netlist& nl, const Placement& pl) {
  if (pl.size() != nl.size())
    throw Error(ErrorCode::Placement, "placement does not belong to design '" + nl.name() + "'");
  std::string missing;
  for (NodeId id : nl.movable()) {
    if (!pl.has(id)) {
      missing += (missing.empty() ? "" : " ") + nl.node(id).name;
    } else if (!nl.die().contains(pl[id])) {
      throw Error(ErrorCode::Placement, "node '" + nl.node(id).name + "' is placed outside the die");
    }
  }
  if (!missing.empty()) throw Error(ErrorCode::Placement, "missing placement for: " + missing);
}

Placement parse_placement(std::string_view source, const Netlist& nl) {
  Placement pl(nl);
  bool header = false;
  int line_no = 0;
  std::size_t pos = 0;
  std::vector<bool> seen(nl.size(), false);
  while (pos < source.size()) {
    auto end = source.find('\n', pos);
    if (end == std::string_view::npos) end = source.size();
    auto toks = text::tokenize(source.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (toks.empty()) continue;
    if (!header) {
      if (toks[0].text != "placement" || toks.size() != 2)
        syntax_error(line_no, toks[0].column, "expected 'placement DESIGNNAME'");
      if (toks[1].text != nl.name())
        throw Error(ErrorCode::Placement,
                    "placement is for design '" + std::string(toks[1].text) + "', not '" + nl.name() + "'");
      header = true;
      continue;
    }
    if (toks.size() != 3) syntax_error(line_no, toks[0].column, "expected 'NODE X Y'");
    auto id = nl.find(toks[0].text);
    if (!id) throw Error(ErrorCode::Placement, "unknown node '" + std::string(toks[0].text) + "'");
    if (!nl.node(*id).is_movable())
      throw Error(ErrorCode::Placement, "'" + std::string(toks[0].text) + "' is a port; ports are fixed");
    if (seen[static_cast<std::size_t>(*id)])
      throw Error(ErrorCode::Placement, "node '" + std::string(toks[0].text) + "' placed twice");
    seen[static_cast<std::size_t>(*id)] = true;
    pl.set(*id, {number(toks[1], line_no), number(toks[2], line_no)});
  }
  if (!header) syntax_error(line_no, 1, "missing 'placement' header");
  validate_placement(nl, pl);
  return pl;
}

std::string write_placement(const Netlist& nl, const Placement& pl) {
  std::string out = "placement " + nl.name() + "\n";
  for (NodeId id : nl.movable()) {
    Point p = pl[id];
    out += nl.node(id).name + " " + text::format_fixed(p.x, 4) + " " + text::format_fixed(p.y, 4) + "\n";
  }
  return out;
}

}  // namespace regplace
