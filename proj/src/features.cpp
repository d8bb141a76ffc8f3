#include "regplace/features.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "regplace/text.hpp"

namespace regplace {

void FeatureConfig::check() const {
  if (k < 1) throw Error(ErrorCode::Domain, "feature.k must be at least 1");
  if (s < 0) throw Error(ErrorCode::Domain, "feature.s must be non-negative");
}

std::string Schema::fingerprint() const {
  return "k=" + std::to_string(k) + ";die=" + text::format_double(die.width) + "x" + text::format_double(die.height) +
         ";clock=" + text::format_double(clock_period) + ";normalize=" + (normalize ? "1" : "0") +
         ";width=" + std::to_string(width());
}

namespace {

std::vector<Pin> gate_input_pins(const Node& n) {
  if (gate_inputs(n.gate) == 2) return {Pin::A, Pin::B};
  return {Pin::A};
}

// One forward stage: `seed` holds the launch depth of ports/registers (or kUnreachable);
// returns the depth arriving at each register D pin.
std::vector<int> forward_stage(const Netlist& nl, const std::vector<NodeId>& order, std::vector<int>& val,
                               const std::vector<int>& seed) {
  for (std::size_t i = 0; i < val.size(); ++i)
    if (nl.nodes()[i].kind != NodeKind::Gate) val[i] = seed[i];
  for (NodeId g : order) {
    int best = kUnreachable;
    for (Pin p : gate_input_pins(nl.node(g))) {
      NodeId d = nl.driver_of(g, p);
      if (d != kNoNode) best = std::max(best, val[static_cast<std::size_t>(d)]);
    }
    val[static_cast<std::size_t>(g)] = best == kUnreachable ? kUnreachable : best + 1;
  }
  std::vector<int> at_d(nl.size(), kUnreachable);
  for (NodeId r : nl.registers()) {
    NodeId d = nl.driver_of(r, Pin::D);
    if (d != kNoNode) at_d[static_cast<std::size_t>(r)] = val[static_cast<std::size_t>(d)];
  }
  return at_d;
}

// One backward stage: `sink_seed` is the depth already accumulated downstream of each
// register D pin / output port; returns the depth seen from each register Q pin.
std::vector<int> backward_stage(const Netlist& nl, const std::vector<NodeId>& order, std::vector<int>& val,
                                const std::vector<int>& sink_seed) {
  auto sink_value = [&](const PinRef& s) {
    const Node& n = nl.node(s.node);
    if (n.kind == NodeKind::Gate) return val[static_cast<std::size_t>(s.node)];
    return sink_seed[static_cast<std::size_t>(s.node)];
  };
  auto fanout_best = [&](NodeId node, Pin pin) {
    NetId net = nl.net_out_of(node, pin);
    int best = kUnreachable;
    if (net != kNoNet)
      for (const PinRef& s : nl.net(net).sinks) best = std::max(best, sink_value(s));
    return best;
  };
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    int best = fanout_best(*it, Pin::Y);
    val[static_cast<std::size_t>(*it)] = best == kUnreachable ? kUnreachable : best + 1;
  }
  std::vector<int> at_q(nl.size(), kUnreachable);
  for (NodeId r : nl.registers()) at_q[static_cast<std::size_t>(r)] = fanout_best(r, Pin::Q);
  return at_q;
}

template <typename Stage>
std::vector<int> staged(const Netlist& nl, std::vector<int> seed, int s, Stage stage) {
  auto order = nl.comb_order();
  std::vector<int> val(nl.size(), kUnreachable);
  std::vector<int> result(nl.size(), kUnreachable);
  for (int k = 0; k <= s; ++k) {
    std::vector<int> reached = stage(nl, order, val, seed);
    bool any = false;
    for (std::size_t i = 0; i < reached.size(); ++i) {
      result[i] = std::max(result[i], reached[i]);
      any = any || reached[i] != kUnreachable;
    }
    if (!any) break;
    seed = std::move(reached);  // registers relaunch what they captured
  }
  return result;
}

}  // namespace

std::vector<int> source_depths(const Netlist& nl, NodeId port, int s) {
  if (port < 0 || static_cast<std::size_t>(port) >= nl.size() || nl.node(port).kind != NodeKind::InputPort)
    throw Error(ErrorCode::Domain, "source_depths needs an input port");
  std::vector<int> seed(nl.size(), kUnreachable);
  seed[static_cast<std::size_t>(port)] = 0;
  return staged(nl, std::move(seed), s, forward_stage);
}

std::vector<int> sink_depths(const Netlist& nl, NodeId port, int s) {
  if (port < 0 || static_cast<std::size_t>(port) >= nl.size() || nl.node(port).kind != NodeKind::OutputPort)
    throw Error(ErrorCode::Domain, "sink_depths needs an output port");
  std::vector<int> seed(nl.size(), kUnreachable);
  seed[static_cast<std::size_t>(port)] = 0;
  return staged(nl, std::move(seed), s, backward_stage);
}

ChainExtractor::ChainExtractor(const Netlist& nl, int s)
    : netlist_(&nl), inputs_(nl.input_ports()), outputs_(nl.output_ports()) {
  if (s < 0) throw Error(ErrorCode::Domain, "feature.s must be non-negative");
  for (NodeId p : inputs_) source_.push_back(source_depths(nl, p, s));
  for (NodeId q : outputs_) sink_.push_back(sink_depths(nl, q, s));
}

std::vector<Chain> ChainExtractor::chains(NodeId reg, int k) const {
  const Netlist& nl = *netlist_;
  if (reg < 0 || static_cast<std::size_t>(reg) >= nl.size() || nl.node(reg).kind != NodeKind::Register)
    throw Error(ErrorCode::Domain, "chains requested for a node that is not a register");
  struct Candidate {
    Chain chain;
    const std::string* in;
    const std::string* out;
  };
  std::vector<Candidate> cands;
  auto r = static_cast<std::size_t>(reg);
  for (std::size_t i = 0; i < inputs_.size(); ++i) {
    int up = source_[i][r];
    if (up == kUnreachable) continue;
    const Node& pin = nl.node(inputs_[i]);
    for (std::size_t j = 0; j < outputs_.size(); ++j) {
      int down = sink_[j][r];
      if (down == kUnreachable) continue;
      const Node& pout = nl.node(outputs_[j]);
      cands.push_back({{pin.location.x, pin.location.y, up + down, pout.location.x, pout.location.y},
                       &pin.name,
                       &pout.name});
    }
  }
  std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
    if (a.chain.depth != b.chain.depth) return a.chain.depth > b.chain.depth;
    if (*a.in != *b.in) return *a.in < *b.in;
    return *a.out < *b.out;
  });
  std::vector<Chain> out;
  out.reserve(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < cands.size() && out.size() < static_cast<std::size_t>(k); ++i) out.push_back(cands[i].chain);
  out.resize(static_cast<std::size_t>(k), Chain{});
  return out;
}

std::vector<Chain> extract_chains(const Netlist& nl, std::string_view reg, const FeatureConfig& config) {
  config.check();
  auto id = nl.find(reg);
  if (!id || nl.node(*id).kind != NodeKind::Register)
    throw Error(ErrorCode::Domain, "unknown register '" + std::string(reg) + "'");
  return ChainExtractor(nl, config.s).chains(*id, config.k);
}

std::vector<double> assemble_vector(const FeatureRow& row, const Schema& schema, bool prediction) {
  if (row.chains.size() != static_cast<std::size_t>(schema.k))
    throw Error(ErrorCode::Schema, "row '" + row.reg + "' has " + std::to_string(row.chains.size()) +
                                       " chains, schema expects " + std::to_string(schema.k));
  std::vector<double> v;
  v.reserve(schema.width());
  const bool norm = schema.normalize;
  for (const Chain& c : row.chains) {
    v.push_back(norm ? c.ix / schema.die.width : c.ix);
    v.push_back(norm ? c.iy / schema.die.height : c.iy);
    if (norm)
      v.push_back(schema.depth_max > 0 ? static_cast<double>(c.depth) / schema.depth_max : 0.0);
    else
      v.push_back(static_cast<double>(c.depth));
    v.push_back(norm ? c.ox / schema.die.width : c.ox);
    v.push_back(norm ? c.oy / schema.die.height : c.oy);
  }
  double slack = prediction ? 0.0 : row.wslack;
  v.push_back(norm ? slack / schema.clock_period : slack);
  return v;
}

namespace {

Schema schema_for(const Netlist& nl, const FeatureConfig& config) {
  Schema s;
  s.k = config.k;
  s.die = nl.die();
  s.clock_period = nl.clock_period();
  s.normalize = config.normalize;
  return s;
}

int row_depth_max(const std::vector<FeatureRow>& rows) {
  int m = 0;
  for (const auto& r : rows)
    for (const auto& c : r.chains) m = std::max(m, c.depth);
  return m;
}

}  // namespace

Dataset build_dataset(const Netlist& nl, const Placement& pl, const TimingReport& report,
                      const FeatureConfig& config) {
  config.check();
  if (report.register_slack.size() != nl.size())
    throw Error(ErrorCode::Domain, "timing report does not belong to design '" + nl.name() + "'");
  validate_placement(nl, pl);
  Dataset ds;
  ds.schema = schema_for(nl, config);
  ChainExtractor ex(nl, config.s);
  for (NodeId r : nl.registers()) {
    FeatureRow row;
    row.design = nl.name();
    row.reg = nl.node(r).name;
    row.chains = ex.chains(r, config.k);
    row.wslack = config.slack == SlackFeature::Register ? report.register_slack[static_cast<std::size_t>(r)]
                                                        : report.wns;
    row.target = pl[r];
    ds.rows.push_back(std::move(row));
  }
  ds.schema.depth_max = row_depth_max(ds.rows);
  return ds;
}

Dataset prediction_rows(const Netlist& nl, const FeatureConfig& config) {
  config.check();
  Dataset ds;
  ds.schema = schema_for(nl, config);
  ChainExtractor ex(nl, config.s);
  for (NodeId r : nl.registers())
    ds.rows.push_back({nl.name(), nl.node(r).name, ex.chains(r, config.k), 0.0, std::nullopt});
  ds.schema.depth_max = row_depth_max(ds.rows);
  return ds;
}

Dataset merge_datasets(const std::vector<Dataset>& parts) {
  if (parts.empty()) throw Error(ErrorCode::Domain, "nothing to merge");
  Dataset out;
  out.schema = parts.front().schema;
  for (const Dataset& d : parts) {
    if (d.schema.fingerprint() != out.schema.fingerprint())
      throw Error(ErrorCode::Schema, "cannot merge datasets: '" + d.schema.fingerprint() + "' vs '" +
                                         out.schema.fingerprint() + "'");
    out.schema.depth_max = std::max(out.schema.depth_max, d.schema.depth_max);
    out.rows.insert(out.rows.end(), d.rows.begin(), d.rows.end());
  }
  return out;
}

// ---- CSV / sidecar --------------------------------------------------------

std::string write_dataset_csv(const Dataset& ds, bool with_targets) {
  using text::format_double;
  std::string out = "design,register";
  for (int i = 1; i <= ds.schema.k; ++i) {
    std::string c = ",c" + std::to_string(i) + "_";
    out += c + "ix" + c + "iy" + c + "depth" + c + "ox" + c + "oy";
  }
  out += ",wslack";
  if (with_targets) out += ",tx,ty";
  out += "\n";
  for (const FeatureRow& r : ds.rows) {
    if (r.chains.size() != static_cast<std::size_t>(ds.schema.k))
      throw Error(ErrorCode::Schema, "row '" + r.reg + "' does not match the dataset width");
    out += r.design + "," + r.reg;
    for (const Chain& c : r.chains)
      out += "," + format_double(c.ix) + "," + format_double(c.iy) + "," + std::to_string(c.depth) + "," +
             format_double(c.ox) + "," + format_double(c.oy);
    out += "," + format_double(r.wslack);
    if (with_targets) {
      if (!r.target) throw Error(ErrorCode::Schema, "row '" + r.reg + "' has no target");
      out += "," + format_double(r.target->x) + "," + format_double(r.target->y);
    }
    out += "\n";
  }
  return out;
}

Dataset read_dataset_csv(std::string_view source, const Schema& schema) {
  Dataset ds;
  ds.schema = schema;
  const std::size_t base = 2 + 5 * static_cast<std::size_t>(schema.k) + 1;
  std::size_t columns = 0;
  bool with_targets = false;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos < source.size()) {
    auto end = source.find('\n', pos);
    if (end == std::string_view::npos) end = source.size();
    std::string_view line = text::trim(source.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (line.empty()) continue;
    auto cells = text::split(line, ',');
    auto bad = [&](const std::string& msg) {
      throw Error(ErrorCode::Parse, "dataset line " + std::to_string(line_no) + ": " + msg);
    };
    if (columns == 0) {
      if (cells.size() != base && cells.size() != base + 2)
        throw Error(ErrorCode::Schema, "dataset has " + std::to_string(cells.size()) + " columns; schema k=" +
                                           std::to_string(schema.k) + " expects " + std::to_string(base) + " or " +
                                           std::to_string(base + 2));
      if (cells[0] != "design" || cells[1] != "register") bad("unexpected header");
      columns = cells.size();
      with_targets = columns == base + 2;
      continue;
    }
    if (cells.size() != columns) bad("expected " + std::to_string(columns) + " fields");
    FeatureRow row;
    row.design = std::string(cells[0]);
    row.reg = std::string(cells[1]);
    auto num = [&](std::size_t i) {
      double v = 0.0;
      if (!text::parse_double(cells[i], v)) bad("bad number '" + std::string(cells[i]) + "'");
      return v;
    };
    for (int c = 0; c < schema.k; ++c) {
      std::size_t at = 2 + 5 * static_cast<std::size_t>(c);
      std::int64_t depth = 0;
      if (!text::parse_int(cells[at + 2], depth) || depth < 0) bad("bad depth '" + std::string(cells[at + 2]) + "'");
      row.chains.push_back({num(at), num(at + 1), static_cast<int>(depth), num(at + 3), num(at + 4)});
    }
    row.wslack = num(base - 1);
    if (with_targets) row.target = Point{num(base), num(base + 1)};
    ds.rows.push_back(std::move(row));
  }
  if (columns == 0) throw Error(ErrorCode::Parse, "dataset is empty (no header)");
  return ds;
}

std::string write_schema(const Schema& s) {
  nlohmann::ordered_json j;
  j["format"] = "regplace-schema";
  j["version"] = 1;
  j["k"] = s.k;
  j["die"] = {s.die.width, s.die.height};
  j["clock_period"] = s.clock_period;
  j["depth_max"] = s.depth_max;
  j["normalize"] = s.normalize;
  return j.dump(2) + "\n";
}

Schema read_schema(std::string_view source) {
  try {
    auto j = nlohmann::json::parse(source);
    if (j.value("format", "") != "regplace-schema") throw Error(ErrorCode::Schema, "not a schema file");
    Schema s;
    s.k = j.at("k").get<int>();
    s.die = {j.at("die").at(0).get<double>(), j.at("die").at(1).get<double>()};
    s.clock_period = j.at("clock_period").get<double>();
    s.depth_max = j.at("depth_max").get<int>();
    s.normalize = j.at("normalize").get<bool>();
    if (s.k < 1) throw Error(ErrorCode::Schema, "schema k must be at least 1");
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("schema: ") + e.what());
  }
}

}  // namespace regplace
