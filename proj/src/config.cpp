#include "regplace/config.hpp"

#include <algorithm>
#include <functional>
#include <map>

#include "regplace/rng.hpp"
#include "regplace/text.hpp"

namespace regplace {

namespace {

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view want) {
  throw Error(ErrorCode::Config,
              "config key '" + std::string(key) + "': '" + std::string(value) + "' is not " + std::string(want));
}

double to_double(std::string_view key, std::string_view v) {
  double out = 0.0;
  if (!text::parse_double(v, out)) bad_value(key, v, "a number");
  return out;
}

int to_int(std::string_view key, std::string_view v) {
  std::int64_t out = 0;
  if (!text::parse_int(v, out) || out < INT32_MIN || out > INT32_MAX) bad_value(key, v, "an integer");
  return static_cast<int>(out);
}

std::uint64_t to_u64(std::string_view key, std::string_view v) {
  std::int64_t out = 0;
  if (!text::parse_int(v, out) || out < 0) bad_value(key, v, "a non-negative integer");
  return static_cast<std::uint64_t>(out);
}

bool to_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  bad_value(key, v, "true or false");
}

struct Entry {
  std::string_view help;
  std::function<void(RunConfig&, std::string_view key, std::string_view value)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define REGPLACE_DOUBLE(field)                                                                     \
  [](RunConfig& c, std::string_view k, std::string_view v) { c.field = to_double(k, v); },        \
      [](const RunConfig& c) { return text::format_double(c.field); }
#define REGPLACE_INT(field)                                                                        \
  [](RunConfig& c, std::string_view k, std::string_view v) { c.field = to_int(k, v); },           \
      [](const RunConfig& c) { return std::to_string(c.field); }

const std::map<std::string_view, Entry>& table() {
  static const std::map<std::string_view, Entry> entries = {
      {"feature.k", {"chains kept per register (100)", REGPLACE_INT(feature.k)}},
      {"feature.s", {"register crossings traced on each side (8)", REGPLACE_INT(feature.s)}},
      {"feature.normalize",
       {"scale coordinates, depth and slack into unit ranges (true)",
        [](RunConfig& c, std::string_view k, std::string_view v) { c.feature.normalize = to_bool(k, v); },
        [](const RunConfig& c) { return std::string(c.feature.normalize ? "true" : "false"); }}},
      {"feature.slack",
       {"slack feature: register or design (register)",
        [](RunConfig& c, std::string_view k, std::string_view v) {
          if (v == "register")
            c.feature.slack = SlackFeature::Register;
          else if (v == "design")
            c.feature.slack = SlackFeature::Design;
          else
            bad_value(k, v, "register or design");
        },
        [](const RunConfig& c) {
          return std::string(c.feature.slack == SlackFeature::Register ? "register" : "design");
        }}},
      {"perturb.rho", {"per-register selection probability (0.25)", REGPLACE_DOUBLE(perturb.rho)}},
      {"perturb.sigma_um",
       {"displacement sigma per axis in um, or auto for 5% of the die diagonal (auto)",
        [](RunConfig& c, std::string_view k, std::string_view v) {
          if (v == "auto")
            c.perturb.sigma.reset();
          else
            c.perturb.sigma = to_double(k, v);
        },
        [](const RunConfig& c) {
          return c.perturb.sigma ? text::format_double(*c.perturb.sigma) : std::string("auto");
        }}},
      {"perturb.snapshots", {"perturbed snapshots per training design (10)", REGPLACE_INT(perturb.n_snapshots)}},
      {"delay.gate_ns", {"delay per gate (0.1)", REGPLACE_DOUBLE(delay.gate_delay)}},
      {"delay.wire_ns_per_um", {"wire delay per um of Manhattan length (0.01)", REGPLACE_DOUBLE(delay.wire_delay)}},
      {"delay.clk_to_q_ns", {"register clock-to-Q delay (0.1)", REGPLACE_DOUBLE(delay.clk_to_q)}},
      {"delay.setup_ns", {"register setup time (0.05)", REGPLACE_DOUBLE(delay.setup)}},
      {"delay.input_arrival_ns", {"arrival time at input ports (0)", REGPLACE_DOUBLE(delay.input_arrival)}},
      {"delay.output_margin_ns", {"required margin at output ports (0)", REGPLACE_DOUBLE(delay.output_margin)}},
      {"forest.trees", {"trees in the forest (100)", REGPLACE_INT(forest.n_trees)}},
      {"forest.mtry", {"features tried per split, 0 for ceil(d/3) (0)", REGPLACE_INT(forest.mtry)}},
      {"forest.min_leaf", {"minimum rows per leaf (2)", REGPLACE_INT(forest.min_leaf)}},
      {"forest.max_depth", {"maximum tree depth, 0 for unlimited (0)", REGPLACE_INT(forest.max_depth)}},
      {"krr.gamma", {"RBF kernel width, 0 for 1/d (0)", REGPLACE_DOUBLE(krr.gamma)}},
      {"krr.lambda", {"ridge strength (0.001)", REGPLACE_DOUBLE(krr.lambda)}},
      {"learn.model",
       {"regressor used by the flow: forest or krr (forest)",
        [](RunConfig& c, std::string_view, std::string_view v) { c.model = parse_model_kind(v); },
        [](const RunConfig& c) { return std::string(to_string(c.model)); }}},
      {"sa.t_start", {"initial temperature (5)", REGPLACE_DOUBLE(sa.t_start)}},
      {"sa.t_end", {"final temperature (0.02)", REGPLACE_DOUBLE(sa.t_end)}},
      {"sa.cooling", {"geometric cooling ratio (0.95)", REGPLACE_DOUBLE(sa.cooling)}},
      {"sa.moves_per_cell", {"moves per temperature per movable cell (20)", REGPLACE_DOUBLE(sa.moves_per_cell)}},
      {"sa.w_wl", {"cost weight per um of HPWL (1)", REGPLACE_DOUBLE(sa.w_wl)}},
      {"sa.w_tns", {"cost weight per ns of negative TNS (100)", REGPLACE_DOUBLE(sa.w_tns)}},
      {"sa.w_sb", {"cost weight per um outside a soft bound (10)", REGPLACE_DOUBLE(sa.w_sb)}},
      {"sa.bound_half_um", {"soft bound half extent (1)", REGPLACE_DOUBLE(bound_half_um)}},
      {"grid.site_pitch_um", {"placement site width (1)", REGPLACE_DOUBLE(grid.site_pitch)}},
      {"grid.row_height_um", {"placement row height (2)", REGPLACE_DOUBLE(grid.row_height)}},
      {"gen.inputs", {"generated input ports (16)", REGPLACE_INT(gen.n_inputs)}},
      {"gen.outputs", {"generated output ports (16)", REGPLACE_INT(gen.n_outputs)}},
      {"gen.registers", {"generated registers (64)", REGPLACE_INT(gen.n_registers)}},
      {"gen.stages", {"generated pipeline stages (4)", REGPLACE_INT(gen.n_stages)}},
      {"gen.cone_depth", {"maximum gate depth per logic cone (4)", REGPLACE_INT(gen.max_cone_depth)}},
      {"gen.gates_per_cone", {"gate budget per logic cone (4)", REGPLACE_INT(gen.gates_per_cone)}},
      {"gen.die_width_um", {"generated die width (40)", REGPLACE_DOUBLE(gen.die.width)}},
      {"gen.die_height_um", {"generated die height (40)", REGPLACE_DOUBLE(gen.die.height)}},
      {"gen.locality", {"cone input spread around the bit slice, 0 for uniform (0.1)", REGPLACE_DOUBLE(gen.locality)}},
      {"gen.side_ports", {"per-stage control inputs and status outputs (2)", REGPLACE_INT(gen.side_ports)}},
      {"gen.clock_ns", {"generated clock period (0.6)", REGPLACE_DOUBLE(gen.clock_period)}},
      {"seed",
       {"master seed (1)",
        [](RunConfig& c, std::string_view k, std::string_view v) { c.seed = to_u64(k, v); },
        [](const RunConfig& c) { return std::to_string(c.seed); }}},
  };
  return entries;
}

#undef REGPLACE_DOUBLE
#undef REGPLACE_INT

const Entry& lookup(std::string_view key) {
  const auto& t = table();
  auto it = t.find(key);
  if (it == t.end()) throw Error(ErrorCode::Config, "unknown config key '" + std::string(key) + "'");
  return it->second;
}

}  // namespace

void RunConfig::set(std::string_view key, std::string_view value) { lookup(key).set(*this, key, value); }

std::string RunConfig::get(std::string_view key) const { return lookup(key).get(*this); }

void RunConfig::check() const {
  feature.check();
  perturb.check();
  delay.check();
  sa.check();
  if (!(bound_half_um >= 0.0)) throw Error(ErrorCode::Domain, "sa.bound_half_um must be non-negative");
  if (!(grid.site_pitch > 0.0 && grid.row_height > 0.0))
    throw Error(ErrorCode::Domain, "grid pitch and row height must be positive");
  if (forest.n_trees < 1 || forest.min_leaf < 1 || forest.mtry < 0 || forest.max_depth < 0)
    throw Error(ErrorCode::Domain, "forest settings out of range");
  if (!(krr.lambda > 0.0) || !(krr.gamma >= 0.0)) throw Error(ErrorCode::Domain, "krr settings out of range");
}

std::string RunConfig::effective() const {
  std::string out;
  for (const auto& [key, entry] : table()) out += std::string(key) + " = " + entry.get(*this) + "\n";
  return out;
}

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = [] {
    std::vector<ConfigKey> k;
    for (const auto& [key, entry] : table()) k.push_back({key, entry.help});
    return k;
  }();
  return keys;
}

RunConfig parse_config(std::string_view text, RunConfig base) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = text::trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw Error(ErrorCode::Config, "config line " + std::to_string(line_no) + ": expected key = value");
    std::string_view key = text::trim(line.substr(0, eq));
    std::string_view value = text::trim(line.substr(eq + 1));
    try {
      base.set(key, value);
    } catch (const Error& e) {
      throw Error(ErrorCode::Config, "config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return base;
}

std::uint64_t stage_seed(std::uint64_t master, std::string_view label) { return derive_seed(master, label); }

}  // namespace regplace
