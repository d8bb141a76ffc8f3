#include <algorithm>
#include <cmath>
#include <string>

#include "regplace/netlist.hpp"
#include "regplace/place.hpp"
#include "regplace/rng.hpp"

namespace regplace {

namespace {

// Probability that a cone leaf taps one of the stage's side inputs.
constexpr double kSideShare = 0.15;

constexpr GateType kGateMix[] = {GateType::INV, GateType::BUF, GateType::AND2, GateType::OR2,
                                 GateType::NAND2, GateType::NOR2, GateType::XOR2};

class ConeBuilder {
 public:
  ConeBuilder(Netlist& nl, Rng& rng, const GenConfig& cfg, std::vector<std::vector<PinRef>>& fanout)
      : nl_(nl), rng_(rng), cfg_(cfg), fanout_(fanout) {}

  // New level: sources that feed it.
  void begin_level(std::vector<PinRef> sources, std::vector<PinRef> side = {}) {
    sources_ = std::move(sources);
    used_.assign(sources_.size(), false);
    side_ = std::move(side);
    side_used_.assign(side_.size(), false);
    level_gates_.clear();
  }

  // Drive `sink` with a fresh cone. `focus` in [0,1) is the sink's relative slice position.
  void drive(PinRef sink, double focus) {
    focus_ = focus;
    budget_ = cfg_.gates_per_cone;
    bool wire_only = cfg_.max_cone_depth == 0 || budget_ == 0 || chance(0.1);
    PinRef src = wire_only ? leaf() : build(cfg_.max_cone_depth);
    connect(src, sink);
  }

 private:
  bool chance(double p) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng_) < p; }

  // Sources near the focus are preferred, unused ones first, so that every source gets a load.
  PinRef leaf() {
    if (!side_.empty() && chance(kSideShare)) return side_leaf();
    const auto n = static_cast<long>(sources_.size());
    if (cfg_.locality <= 0.0) {
      std::vector<long> unused;
      for (long i = 0; i < n; ++i)
        if (!used_[static_cast<std::size_t>(i)]) unused.push_back(i);
      std::uniform_int_distribution<std::size_t> pick(0, unused.empty() ? sources_.size() - 1 : unused.size() - 1);
      return take(unused.empty() ? static_cast<long>(pick(rng_)) : unused[pick(rng_)]);
    }
    const double sd = std::max(cfg_.locality * static_cast<double>(n), 0.5);
    const double center = focus_ * static_cast<double>(n);
    const long lo = std::max(0L, static_cast<long>(std::floor(center - 2.0 * sd)));
    const long hi = std::min(n - 1, static_cast<long>(std::floor(center + 2.0 * sd)));
    long best = -1;
    for (long i = lo; i <= hi; ++i)
      if (!used_[static_cast<std::size_t>(i)] &&
          (best < 0 || std::abs(static_cast<double>(i) + 0.5 - center) < std::abs(static_cast<double>(best) + 0.5 - center)))
        best = i;
    if (best >= 0) return take(best);
    double draw = std::normal_distribution<double>(center, sd)(rng_);
    return take(std::clamp(static_cast<long>(std::floor(draw)), 0L, n - 1));
  }

  PinRef side_leaf() {
    std::vector<std::size_t> unused;
    for (std::size_t i = 0; i < side_.size(); ++i)
      if (!side_used_[i]) unused.push_back(i);
    std::uniform_int_distribution<std::size_t> pick(0, (unused.empty() ? side_.size() : unused.size()) - 1);
    std::size_t i = unused.empty() ? pick(rng_) : unused[pick(rng_)];
    side_used_[i] = true;
    return side_[i];
  }

  PinRef take(long i) {
    used_[static_cast<std::size_t>(i)] = true;
    return sources_[static_cast<std::size_t>(i)];
  }

  // Returns the output pin of a cone of depth <= depth.
  PinRef build(int depth) {
    if (!level_gates_.empty() && chance(0.15)) {
      std::uniform_int_distribution<std::size_t> pick(0, level_gates_.size() - 1);
      auto [g, d] = level_gates_[pick(rng_)];
      if (d <= depth) return {g, Pin::Y};
    }
    std::uniform_int_distribution<std::size_t> type_pick(0, std::size(kGateMix) - 1);
    GateType type = kGateMix[type_pick(rng_)];
    --budget_;
    NodeId g = nl_.add_gate("g" + std::to_string(gate_count_++), type);
    fanout_.resize(nl_.size() * kPinSlots);
    int my_depth = 1;
    for (Pin pin : {Pin::A, Pin::B}) {
      if (pin == Pin::B && gate_inputs(type) == 1) break;
      PinRef child;
      if (depth > 1 && budget_ > 0 && !chance(0.3)) {
        child = build(depth - 1);
        my_depth = std::max(my_depth, 1 + depth_of(child));
      } else {
        child = leaf();
      }
      connect(child, {g, pin});
    }
    level_gates_.emplace_back(g, my_depth);
    return {g, Pin::Y};
  }

  int depth_of(PinRef p) const {
    for (const auto& [g, d] : level_gates_)
      if (g == p.node) return d;
    return 0;
  }

  void connect(PinRef driver, PinRef sink) {
    fanout_[static_cast<std::size_t>(driver.node) * kPinSlots + static_cast<std::size_t>(driver.pin)].push_back(sink);
  }

  Netlist& nl_;
  Rng& rng_;
  const GenConfig& cfg_;
  std::vector<std::vector<PinRef>>& fanout_;
  std::vector<PinRef> sources_;
  std::vector<bool> used_;
  std::vector<PinRef> side_;
  std::vector<bool> side_used_;
  double focus_ = 0.0;
  std::vector<std::pair<NodeId, int>> level_gates_;
  int budget_ = 0;
  int gate_count_ = 0;
};

}  // namespace

std::pair<Netlist, Placement> generate_synthetic(const GenConfig& cfg, std::uint64_t seed, const Grid& grid) {
  if (cfg.n_inputs < 1 || cfg.n_outputs < 1 || cfg.n_registers < 1 || cfg.n_stages < 1 || cfg.max_cone_depth < 0 ||
      cfg.gates_per_cone < 0 || cfg.side_ports < 0)
    throw Error(ErrorCode::Domain, "generator counts must be at least 1");
  if (!(cfg.locality >= 0.0)) throw Error(ErrorCode::Domain, "generator locality must be non-negative");
  if (!(cfg.die.width > 0.0) || !(cfg.die.height > 0.0) || !(cfg.clock_period > 0.0))
    throw Error(ErrorCode::Domain, "generator die and clock must be positive");
  check_grid(cfg.die, grid);

  Rng rng(derive_seed(seed, "generate"));
  std::string name = cfg.name.empty() ? "synth_" + std::to_string(seed) : cfg.name;
  Netlist nl(name, cfg.die, cfg.clock_period);

  std::vector<PinRef> inputs;
  for (int i = 0; i < cfg.n_inputs; ++i) {
    double y = (i + 0.5) * cfg.die.height / cfg.n_inputs;
    inputs.push_back({nl.add_input_port("in" + std::to_string(i), {0.0, y}), Pin::P});
  }
  std::vector<NodeId> outputs;
  for (int i = 0; i < cfg.n_outputs; ++i) {
    double y = (i + 0.5) * cfg.die.height / cfg.n_outputs;
    outputs.push_back(nl.add_output_port("out" + std::to_string(i), {cfg.die.width, y}));
  }
  std::vector<std::vector<NodeId>> stages(static_cast<std::size_t>(cfg.n_stages));
  for (int i = 0; i < cfg.n_registers; ++i) {
    NodeId r = nl.add_register("r" + std::to_string(i));
    auto s = static_cast<std::size_t>(static_cast<long>(i) * cfg.n_stages / cfg.n_registers);
    stages[s].push_back(r);
  }
  std::erase_if(stages, [](const auto& s) { return s.empty(); });

  // Stage-local control inputs on the bottom edge and status outputs on the top edge,
  // spread over the stage's share of the die width.
  const auto n_stages = static_cast<double>(stages.size());
  std::vector<std::vector<PinRef>> side_in(stages.size());
  std::vector<std::vector<NodeId>> side_out(stages.size());
  for (std::size_t k = 0; k < stages.size(); ++k) {
    for (int i = 0; i < cfg.side_ports; ++i) {
      double x = (static_cast<double>(k) + (i + 0.5) / cfg.side_ports) * cfg.die.width / n_stages;
      std::string tag = std::to_string(k) + "_" + std::to_string(i);
      side_in[k].push_back({nl.add_input_port("ctl" + tag, {x, 0.0}), Pin::P});
      side_out[k].push_back(nl.add_output_port("sts" + tag, {x, cfg.die.height}));
    }
  }

  std::vector<std::vector<PinRef>> fanout(nl.size() * kPinSlots);
  ConeBuilder cones(nl, rng, cfg, fanout);

  std::vector<PinRef> sources = inputs;
  for (std::size_t k = 0; k < stages.size(); ++k) {
    const auto& stage = stages[k];
    cones.begin_level(sources, side_in[k]);
    for (std::size_t j = 0; j < stage.size(); ++j)
      cones.drive({stage[j], Pin::D}, (static_cast<double>(j) + 0.5) / static_cast<double>(stage.size()));
    sources.clear();
    for (NodeId r : stage) sources.push_back({r, Pin::Q});
    if (!side_out[k].empty()) {
      cones.begin_level(sources);
      for (std::size_t i = 0; i < side_out[k].size(); ++i)
        cones.drive({side_out[k][i], Pin::P}, (static_cast<double>(i) + 0.5) / static_cast<double>(side_out[k].size()));
    }
  }
  cones.begin_level(sources);
  for (std::size_t i = 0; i < outputs.size(); ++i)
    cones.drive({outputs[i], Pin::P}, (static_cast<double>(i) + 0.5) / static_cast<double>(outputs.size()));

  fanout.resize(nl.size() * kPinSlots);
  for (std::size_t slot = 0; slot < fanout.size(); ++slot) {
    if (fanout[slot].empty()) continue;
    PinRef driver{static_cast<NodeId>(slot / kPinSlots), static_cast<Pin>(slot % kPinSlots)};
    nl.add_net("n_" + nl.node(driver.node).name, driver, std::move(fanout[slot]));
  }

  std::size_t cells = nl.movable().size();
  double sites = std::floor(cfg.die.width / grid.site_pitch + 1e-9) * std::floor(cfg.die.height / grid.row_height + 1e-9);
  if (static_cast<double>(cells) > sites)
    throw Error(ErrorCode::Capacity, "infeasible generator config: " + std::to_string(cells) + " cells for " +
                                         std::to_string(static_cast<long>(sites)) + " sites");

  Placement pl = random_placement(nl, grid, rng);
  return {std::move(nl), std::move(pl)};
}

}  // namespace regplace
