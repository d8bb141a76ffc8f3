#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "regplace/features.hpp"
#include "regplace/netlist.hpp"
#include "regplace/rng.hpp"
#include "regplace/timing.hpp"

namespace regplace {

struct PerturbConfig {
  double rho = 0.25;             // per-register selection probability
  std::optional<double> sigma;   // um per axis; unset means 5% of the die diagonal
  int n_snapshots = 10;
  std::uint64_t seed = 1;

  double sigma_for(const Die& die) const;
  void check() const;
};

struct Displacement {
  NodeId reg = kNoNode;
  double dx = 0.0;
  double dy = 0.0;
  bool selected = false;
};

struct PerturbResult {
  Placement placement;               // before legalization
  std::vector<Displacement> samples; // drawn offsets, one per register
};

/// Moves each register with probability rho by N(0, sigma^2) per axis, clamped to the die.
PerturbResult gaussian_perturb(const Placement& placement, const Netlist& netlist, const PerturbConfig& config,
                               Rng& rng);

struct Snapshot {
  int index = 0;
  Placement placement;  // legalized
  TimingReport report;
  std::vector<Displacement> moves;  // legalized offset from the base placement
};

/// Snapshot 0 is the base; snapshots 1..n are perturb -> legalize -> sta -> features.
/// Rows are concatenated in snapshot order.
Dataset make_samples(const Netlist& netlist, const Placement& base, const FeatureConfig& fcfg,
                     const PerturbConfig& pcfg, const DelayModel& model, const Grid& grid,
                     std::vector<Snapshot>* snapshots = nullptr);

/// snapshot,register,dx,dy,selected,wns,tns
std::string write_manifest_csv(const Netlist& netlist, const std::vector<Snapshot>& snapshots);

}  // namespace regplace
