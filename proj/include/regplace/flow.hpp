#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "regplace/config.hpp"

namespace regplace {

/// A training design and the placement whose register locations are the targets.
struct ReferenceDesign {
  Netlist netlist;
  Placement placement;
};

/// Baseline-annealed reference from a random legal start.
ReferenceDesign anneal_reference(const Netlist& netlist, const RunConfig& config);

/// Perturbation samples of every reference, merged into one dataset.
Dataset flow_dataset(const std::vector<ReferenceDesign>& references, const RunConfig& config);

/// Predicted location of every register, using wslack = 0 vectors.
std::map<std::string, Point> predict_registers(const Model& model, const Netlist& netlist,
                                               const RunConfig& config);

struct FlowArms {
  PlaceResult baseline;
  PlaceResult guided;
  std::vector<SoftBound> bounds;
  int budget = 0;               // temperature steps per arm
  int baseline_iters = 0;       // first trace index reaching the baseline's own final TNS
  int guided_iters = 0;         // first trace index reaching the baseline's final TNS; budget + 1 if never
};

/// First trace index whose TNS is at least `target`; trace.size() if none.
int iterations_to_match(const std::vector<double>& tns_trace, double target);

/// Baseline SA from a random legal start against guided SA from the predictions,
/// both with the same schedule and move count. `seed` drives both arms.
FlowArms run_arms(const Netlist& netlist, const std::map<std::string, Point>& predictions, const RunConfig& config,
                  std::uint64_t seed);

struct ArmRow {
  std::string arm;
  double place_seconds = 0.0;
  double hpwl = 0.0;
  double tns = 0.0;
  double wns = 0.0;
  int iters = 0;
};

/// Relative improvement in percent; positive means the guided arm is better.
/// Lower-is-better columns use (baseline - guided) / |baseline|, TNS and WNS use
/// (guided - baseline) / |baseline|. Empty when the baseline is zero.
struct Improvement {
  std::optional<double> place_seconds;
  std::optional<double> hpwl;
  std::optional<double> tns;
  std::optional<double> wns;
  std::optional<double> iters;
};

struct FlowReport {
  ArmRow baseline;
  ArmRow guided;
  Improvement improvement;
  int budget = 0;

  /// arm,place_seconds,hpwl_um,tns_ns,wns_ns,iters_to_match
  std::string csv() const;
  std::string table() const;
};

FlowReport make_report(const FlowArms& arms);

struct FlowResult {
  std::vector<ReferenceDesign> references;
  Dataset dataset;
  Model model;
  std::map<std::string, Point> predictions;
  FlowArms arms;
  FlowReport report;
};

/// Train designs without a placement are annealed first. Everything derives from config.seed.
FlowResult run_flow(const std::vector<std::pair<Netlist, std::optional<Placement>>>& train,
                    const Netlist& test, const RunConfig& config);

}  // namespace regplace
