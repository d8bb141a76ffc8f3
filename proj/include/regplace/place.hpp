#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "regplace/netlist.hpp"
#include "regplace/rng.hpp"
#include "regplace/timing.hpp"

namespace regplace {

/// Throws unless the die is a whole number of sites by rows.
void check_grid(const Die& die, const Grid& grid);

/// Σ over nets of the half-perimeter of the pin bounding box.
double hpwl(const Netlist& netlist, const Placement& placement);

/// On-grid, inside the die, at most one cell per site.
bool is_legal(const Netlist& netlist, const Placement& placement, const Grid& grid);

/// Snap to the nearest site, then resolve overlaps in (row, x, name) order by
/// shifting right and wrapping to the next row.
Placement legalize(const Netlist& netlist, const Placement& placement, const Grid& grid);

/// Uniform random positions inside the die, legalized.
Placement random_placement(const Netlist& netlist, const Grid& grid, Rng& rng);

/// Violable box around a register's predicted location.
struct SoftBound {
  NodeId reg = kNoNode;
  Point center;
  double half_width = 1.0;
  double half_height = 1.0;

  /// L1 distance from `p` to the box; 0 inside.
  double distance(Point p) const;
};

double softbound_penalty(const Netlist& netlist, const Placement& placement, std::span<const SoftBound> bounds);

struct SeedResult {
  Placement placement;
  std::vector<SoftBound> bounds;
};

/// Registers at their predictions, gates at the centroid of placed net peers. Registers are
/// legalized first so gates never push them off their predicted sites.
/// Bounds stay centred on the raw predictions.
SeedResult seed_from_predictions(const Netlist& netlist, const std::map<std::string, Point>& predictions,
                                 const Grid& grid, double half_extent = 1.0);

struct SAConfig {
  double t_start = 5.0;
  double t_end = 0.02;
  double cooling = 0.95;
  double moves_per_cell = 20.0;
  double w_wl = 1.0;
  double w_tns = 100.0;  // per ns
  double w_sb = 10.0;    // per um
  std::uint64_t seed = 1;

  void check() const;
  /// Number of temperature steps in the schedule.
  int temperatures() const;
};

struct PlaceMetrics {
  double hpwl = 0.0;
  double wns = 0.0;
  double tns = 0.0;
  double seconds = 0.0;
  std::int64_t moves = 0;
  std::int64_t accepted = 0;
};

struct PlaceResult {
  Placement placement;
  PlaceMetrics metrics;
  /// Entry 0 is the initial state, entry k the best state after temperature k.
  std::vector<double> cost_trace;
  std::vector<double> tns_trace;  // TNS of that best state
};

/// Simulated annealing over w_wl*HPWL + w_tns*(-TNS) + w_sb*soft-bound penalty.
/// Returns the best state seen.
PlaceResult sa_place(const Netlist& netlist, const Placement& init, const SAConfig& config,
                     std::span<const SoftBound> bounds, const DelayModel& model, const Grid& grid);

std::string write_place_metrics_csv(const std::vector<std::pair<std::string, PlaceMetrics>>& runs);
std::string write_cost_trace_csv(const PlaceResult& result);

}  // namespace regplace
