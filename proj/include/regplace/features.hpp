#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "regplace/netlist.hpp"
#include "regplace/timing.hpp"

namespace regplace {

enum class SlackFeature { Register, Design };

struct FeatureConfig {
  int k = 100;  // chains kept per register
  int s = 8;    // register crossings allowed on each side
  bool normalize = true;
  SlackFeature slack = SlackFeature::Register;

  void check() const;
};

/// One logic chain: input port, gate depth through the register, output port.
struct Chain {
  double ix = 0.0;
  double iy = 0.0;
  int depth = 0;
  double ox = 0.0;
  double oy = 0.0;
  friend bool operator==(const Chain&, const Chain&) = default;
};

struct FeatureRow {
  std::string design;
  std::string reg;
  std::vector<Chain> chains;  // exactly k, deepest first, zero padding at the tail
  double wslack = 0.0;
  std::optional<Point> target;
};

/// Dataset-wide constants shared by every row.
struct Schema {
  int k = 100;
  Die die;
  double clock_period = 1.0;
  int depth_max = 0;
  bool normalize = true;

  std::size_t width() const { return static_cast<std::size_t>(5 * k + 1); }
  /// Identity of the input space; depth_max is a scale, not part of it.
  std::string fingerprint() const;
};

struct Dataset {
  Schema schema;
  std::vector<FeatureRow> rows;
};

inline constexpr int kUnreachable = -1;

/// Per-node longest gate depth from an input port to each register's D pin,
/// through at most `s` register crossings. kUnreachable for registers not reached.
std::vector<int> source_depths(const Netlist& netlist, NodeId input_port, int s);

/// Mirror of source_depths: longest gate depth from each register's Q pin to the output port.
std::vector<int> sink_depths(const Netlist& netlist, NodeId output_port, int s);

/// Depth tables for every port of one netlist, reused across registers.
class ChainExtractor {
 public:
  ChainExtractor(const Netlist& netlist, int s);

  std::vector<Chain> chains(NodeId reg, int k) const;

 private:
  const Netlist* netlist_;
  std::vector<NodeId> inputs_;
  std::vector<NodeId> outputs_;
  std::vector<std::vector<int>> source_;  // per input port
  std::vector<std::vector<int>> sink_;    // per output port
};

std::vector<Chain> extract_chains(const Netlist& netlist, std::string_view reg, const FeatureConfig& config);

/// Flat vector [c1.ix, c1.iy, c1.depth, c1.ox, c1.oy, ..., wslack]; wslack is 0 in prediction mode.
std::vector<double> assemble_vector(const FeatureRow& row, const Schema& schema, bool prediction = false);

/// One row per register with its slack feature and its location as target.
Dataset build_dataset(const Netlist& netlist, const Placement& placement, const TimingReport& report,
                      const FeatureConfig& config);

/// Rows for prediction: chains only, wslack 0, no target.
Dataset prediction_rows(const Netlist& netlist, const FeatureConfig& config);

/// Concatenate datasets with compatible schemas; depth_max becomes the maximum.
Dataset merge_datasets(const std::vector<Dataset>& parts);

std::string write_dataset_csv(const Dataset& dataset, bool with_targets = true);
/// Accepts files with or without the tx,ty columns.
Dataset read_dataset_csv(std::string_view text, const Schema& schema);

std::string write_schema(const Schema& schema);
Schema read_schema(std::string_view text);

}  // namespace regplace
