#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "regplace/features.hpp"
#include "regplace/learn.hpp"
#include "regplace/netlist.hpp"
#include "regplace/perturb.hpp"
#include "regplace/place.hpp"
#include "regplace/timing.hpp"

namespace regplace {

/// Every tunable of the pipeline. Keys are `section.name`; see config_keys().
struct RunConfig {
  FeatureConfig feature;
  PerturbConfig perturb;
  DelayModel delay;
  ForestConfig forest;
  KrrConfig krr;
  SAConfig sa;
  double bound_half_um = 1.0;
  Grid grid;
  GenConfig gen;
  ModelKind model = ModelKind::Forest;
  std::uint64_t seed = 1;

  /// Throws Error(Config) for an unknown key or a malformed value.
  void set(std::string_view key, std::string_view value);
  std::string get(std::string_view key) const;
  /// Range checks across all sections.
  void check() const;
  /// Sorted `key = value` lines covering every key.
  std::string effective() const;
};

struct ConfigKey {
  std::string_view key;
  std::string_view help;
};

const std::vector<ConfigKey>& config_keys();

/// Parses `key = value` lines; `#` starts a comment.
RunConfig parse_config(std::string_view text, RunConfig base = {});

/// Seed for one stochastic stage, derived from the master seed and a label.
std::uint64_t stage_seed(std::uint64_t master, std::string_view label);

}  // namespace regplace
