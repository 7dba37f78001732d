#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mvrec/dataset.hpp"
#include "mvrec/features.hpp"
#include "mvrec/solver.hpp"

namespace mvrec {

// Everything a run needs, loadable from a key = value config file with
// identical per-key command-line overrides.
struct RunConfig {
  std::filesystem::path dataset_root;
  std::filesystem::path output_dir = ".";
  std::uint64_t seed = 42;
  int jobs = 1;

  FeatureParams features;
  SolverConfig solver;

  // Experiment grid; view amounts <= 1 are fractions, > 1 absolute counts.
  std::vector<double> lambda1_grid = {0.0, 0.1};
  std::vector<double> lambda2_grid = {0.0, 0.1};
  std::vector<double> view_amounts = {0.25, 1.0};
  int trials = 10;

  double heatmap_views = 0.25;
  double mi_views = 0.25;
  int mi_trials = 200;
  int mi_bins = 32;
  int mi_max_rank = 10;

  // Synthetic scene parameters (synth command).
  SyntheticSceneParams scene;

  // Parses `key = value` lines; '#' starts a comment; unknown keys fail.
  static RunConfig from_file(const std::filesystem::path& path);

  // Applies one key/value pair (used by file parsing and flag overrides).
  void set(const std::string& key, const std::string& value);

  // Canonical serialization: every key in fixed order, one per line.
  std::string canonical() const;

  // FNV-1a hash of the canonical serialization, as 16 hex digits.
  std::string hash() const;

  void validate() const;  // numeric field checks; throws ConfigError

  // All (key, current value) pairs in canonical order.
  std::vector<std::pair<std::string, std::string>> items() const;
};

}  // namespace mvrec
