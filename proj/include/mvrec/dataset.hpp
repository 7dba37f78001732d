#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mvrec/features.hpp"
#include "mvrec/recognition.hpp"

namespace mvrec {

// Ordered views of one object category.
struct CategoryViews {
  std::string label;
  std::vector<std::filesystem::path> views;
};

// A directory-of-images dataset. Two layouts are accepted:
//   root/<category>/<view image>          (one subdirectory per category)
//   root/obj<k>__<angle>.<ext>            (flat COIL-style naming)
// Ordering is deterministic: byte-wise lexicographic for the directory
// layout, numeric (k, angle) for the flat layout.
struct MultiViewDataset {
  std::filesystem::path root;
  std::vector<CategoryViews> categories;
  // Optional per-category reference view overrides, read from
  // root/manifest.json ({"references": {"<category>": "<filename>"}}).
  std::map<std::string, std::string> reference_overrides;
};

// Scans root, validates that every image decodes and every category has at
// least two views (one reference plus one input).
MultiViewDataset load_dataset(const std::filesystem::path& root);

// Library built from each category's reference view (the first view, or the
// manifest override), with that view removed from the inputs.
struct SplitDataset {
  ObjectLibrary library;
  std::vector<CategoryViews> inputs;               // reference excluded
  std::map<std::string, std::string> references;   // category -> chosen filename
};

SplitDataset split_reference(const MultiViewDataset& ds, const FeatureParams& params,
                             const ModalityLayout& layout);

// Audit manifest: categories, view counts, chosen references.
std::string dataset_manifest_json(const MultiViewDataset& ds,
                                  const std::map<std::string, std::string>& references);

// How many views a trial draws: either a fraction of the available views
// (rounded up, at least 1) or an absolute count.
struct TrialSpec {
  std::optional<double> fraction;    // in (0, 1]
  std::optional<std::size_t> count;  // in [1, available]
  std::uint64_t seed = 0;
  int repetitions = 1;
};

// Number of views the spec resolves to for `available` views.
std::size_t resolve_view_count(const TrialSpec& spec, std::size_t available);

// Uniform sample without replacement, ascending order, fully determined by
// (spec.seed, trial_index).
std::vector<std::size_t> sample_views(std::size_t available, const TrialSpec& spec,
                                      std::uint64_t trial_index);

// Synthetic recognition scene with a known answer: one view matches the
// planted category's descriptor, some views are pure noise (occluded), and
// the rest are scaled noisy copies.
struct SyntheticSceneParams {
  int views = 6;
  int blocks = 3;          // modality count m
  int block_dim = 10;      // dimensions per modality
  double noise_sigma = 0;
  int occluded_views = 0;
  int categories = 8;
  int planted_category = 0;

  void validate() const;
};

struct SyntheticScene {
  ViewSet views;
  ObjectLibrary library;
  std::string truth_label;
  std::size_t planted_view = 0;
};

SyntheticScene generate_synthetic_scene(const SyntheticSceneParams& params,
                                        std::uint64_t seed);

}  // namespace mvrec
