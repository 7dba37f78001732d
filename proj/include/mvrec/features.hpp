#pragma once

#include <Eigen/Core>

#include "mvrec/image.hpp"
#include "mvrec/layout.hpp"

namespace mvrec {

// Extraction settings for the three-modality descriptor
// [color histogram | HOG | LBP].
struct FeatureParams {
  int resize_edge = 128;    // images are resized to this square edge
  int color_bins = 4;       // joint histogram bins per RGB channel
  int hog_cell = 8;         // cell edge in pixels
  int hog_block = 2;        // block edge in cells, stride is one cell
  int hog_bins = 9;         // unsigned orientation bins over [0, 180)
  double hog_epsilon = 1e-6;  // block normalization floor

  void validate() const;  // throws ConfigError
};

constexpr Eigen::Index kLbpLength = 59;  // 58 uniform patterns + 1 catch-all bin

Eigen::Index color_histogram_length(const FeatureParams& p);
Eigen::Index hog_length(const FeatureParams& p);

// Layout [color | hog | lbp] with lengths implied by the params.
ModalityLayout default_layout(const FeatureParams& p);

// Joint RGB histogram with bins^3 entries, flattened r-major, l1-normalized.
// Grayscale input is treated as r = g = b.
Eigen::VectorXd extract_color_histogram(const Image& image, int bins_per_channel);

// Dalal-Triggs style HOG: clamped central-difference gradients, unsigned
// orientations hard-assigned to bins, per-cell magnitude histograms,
// overlapping blocks (stride one cell) normalized by sqrt(|v|^2 + eps^2).
// The image is resized to params.resize_edge and converted to grayscale
// first when needed.
Eigen::VectorXd extract_hog(const Image& image, const FeatureParams& params);

// Uniform 8-neighbor radius-1 LBP histogram (59 bins), comparison rule
// "neighbor >= center -> 1", border pixels skipped, l1-normalized.
Eigen::VectorXd extract_lbp(const Image& image);

// Concatenates the three modality descriptors in layout order and rescales
// each block to unit l2-norm (all-zero blocks stay zero).
FeatureVector extract_feature_vector(const Image& image, const FeatureParams& params,
                                     const ModalityLayout& layout);

}  // namespace mvrec
