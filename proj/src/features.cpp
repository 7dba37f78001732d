#include "mvrec/features.hpp"

#include <array>
#include <cmath>

#include "mvrec/errors.hpp"

namespace mvrec {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Bin index of the LBP pattern: uniform patterns (at most two circular
// 0/1 transitions) get their rank in ascending value order, everything
// else maps to the last bin. 256 -> 59.
const std::array<int, 256>& lbp_uniform_map() {
  static const std::array<int, 256> map = [] {
    std::array<int, 256> m{};
    int next = 0;
    for (int p = 0; p < 256; ++p) {
      int transitions = 0;
      for (int b = 0; b < 8; ++b) {
        const int cur = (p >> b) & 1;
        const int nxt = (p >> ((b + 1) % 8)) & 1;
        transitions += cur != nxt;
      }
      m[p] = transitions <= 2 ? next++ : -1;
    }
    for (int p = 0; p < 256; ++p) {
      if (m[p] < 0) m[p] = 58;
    }
    return m;
  }();
  return map;
}

}  // namespace

void FeatureParams::validate() const {
  if (resize_edge <= 0) throw ConfigError("features: resize edge must be positive");
  if (color_bins < 2) throw ConfigError("features: color bins must be >= 2");
  if (hog_bins < 2) throw ConfigError("features: hog orientation bins must be >= 2");
  if (hog_cell <= 0 || hog_block <= 0)
    throw ConfigError("features: hog cell and block sizes must be positive");
  if (resize_edge % hog_cell != 0)
    throw ConfigError("features: resize edge must be divisible by hog cell size");
  if (resize_edge / hog_cell < hog_block)
    throw ConfigError("features: image holds fewer cells than one hog block");
  if (hog_epsilon <= 0) throw ConfigError("features: hog epsilon must be positive");
}

Eigen::Index color_histogram_length(const FeatureParams& p) {
  return static_cast<Eigen::Index>(p.color_bins) * p.color_bins * p.color_bins;
}

Eigen::Index hog_length(const FeatureParams& p) {
  const Eigen::Index cells = p.resize_edge / p.hog_cell;
  const Eigen::Index blocks = cells - p.hog_block + 1;
  return blocks * blocks * p.hog_block * p.hog_block * p.hog_bins;
}

ModalityLayout default_layout(const FeatureParams& p) {
  p.validate();
  return ModalityLayout({{"color", color_histogram_length(p)},
                         {"hog", hog_length(p)},
                         {"lbp", kLbpLength}});
}

Eigen::VectorXd extract_color_histogram(const Image& image, int bins_per_channel) {
  if (bins_per_channel < 2) throw InvalidInputError("color histogram: bins must be >= 2");
  if (image.width <= 0 || image.height <= 0 || image.data.empty())
    throw InvalidInputError("color histogram: zero-area image");

  const int bins = bins_per_channel;
  Eigen::VectorXd hist = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(bins) * bins * bins);
  const std::size_t n = image.pixel_count();
  for (std::size_t i = 0; i < n; ++i) {
    int r, g, b;
    if (image.channels == 3) {
      r = image.data[3 * i];
      g = image.data[3 * i + 1];
      b = image.data[3 * i + 2];
    } else {
      r = g = b = image.data[i];
    }
    const int ri = r * bins / 256;
    const int gi = g * bins / 256;
    const int bi = b * bins / 256;
    hist[(static_cast<Eigen::Index>(ri) * bins + gi) * bins + bi] += 1.0;
  }
  hist /= static_cast<double>(n);
  return hist;
}

Eigen::VectorXd extract_hog(const Image& image, const FeatureParams& params) {
  params.validate();
  if (image.width <= 0 || image.height <= 0)
    throw InvalidInputError("hog: zero-area image");

  Image gray = to_grayscale(image);
  if (gray.width != params.resize_edge || gray.height != params.resize_edge)
    gray = resize_bilinear(gray, params.resize_edge, params.resize_edge);

  const int edge = params.resize_edge;
  const int cell = params.hog_cell;
  const int cells = edge / cell;
  if (cells < 1) throw InvalidInputError("hog: image smaller than one cell");
  const int nbins = params.hog_bins;

  // Per-cell orientation histograms, magnitude-weighted.
  Eigen::MatrixXd cell_hist = Eigen::MatrixXd::Zero(nbins, cells * cells);
  auto px = [&](int x, int y) -> double {
    x = std::clamp(x, 0, edge - 1);
    y = std::clamp(y, 0, edge - 1);
    return static_cast<double>(gray.at(x, y));
  };
  for (int y = 0; y < edge; ++y) {
    for (int x = 0; x < edge; ++x) {
      const double gx = px(x + 1, y) - px(x - 1, y);
      const double gy = px(x, y + 1) - px(x, y - 1);
      const double mag = std::hypot(gx, gy);
      if (mag == 0.0) continue;
      double theta = std::atan2(gy, gx);
      if (theta < 0) theta += kPi;
      if (theta >= kPi) theta -= kPi;
      int bin = static_cast<int>(theta / kPi * nbins);
      bin = std::min(bin, nbins - 1);
      cell_hist(bin, (y / cell) * cells + (x / cell)) += mag;
    }
  }

  const int block = params.hog_block;
  const int blocks = cells - block + 1;
  const Eigen::Index block_len = static_cast<Eigen::Index>(block) * block * nbins;
  Eigen::VectorXd out(static_cast<Eigen::Index>(blocks) * blocks * block_len);
  const double eps2 = params.hog_epsilon * params.hog_epsilon;
  Eigen::Index off = 0;
  for (int by = 0; by < blocks; ++by) {
    for (int bx = 0; bx < blocks; ++bx) {
      auto v = out.segment(off, block_len);
      Eigen::Index k = 0;
      for (int cy = 0; cy < block; ++cy) {
        for (int cx = 0; cx < block; ++cx) {
          v.segment(k, nbins) = cell_hist.col((by + cy) * cells + (bx + cx));
          k += nbins;
        }
      }
      v /= std::sqrt(v.squaredNorm() + eps2);
      off += block_len;
    }
  }
  return out;
}

Eigen::VectorXd extract_lbp(const Image& image) {
  if (image.width < 3 || image.height < 3)
    throw InvalidInputError("lbp: image must be at least 3x3");
  const Image gray = to_grayscale(image);
  const auto& map = lbp_uniform_map();

  // Neighbor order fixes the bit position; bit k set when neighbor >= center.
  static constexpr int dx[8] = {0, 1, 1, 1, 0, -1, -1, -1};
  static constexpr int dy[8] = {-1, -1, 0, 1, 1, 1, 0, -1};

  Eigen::VectorXd hist = Eigen::VectorXd::Zero(kLbpLength);
  for (int y = 1; y < gray.height - 1; ++y) {
    for (int x = 1; x < gray.width - 1; ++x) {
      const std::uint8_t center = gray.at(x, y);
      int pattern = 0;
      for (int k = 0; k < 8; ++k) {
        if (gray.at(x + dx[k], y + dy[k]) >= center) pattern |= 1 << k;
      }
      hist[map[pattern]] += 1.0;
    }
  }
  hist /= static_cast<double>(gray.width - 2) * (gray.height - 2);
  return hist;
}

FeatureVector extract_feature_vector(const Image& image, const FeatureParams& params,
                                     const ModalityLayout& layout) {
  params.validate();
  if (!(layout == default_layout(params)))
    throw ConfigError("features: layout does not match [color | hog | lbp] for these params");

  Image resized = image;
  if (image.width != params.resize_edge || image.height != params.resize_edge)
    resized = resize_bilinear(image, params.resize_edge, params.resize_edge);

  Eigen::VectorXd values(layout.dim());
  layout.block(values, 0) = extract_color_histogram(resized, params.color_bins);
  layout.block(values, 1) = extract_hog(resized, params);
  layout.block(values, 2) = extract_lbp(resized);

  for (std::size_t i = 0; i < layout.block_count(); ++i) {
    auto blk = layout.block(values, i);
    const double norm = blk.norm();
    if (norm > 0.0) blk /= norm;
  }
  return FeatureVector(std::move(values), layout);
}

}  // namespace mvrec
