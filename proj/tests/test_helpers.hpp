#pragma once

#include <unistd.h>

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mvrec/image.hpp"
#include "mvrec/layout.hpp"
#include "mvrec/rng.hpp"
#include "mvrec/solver.hpp"

namespace testutil {

inline mvrec::Image solid(int w, int h, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  mvrec::Image img(w, h, 3);
  for (std::size_t i = 0; i < img.pixel_count(); ++i) {
    img.data[3 * i] = r;
    img.data[3 * i + 1] = g;
    img.data[3 * i + 2] = b;
  }
  return img;
}

inline mvrec::Image solid_gray(int w, int h, std::uint8_t v) {
  mvrec::Image img(w, h, 1);
  std::fill(img.data.begin(), img.data.end(), v);
  return img;
}

// Clockwise quarter turn.
inline mvrec::Image rotate90(const mvrec::Image& img) {
  mvrec::Image out(img.height, img.width, img.channels);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < img.channels; ++c)
        out.at(img.height - 1 - y, x, c) = img.at(x, y, c);
  return out;
}

// Deterministic textured grayscale image; distinct (fa, fb) give visually
// distinct sinusoid patterns.
inline mvrec::Image sinusoid(int w, int h, double fa, double fb, double phase) {
  mvrec::Image img(w, h, 1);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double v = 128.0 + 120.0 * std::sin(fa * x + fb * y + phase);
      img.at(x, y) = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
    }
  return img;
}

inline mvrec::Image random_image(mvrec::Rng& rng, int w, int h, int channels) {
  mvrec::Image img(w, h, channels);
  for (auto& v : img.data) v = static_cast<std::uint8_t>(rng.below(256));
  return img;
}

// Layout with m blocks splitting d as evenly as possible.
inline mvrec::ModalityLayout even_layout(Eigen::Index d, int m) {
  std::vector<std::pair<std::string, Eigen::Index>> entries;
  Eigen::Index used = 0;
  for (int b = 0; b < m; ++b) {
    Eigen::Index len = d / m + (b < d % m ? 1 : 0);
    if (b == m - 1) len = d - used;
    entries.emplace_back("m" + std::to_string(b), len);
    used += len;
  }
  return mvrec::ModalityLayout(entries);
}

// Random instance in the regime the feature pipeline produces: unit-norm
// rows of X and a unit-norm target descriptor.
inline mvrec::ProblemInstance random_instance(mvrec::Rng& rng, Eigen::Index n,
                                              Eigen::Index d, int m) {
  Eigen::MatrixXd X(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) X(i, j) = rng.normal();
    X.row(i) /= X.row(i).norm();
  }
  Eigen::VectorXd o(d);
  for (Eigen::Index j = 0; j < d; ++j) o[j] = rng.normal();
  o /= o.norm();
  return mvrec::ProblemInstance(std::move(X), std::move(o), even_layout(d, m));
}

// Small deterministic dataset tree: `cats` categories of `views` sinusoid
// images each, root/<catNN>/view<VV>.pgm.
inline void write_fixture_dataset(const std::filesystem::path& root, int cats, int views,
                                  int edge = 48) {
  for (int c = 0; c < cats; ++c) {
    char cat_name[32];
    std::snprintf(cat_name, sizeof(cat_name), "cat%02d", c);
    const auto dir = root / cat_name;
    std::filesystem::create_directories(dir);
    for (int v = 0; v < views; ++v) {
      char view_name[32];
      std::snprintf(view_name, sizeof(view_name), "view%02d.pgm", v);
      const auto img = sinusoid(edge, edge, 0.25 + 0.18 * c, 0.10 + 0.09 * c, 0.15 * v);
      mvrec::save_pgm(img, dir / view_name);
    }
  }
}

// Unique scratch directory under the system temp dir, removed on destruction.
class TempDir {
public:
  explicit TempDir(const std::string& tag) {
    static std::uint64_t counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("mvrec_test_" + tag + "_" + std::to_string(counter++) + "_" +
             std::to_string(::getpid()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

private:
  std::filesystem::path path_;
};

}  // namespace testutil
