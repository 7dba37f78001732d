#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace mvrec {

// 8-bit raster image, row-major, interleaved channels (1 = gray, 3 = RGB).
struct Image {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<std::uint8_t> data;

  Image() = default;
  Image(int w, int h, int c);  // zero-filled; validates dimensions

  std::uint8_t& at(int x, int y, int c = 0) {
    return data[static_cast<std::size_t>((y * width + x) * channels + c)];
  }
  std::uint8_t at(int x, int y, int c = 0) const {
    return data[static_cast<std::size_t>((y * width + x) * channels + c)];
  }
  std::size_t pixel_count() const {
    return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  }
};

// Loads PNG (8/16-bit gray, gray+alpha, palette, RGB, RGBA; reduced to
// 8-bit gray or RGB) or PNM (P2/P3/P5/P6, maxval <= 255). Dispatches on
// the file's magic bytes, not its extension.
Image load_image(const std::filesystem::path& path);

bool is_supported_image_file(const std::filesystem::path& path);

void save_pgm(const Image& img, const std::filesystem::path& path);
void save_ppm(const Image& img, const std::filesystem::path& path);
void save_png(const Image& img, const std::filesystem::path& path);

// Rec.601 luma, rounded. Grayscale input is returned unchanged.
Image to_grayscale(const Image& img);

// Center-aligned bilinear resampling, per channel.
Image resize_bilinear(const Image& img, int out_width, int out_height);

}  // namespace mvrec
