#include "mvrec/image.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>

#include "mvrec/errors.hpp"

namespace mvrec {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

Image load_png(const std::filesystem::path& path) {
  FilePtr fp(std::fopen(path.string().c_str(), "rb"));
  if (!fp) throw IoError("cannot open image: " + path.string());

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("libpng: failed to allocate read struct");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw IoError("libpng: failed to allocate info struct");
  }

  Image img;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("libpng: failed to decode " + path.string());
  }

  png_init_io(png, fp.get());
  png_read_info(png, info);

  const png_byte color_type = png_get_color_type(png, info);
  const png_byte bit_depth = png_get_bit_depth(png, info);

  if (bit_depth == 16) png_set_strip_16(png);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);

  img.width = static_cast<int>(png_get_image_width(png, info));
  img.height = static_cast<int>(png_get_image_height(png, info));
  img.channels = static_cast<int>(png_get_channels(png, info));
  if (img.channels != 1 && img.channels != 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("png: unsupported channel count in " + path.string());
  }

  img.data.resize(static_cast<std::size_t>(img.width) * img.height * img.channels);
  rows.resize(img.height);
  const std::size_t stride = static_cast<std::size_t>(img.width) * img.channels;
  for (int y = 0; y < img.height; ++y) rows[y] = img.data.data() + y * stride;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

// Reads the next whitespace/comment-delimited token of a PNM header.
int pnm_next_int(std::istream& in, const std::filesystem::path& path) {
  int c = in.get();
  while (c != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
    } else if (std::isspace(c)) {
      c = in.get();
    } else {
      break;
    }
  }
  if (c == EOF || !std::isdigit(c))
    throw IoError("pnm: malformed header in " + path.string());
  long v = 0;
  while (c != EOF && std::isdigit(c)) {
    v = v * 10 + (c - '0');
    if (v > 1 << 30) throw IoError("pnm: absurd header value in " + path.string());
    c = in.get();
  }
  return static_cast<int>(v);
}

Image load_pnm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open image: " + path.string());
  char magic[2] = {0, 0};
  in.read(magic, 2);
  if (magic[0] != 'P' || (magic[1] != '2' && magic[1] != '3' && magic[1] != '5' && magic[1] != '6'))
    throw IoError("pnm: unsupported format in " + path.string());
  const bool color = magic[1] == '3' || magic[1] == '6';
  const bool binary = magic[1] == '5' || magic[1] == '6';

  Image img;
  img.width = pnm_next_int(in, path);
  img.height = pnm_next_int(in, path);
  const int maxval = pnm_next_int(in, path);
  if (img.width <= 0 || img.height <= 0)
    throw IoError("pnm: zero-area image in " + path.string());
  if (maxval <= 0 || maxval > 255)
    throw IoError("pnm: only 8-bit maxval supported in " + path.string());
  img.channels = color ? 3 : 1;
  const std::size_t count =
      static_cast<std::size_t>(img.width) * img.height * img.channels;
  img.data.resize(count);

  if (binary) {
    // Exactly one whitespace byte separates the header from raster data.
    in.read(reinterpret_cast<char*>(img.data.data()), static_cast<std::streamsize>(count));
    if (static_cast<std::size_t>(in.gcount()) != count)
      throw IoError("pnm: truncated raster in " + path.string());
  } else {
    for (std::size_t i = 0; i < count; ++i) {
      const int v = pnm_next_int(in, path);
      if (v > maxval) throw IoError("pnm: sample above maxval in " + path.string());
      img.data[i] = static_cast<std::uint8_t>(v);
    }
  }
  if (maxval != 255) {
    for (auto& v : img.data)
      v = static_cast<std::uint8_t>((v * 255 + maxval / 2) / maxval);
  }
  return img;
}

}  // namespace

Image::Image(int w, int h, int c) : width(w), height(h), channels(c) {
  if (w <= 0 || h <= 0 || (c != 1 && c != 3))
    throw InvalidInputError("image: invalid dimensions");
  data.assign(static_cast<std::size_t>(w) * h * c, 0);
}

Image load_image(const std::filesystem::path& path) {
  std::ifstream probe(path, std::ios::binary);
  if (!probe) throw IoError("cannot open image: " + path.string());
  unsigned char sig[8] = {0};
  probe.read(reinterpret_cast<char*>(sig), 8);
  probe.close();
  static const unsigned char png_sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  if (std::memcmp(sig, png_sig, 8) == 0) return load_png(path);
  if (sig[0] == 'P') return load_pnm(path);
  throw IoError("unrecognized image format: " + path.string());
}

bool is_supported_image_file(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext == ".png" || ext == ".pgm" || ext == ".ppm" || ext == ".pnm";
}

void save_pgm(const Image& img, const std::filesystem::path& path) {
  const Image gray = to_grayscale(img);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write image: " + path.string());
  out << "P5\n" << gray.width << " " << gray.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(gray.data.data()),
            static_cast<std::streamsize>(gray.data.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

void save_ppm(const Image& img, const std::filesystem::path& path) {
  Image rgb = img;
  if (img.channels == 1) {
    rgb = Image(img.width, img.height, 3);
    for (std::size_t i = 0; i < img.data.size(); ++i) {
      rgb.data[3 * i] = rgb.data[3 * i + 1] = rgb.data[3 * i + 2] = img.data[i];
    }
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write image: " + path.string());
  out << "P6\n" << rgb.width << " " << rgb.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(rgb.data.data()),
            static_cast<std::streamsize>(rgb.data.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

void save_png(const Image& img, const std::filesystem::path& path) {
  if (img.width <= 0 || img.height <= 0) throw InvalidInputError("png: empty image");
  FilePtr fp(std::fopen(path.string().c_str(), "wb"));
  if (!fp) throw IoError("cannot write image: " + path.string());

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("libpng: failed to allocate write struct");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw IoError("libpng: failed to allocate info struct");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("libpng: failed to encode " + path.string());
  }

  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width),
               static_cast<png_uint_32>(img.height), 8,
               img.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const std::size_t stride = static_cast<std::size_t>(img.width) * img.channels;
  for (int y = 0; y < img.height; ++y)
    png_write_row(png, const_cast<png_bytep>(img.data.data() + y * stride));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

Image to_grayscale(const Image& img) {
  if (img.channels == 1) return img;
  Image out(img.width, img.height, 1);
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    const double y = 0.299 * img.data[3 * i] + 0.587 * img.data[3 * i + 1] +
                     0.114 * img.data[3 * i + 2];
    out.data[i] = static_cast<std::uint8_t>(std::lround(y));
  }
  return out;
}

Image resize_bilinear(const Image& img, int out_width, int out_height) {
  if (img.width <= 0 || img.height <= 0) throw InvalidInputError("resize: empty source image");
  if (out_width <= 0 || out_height <= 0) throw InvalidInputError("resize: empty target size");
  if (out_width == img.width && out_height == img.height) return img;

  Image out(out_width, out_height, img.channels);
  const double sx = static_cast<double>(img.width) / out_width;
  const double sy = static_cast<double>(img.height) / out_height;
  for (int y = 0; y < out_height; ++y) {
    double fy = (y + 0.5) * sy - 0.5;
    fy = std::clamp(fy, 0.0, static_cast<double>(img.height - 1));
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, img.height - 1);
    const double wy = fy - y0;
    for (int x = 0; x < out_width; ++x) {
      double fx = (x + 0.5) * sx - 0.5;
      fx = std::clamp(fx, 0.0, static_cast<double>(img.width - 1));
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, img.width - 1);
      const double wx = fx - x0;
      for (int c = 0; c < img.channels; ++c) {
        const double top = (1.0 - wx) * img.at(x0, y0, c) + wx * img.at(x1, y0, c);
        const double bot = (1.0 - wx) * img.at(x0, y1, c) + wx * img.at(x1, y1, c);
        out.at(x, y, c) = static_cast<std::uint8_t>(std::lround((1.0 - wy) * top + wy * bot));
      }
    }
  }
  return out;
}

}  // namespace mvrec
