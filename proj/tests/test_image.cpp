#include <doctest.h>

#include <fstream>

#include "mvrec/errors.hpp"
#include "mvrec/image.hpp"
#include "mvrec/rng.hpp"
#include "test_helpers.hpp"

using namespace mvrec;
using testutil::TempDir;

TEST_CASE("pgm and ppm round-trip exactly") {
  TempDir tmp("image");
  Rng rng(1);
  const Image gray = testutil::random_image(rng, 9, 7, 1);
  const Image rgb = testutil::random_image(rng, 5, 8, 3);

  save_pgm(gray, tmp.path() / "g.pgm");
  save_ppm(rgb, tmp.path() / "c.ppm");
  const Image g2 = load_image(tmp.path() / "g.pgm");
  const Image c2 = load_image(tmp.path() / "c.ppm");

  CHECK(g2.width == gray.width);
  CHECK(g2.height == gray.height);
  CHECK(g2.channels == 1);
  CHECK(g2.data == gray.data);
  CHECK(c2.channels == 3);
  CHECK(c2.data == rgb.data);
}

TEST_CASE("png round-trips grayscale and rgb") {
  TempDir tmp("png");
  Rng rng(2);
  const Image gray = testutil::random_image(rng, 12, 10, 1);
  const Image rgb = testutil::random_image(rng, 10, 12, 3);
  save_png(gray, tmp.path() / "g.png");
  save_png(rgb, tmp.path() / "c.png");
  const Image g2 = load_image(tmp.path() / "g.png");
  const Image c2 = load_image(tmp.path() / "c.png");
  CHECK(g2.channels == 1);
  CHECK(g2.data == gray.data);
  CHECK(c2.channels == 3);
  CHECK(c2.data == rgb.data);
}

TEST_CASE("ascii pnm variants parse with comments") {
  TempDir tmp("pnm");
  {
    std::ofstream out(tmp.path() / "a.pgm");
    out << "P2\n# comment line\n2 2\n255\n0 64\n128 255\n";
  }
  const Image img = load_image(tmp.path() / "a.pgm");
  REQUIRE(img.channels == 1);
  CHECK(img.at(0, 0) == 0);
  CHECK(img.at(1, 0) == 64);
  CHECK(img.at(0, 1) == 128);
  CHECK(img.at(1, 1) == 255);

  {
    std::ofstream out(tmp.path() / "a.ppm");
    out << "P3\n1 2\n255\n255 0 0\n0 0 255\n";
  }
  const Image rgb = load_image(tmp.path() / "a.ppm");
  REQUIRE(rgb.channels == 3);
  CHECK(rgb.at(0, 0, 0) == 255);
  CHECK(rgb.at(0, 1, 2) == 255);
}

TEST_CASE("pnm maxval below 255 is rescaled") {
  TempDir tmp("pnm15");
  {
    std::ofstream out(tmp.path() / "m.pgm");
    out << "P2\n1 1\n15\n15\n";
  }
  CHECK(load_image(tmp.path() / "m.pgm").at(0, 0) == 255);
}

TEST_CASE("loading errors are reported with the path") {
  TempDir tmp("bad");
  CHECK_THROWS_AS(load_image(tmp.path() / "missing.png"), IoError);
  {
    std::ofstream out(tmp.path() / "junk.png", std::ios::binary);
    out << "this is not an image";
  }
  CHECK_THROWS_AS(load_image(tmp.path() / "junk.png"), IoError);
  {
    std::ofstream out(tmp.path() / "trunc.pgm", std::ios::binary);
    out << "P5\n4 4\n255\nab";  // claims 16 bytes, provides 2
  }
  CHECK_THROWS_AS(load_image(tmp.path() / "trunc.pgm"), IoError);
}

TEST_CASE("grayscale conversion uses the standard luma weights") {
  const Image red = testutil::solid(2, 2, 255, 0, 0);
  CHECK(to_grayscale(red).at(0, 0) == 76);  // round(0.299 * 255)
  const Image g = testutil::solid_gray(2, 2, 33);
  CHECK(to_grayscale(g).data == g.data);
}

TEST_CASE("bilinear resize keeps constant images constant") {
  const Image img = testutil::solid_gray(10, 10, 123);
  const Image up = resize_bilinear(img, 37, 19);
  CHECK(up.width == 37);
  CHECK(up.height == 19);
  for (auto v : up.data) CHECK(v == 123);
}

TEST_CASE("bilinear resize is a no-op at identical size") {
  Rng rng(4);
  const Image img = testutil::random_image(rng, 8, 8, 3);
  CHECK(resize_bilinear(img, 8, 8).data == img.data);
}
