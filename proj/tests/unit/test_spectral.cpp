#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <vector>

#include "lowfreq/errors.hpp"
#include "lowfreq/random.hpp"
#include "lowfreq/spectral.hpp"
#include "oracles.hpp"

using namespace lowfreq;
using oracle::brute_dct;
using oracle::brute_idct;
using oracle::random_image;

namespace {

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double sum_sq(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

}  // namespace

TEST_CASE("constant image has only a DC coefficient") {
  const Spectrum s = dct2(Image::filled({4, 4, 1}, 0.5));
  CHECK(s.at(0, 0, 0) == doctest::Approx(2.0).epsilon(1e-14));
  for (std::size_t k = 1; k < s.values.size(); ++k) CHECK(std::abs(s.values[k]) <= 1e-12);
}

TEST_CASE("zero image has a zero spectrum") {
  const Spectrum s = dct2(Image::filled({5, 3, 3}, 0.0));
  for (double v : s.values) CHECK(v == 0.0);
}

TEST_CASE("2x2 impulse matches the definitional sum") {
  const Image im({2, 2, 1}, {1.0, 0.0, 0.0, 0.0});
  const Spectrum s = dct2(im);
  const Grid ref = brute_dct(im.grid());
  CHECK(max_abs_diff(s.values, ref.values) <= 1e-12);
  for (double v : s.values) CHECK(std::abs(v) == doctest::Approx(0.5));
}

TEST_CASE("DC-only spectrum inverts to a constant") {
  Spectrum s(Shape{6, 4, 1});
  s.at(0, 0, 0) = 3.0;
  const Grid g = idct2(s);
  for (double v : g.values) CHECK(v == doctest::Approx(3.0 / std::sqrt(24.0)).epsilon(1e-14));
}

TEST_CASE("fast transforms equal brute force on every size up to 8x8") {
  Rng rng(17);
  for (int h = 1; h <= 8; ++h) {
    for (int w = 1; w <= 8; ++w) {
      const Image im = random_image({h, w, (h + w) % 2 ? 1 : 3}, rng);
      CHECK(max_abs_diff(dct2(im).values, brute_dct(im.grid()).values) <= 1e-12);
      Spectrum f(im.shape());
      for (double& v : f.values) v = rng.uniform(-2.0, 2.0);
      CHECK(max_abs_diff(idct2(f).values, brute_idct(f).values) <= 1e-12);
    }
  }
}

TEST_CASE("round trip and Parseval on assorted sizes") {
  Rng rng(23);
  const std::vector<Shape> shapes = {{1, 1, 1}, {2, 2, 1}, {7, 5, 1}, {28, 28, 1}, {32, 32, 3}};
  for (const Shape& s : shapes) {
    for (int t = 0; t < 20; ++t) {
      const Image im = random_image(s, rng);
      const Spectrum f = dct2(im);
      CHECK(max_abs_diff(idct2(f).values, im.pixels()) <= 1e-9);
      const double e = sum_sq(im.pixels());
      CHECK(std::abs(sum_sq(f.values) - e) <= 1e-9 * e);
    }
  }
}

TEST_CASE("linearity") {
  Rng rng(29);
  for (int t = 0; t < 50; ++t) {
    const Shape s{9, 6, 1};
    const Image x = random_image(s, rng), y = random_image(s, rng);
    const double a = rng.uniform(-3, 3), b = rng.uniform(-3, 3);
    Grid mix(s);
    for (std::size_t k = 0; k < mix.values.size(); ++k) mix.values[k] = a * x.pixels()[k] + b * y.pixels()[k];
    const Spectrum fm = dct2(mix), fx = dct2(x), fy = dct2(y);
    for (std::size_t k = 0; k < mix.values.size(); ++k) {
      CHECK(std::abs(fm.values[k] - (a * fx.values[k] + b * fy.values[k])) <= 1e-9);
    }
  }
}

TEST_CASE("disparity") {
  Rng rng(31);
  const Image a = random_image({8, 8, 1}, rng), b = random_image({8, 8, 1}, rng);
  for (double v : spectrum_disparity(a, a).values) CHECK(v == 0.0);
  const Spectrum d = spectrum_disparity(a, b), fa = dct2(a), fb = dct2(b);
  for (std::size_t k = 0; k < d.values.size(); ++k) CHECK(std::abs(d.values[k] - (fa.values[k] - fb.values[k])) <= 1e-9);
  CHECK_THROWS_AS(spectrum_disparity(a, Image::filled({8, 7, 1}, 0.0)), DimensionError);

  // A single-band spectral bump with no clipping shows up at that band only.
  Spectrum bump(a.shape());
  bump.at(0, 2, 3) = 0.01;
  Grid shifted = idct2(bump);
  const Image mid = Image::filled({8, 8, 1}, 0.5);
  for (std::size_t k = 0; k < shifted.values.size(); ++k) shifted.values[k] += mid.pixels()[k];
  const Spectrum only = spectrum_disparity(Image(shifted), mid);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) CHECK(std::abs(only.at(0, y, x) - (y == 2 && x == 3 ? 0.01 : 0.0)) <= 1e-12);
}

TEST_CASE("average log spectrum") {
  CHECK_THROWS_AS(average_log_spectrum({}), ArgumentError);
  const std::vector<Image> zero = {Image::filled({4, 4, 1}, 0.0)};
  for (double v : average_log_spectrum(zero).values) CHECK(v == 0.0);

  Rng rng(37);
  const Image a = random_image({6, 6, 3}, rng);
  const std::vector<Image> one = {a}, two = {a, a};
  CHECK(max_abs_diff(average_log_spectrum(one).values, average_log_spectrum(two).values) <= 1e-15);

  std::vector<Image> many;
  for (int i = 0; i < 100; ++i) many.push_back(random_image({6, 6, 3}, rng));
  const Spectrum m = average_log_spectrum(many);
  CHECK(m.shape == Shape{6, 6, 1});
  // Independent summation order: reverse images, channel-outer.
  Grid ref(Shape{6, 6, 1});
  for (int c = 2; c >= 0; --c) {
    for (int i = 99; i >= 0; --i) {
      const Grid f = brute_dct(many[static_cast<std::size_t>(i)].grid());
      for (int y = 0; y < 6; ++y)
        for (int x = 0; x < 6; ++x) ref.at(0, y, x) += std::log1p(std::abs(f.at(c, y, x))) / 300.0;
    }
  }
  CHECK(max_abs_diff(m.values, ref.values) <= 1e-9);
}

TEST_CASE("heat map and csv dumps") {
  const auto dir = std::filesystem::temp_directory_path() / "lowfreq_test_spectral";
  std::filesystem::create_directories(dir);
  Spectrum s(Shape{2, 2, 1}, std::vector<double>{0.0, 1.0, 2.0, 4.0});
  save_heatmap_pgm(s, dir / "h.pgm");
  const Image h = load_pnm(dir / "h.pgm");
  CHECK(h.pixels()[0] == 0.0);
  CHECK(h.pixels()[3] == 1.0);
  CHECK(h.pixels()[2] == 128.0 / 255.0);
  save_matrix_csv(s, dir / "m.csv");
  std::ifstream in(dir / "m.csv");
  std::string l1, l2;
  std::getline(in, l1);
  std::getline(in, l2);
  CHECK(l1 == "0,1");
  CHECK(l2 == "2,4");
}
