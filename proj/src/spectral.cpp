#include "lowfreq/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>

#include "lowfreq/errors.hpp"

namespace lowfreq {

namespace {

const DctMatrix& cached_matrix(int n) {
  thread_local std::map<int, DctMatrix> cache;
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, DctMatrix(n)).first;
  return it->second;
}

// out = A * X * B^T for one channel, where A is the height transform and B
// the width transform (or their transposes when `inverse`).
void transform_plane(std::span<const double> in, std::span<double> out, int h, int w, bool inverse) {
  const DctMatrix& mh = cached_matrix(h);
  const DctMatrix& mw = cached_matrix(w);
  std::vector<double> tmp(static_cast<std::size_t>(h) * w, 0.0);
  // Column pass: tmp[k][x] = sum_y A(k,y) in[y][x].
  for (int k = 0; k < h; ++k) {
    double* trow = tmp.data() + static_cast<std::size_t>(k) * w;
    for (int y = 0; y < h; ++y) {
      const double a = inverse ? mh(y, k) : mh(k, y);
      const double* irow = in.data() + static_cast<std::size_t>(y) * w;
      for (int x = 0; x < w; ++x) trow[x] += a * irow[x];
    }
  }
  // Row pass: out[k][l] = sum_x tmp[k][x] B(l,x).
  for (int k = 0; k < h; ++k) {
    const double* trow = tmp.data() + static_cast<std::size_t>(k) * w;
    double* orow = out.data() + static_cast<std::size_t>(k) * w;
    for (int l = 0; l < w; ++l) {
      double s = 0.0;
      for (int x = 0; x < w; ++x) s += trow[x] * (inverse ? mw(x, l) : mw(l, x));
      orow[l] = s;
    }
  }
}

}  // namespace

double dct_basis(int k, int i, int n) {
  const double scale = k == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
  return scale * std::cos(std::numbers::pi * (2.0 * i + 1.0) * k / (2.0 * n));
}

DctMatrix::DctMatrix(int n) : n_(n), m_(static_cast<std::size_t>(n) * n) {
  if (n < 1) throw DimensionError("DCT length must be positive");
  for (int k = 0; k < n; ++k) {
    for (int i = 0; i < n; ++i) m_[static_cast<std::size_t>(k) * n + i] = dct_basis(k, i, n);
  }
}

Spectrum dct2(const Grid& values) {
  Spectrum out(values.shape);
  for (int c = 0; c < values.shape.channels; ++c) {
    transform_plane(values.channel(c), out.channel(c), values.shape.height, values.shape.width, false);
  }
  return out;
}

Spectrum dct2(const Image& image) { return dct2(image.grid()); }

Grid idct2(const Spectrum& spectrum) {
  Grid out(spectrum.shape);
  for (int c = 0; c < spectrum.shape.channels; ++c) {
    transform_plane(spectrum.channel(c), out.channel(c), spectrum.shape.height, spectrum.shape.width, true);
  }
  return out;
}

Spectrum spectrum_disparity(const Image& a, const Image& b) {
  if (a.shape() != b.shape()) {
    throw DimensionError("disparity of " + to_string(a.shape()) + " and " + to_string(b.shape()));
  }
  Grid diff(a.shape());
  for (std::size_t i = 0; i < diff.values.size(); ++i) diff.values[i] = a.pixels()[i] - b.pixels()[i];
  return dct2(diff);
}

Spectrum average_log_spectrum(std::span<const Image> images) {
  if (images.empty()) throw ArgumentError("average_log_spectrum needs at least one image");
  const Shape shape = images.front().shape();
  Spectrum acc(Shape{shape.height, shape.width, 1});
  for (const Image& im : images) {
    if (im.shape() != shape) throw DimensionError("images differ in shape");
    const Spectrum s = dct2(im);
    for (int c = 0; c < shape.channels; ++c) {
      const auto plane = s.channel(c);
      for (std::size_t i = 0; i < plane.size(); ++i) acc.values[i] += std::log1p(std::abs(plane[i]));
    }
  }
  const double denom = static_cast<double>(images.size()) * shape.channels;
  for (double& v : acc.values) v /= denom;
  return acc;
}

double l2_norm(const Grid& g) {
  double s = 0.0;
  for (double v : g.values) s += v * v;
  return std::sqrt(s);
}

void save_heatmap_pgm(const Grid& g, const std::filesystem::path& path, int channel) {
  const auto plane = g.channel(channel);
  const auto [lo, hi] = std::minmax_element(plane.begin(), plane.end());
  const double range = *hi - *lo;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot create " + path.string());
  out << "P5\n" << g.shape.width << " " << g.shape.height << "\n255\n";
  for (double v : plane) {
    const double t = range > 0.0 ? (v - *lo) / range : 0.0;
    out.put(static_cast<char>(std::clamp(std::lround(t * 255.0), 0L, 255L)));
  }
  if (!out) throw IoError("failed writing " + path.string());
}

void save_matrix_csv(const Grid& g, const std::filesystem::path& path, int channel) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot create " + path.string());
  const auto plane = g.channel(channel);
  char buf[32];
  for (int y = 0; y < g.shape.height; ++y) {
    for (int x = 0; x < g.shape.width; ++x) {
      std::snprintf(buf, sizeof buf, "%.17g", plane[static_cast<std::size_t>(y) * g.shape.width + x]);
      out << (x ? "," : "") << buf;
    }
    out << "\n";
  }
}

}  // namespace lowfreq
