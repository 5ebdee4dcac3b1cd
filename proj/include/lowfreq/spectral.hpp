#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "lowfreq/tensor_io.hpp"

namespace lowfreq {

/// DCT coefficients with the same layout and shape as the source image.
struct Spectrum : Grid {
  using Grid::Grid;
};

/// Orthonormal DCT-II matrix for one axis length: row k holds basis k
/// (weight sqrt(1/N) for k = 0, sqrt(2/N) otherwise).
class DctMatrix {
 public:
  explicit DctMatrix(int n);
  int size() const { return n_; }
  double operator()(int k, int i) const { return m_[static_cast<std::size_t>(k) * n_ + i]; }

 private:
  int n_;
  std::vector<double> m_;
};

/// Value of the orthonormal 1-D basis function `k` at sample `i` for length `n`.
double dct_basis(int k, int i, int n);

/// Per-channel separable 2-D DCT-II with orthonormal scaling.
Spectrum dct2(const Image& image);
Spectrum dct2(const Grid& values);

/// Inverse of dct2. The result is not clipped.
Grid idct2(const Spectrum& spectrum);

/// dct2(a - b), computed on the pixel difference.
Spectrum spectrum_disparity(const Image& a, const Image& b);

/// Per-coefficient mean of log(1 + |dct2(x)|) over images and channels.
/// The result has a single channel.
Spectrum average_log_spectrum(std::span<const Image> images);

/// Euclidean norm over all coefficients.
double l2_norm(const Grid& g);

/// Writes channel `channel` as an 8-bit PGM with values linearly rescaled
/// from [min, max] to [0, 255] (all zeros when the range is empty).
void save_heatmap_pgm(const Grid& g, const std::filesystem::path& path, int channel = 0);

/// Writes channel `channel` as a CSV matrix (one row per line, %.17g).
void save_matrix_csv(const Grid& g, const std::filesystem::path& path, int channel = 0);

}  // namespace lowfreq
