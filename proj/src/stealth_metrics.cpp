#include "lowfreq/stealth_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "lowfreq/errors.hpp"
#include "lowfreq/spectral.hpp"

namespace lowfreq {

namespace {

constexpr int kSsimWindow = 11;
constexpr double kSsimSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

void require_same_shape(const Image& a, const Image& b) {
  if (a.shape() != b.shape()) {
    throw DimensionError("image shapes differ: " + to_string(a.shape()) + " vs " + to_string(b.shape()));
  }
}

std::vector<double> ssim_window() {
  std::vector<double> w(kSsimWindow * kSsimWindow);
  const int r = kSsimWindow / 2;
  double sum = 0.0;
  for (int y = 0; y < kSsimWindow; ++y) {
    for (int x = 0; x < kSsimWindow; ++x) {
      const double d2 = (y - r) * (y - r) + (x - r) * (x - r);
      w[static_cast<std::size_t>(y) * kSsimWindow + x] = std::exp(-d2 / (2.0 * kSsimSigma * kSsimSigma));
      sum += w[static_cast<std::size_t>(y) * kSsimWindow + x];
    }
  }
  for (double& v : w) v /= sum;
  return w;
}

}  // namespace

double psnr(const Image& a, const Image& b) {
  require_same_shape(a, b);
  double se = 0.0;
  for (std::size_t i = 0; i < a.pixels().size(); ++i) {
    const double d = a.pixels()[i] - b.pixels()[i];
    se += d * d;
  }
  const double mse = se / static_cast<double>(a.pixels().size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

double ssim(const Image& a, const Image& b) {
  require_same_shape(a, b);
  if (std::min(a.height(), a.width()) < kSsimWindow) {
    throw ArgumentError("SSIM needs images of at least 11x11");
  }
  static const std::vector<double> window = ssim_window();
  const int oh = a.height() - kSsimWindow + 1;
  const int ow = a.width() - kSsimWindow + 1;
  double total = 0.0;
  for (int c = 0; c < a.channels(); ++c) {
    double channel_sum = 0.0;
    for (int y = 0; y < oh; ++y) {
      for (int x = 0; x < ow; ++x) {
        double ma = 0, mb = 0, saa = 0, sbb = 0, sab = 0;
        for (int dy = 0; dy < kSsimWindow; ++dy) {
          for (int dx = 0; dx < kSsimWindow; ++dx) {
            const double wv = window[static_cast<std::size_t>(dy) * kSsimWindow + dx];
            const double va = a.at(c, y + dy, x + dx);
            const double vb = b.at(c, y + dy, x + dx);
            ma += wv * va;
            mb += wv * vb;
            saa += wv * va * va;
            sbb += wv * vb * vb;
            sab += wv * va * vb;
          }
        }
        const double var_a = saa - ma * ma;
        const double var_b = sbb - mb * mb;
        const double cov = sab - ma * mb;
        channel_sum += ((2 * ma * mb + kC1) * (2 * cov + kC2)) /
                       ((ma * ma + mb * mb + kC1) * (var_a + var_b + kC2));
      }
    }
    total += channel_sum / (static_cast<double>(oh) * ow);
  }
  return total / a.channels();
}

DisparityMap disparity_map(const Image& a, const Image& b, double amplification) {
  const Spectrum d = spectrum_disparity(a, b);
  Grid mag(d.shape);
  double peak = 0.0;
  for (std::size_t i = 0; i < mag.values.size(); ++i) {
    mag.values[i] = std::abs(d.values[i]) * amplification;
    peak = std::max(peak, mag.values[i]);
  }
  if (peak > 0.0) {
    for (double& v : mag.values) v /= peak;
  }
  return {Image::clipped(std::move(mag)), l2_norm(d)};
}

StealthReport stealth_report(const Image& clean, const Image& poisoned) {
  return {psnr(clean, poisoned), ssim(clean, poisoned), l2_norm(spectrum_disparity(poisoned, clean))};
}

std::string format_psnr(double db) {
  if (std::isinf(db)) return "Inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", db);
  return buf;
}

}  // namespace lowfreq
