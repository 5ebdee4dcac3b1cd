#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "lowfreq/tensor_io.hpp"

namespace lowfreq {

struct StealthReport {
  double psnr = 0.0;  // dB, +infinity for identical images
  double ssim = 0.0;
  double freq_l2 = 0.0;
};

/// 10 log10(1 / MSE) with peak 1.0; +infinity when MSE is zero.
double psnr(const Image& a, const Image& b);

/// Mean local SSIM: 11x11 Gaussian window (sigma 1.5), K1 = 0.01, K2 = 0.03,
/// L = 1, over valid window positions, averaged over channels.
double ssim(const Image& a, const Image& b);

struct DisparityMap {
  Image map;       // amplified |dct2(a) - dct2(b)|, max-normalized to [0, 1]
  double l2 = 0.0; // unscaled l2 norm of the disparity
};

DisparityMap disparity_map(const Image& a, const Image& b, double amplification = 5.0);

StealthReport stealth_report(const Image& clean, const Image& poisoned);

/// "Inf" for infinite PSNR, otherwise two decimals.
std::string format_psnr(double db);

}  // namespace lowfreq
