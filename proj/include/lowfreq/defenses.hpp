#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "lowfreq/classifier.hpp"
#include "lowfreq/trigger.hpp"

namespace lowfreq {

enum class DefenseKind { None, Gaussian, Wiener, Jpeg };

struct DefenseSpec {
  DefenseKind kind = DefenseKind::None;
  int window = 3;
  double sigma = 0.0;  // <= 0 selects default_gaussian_sigma(window)
  int quality = 90;

  void validate() const;
  /// "none", "gaussian", "wiener" or "jpeg".
  std::string name() const;
  /// Human-readable parameter column, e.g. "w=3 sigma=0.8" or "q=50".
  std::string param() const;
};

DefenseSpec parse_defense(const std::string& kind, int window, double sigma, int quality);

/// 0.3 * ((w - 1) * 0.5 - 1) + 0.8.
double default_gaussian_sigma(int window);

/// Normalized window x window Gaussian kernel, row-major.
std::vector<double> gaussian_kernel(int window, double sigma);

/// Per-channel convolution with edge replication, clipped to [0, 1].
Image gaussian_filter(const Image& image, int window, double sigma = 0.0);

/// Per-channel adaptive Wiener filter: local mean/variance over the window
/// (edge replication), noise power = mean local variance of the channel,
/// out = mu + max(var - noise, 0) / max(var, noise) * (x - mu).
Image wiener_filter(const Image& image, int window);

/// Standard JPEG luminance table scaled for `quality` (libjpeg convention),
/// entries floor((base * scale + 50) / 100) clamped to >= 1. Row-major 8x8.
std::array<int, 64> jpeg_quant_table(int quality);

/// Quantization round trip of baseline JPEG on every channel: x255, level
/// shift, 8x8 block DCT with edge-replicated padding, quantize, dequantize,
/// inverse DCT, /255, clip. Entropy coding and chroma handling are omitted.
Image jpeg_compress(const Image& image, int quality);

Image apply_defense(const Image& image, const DefenseSpec& defense);

/// Shannon entropy in nats; 0 log 0 = 0.
double entropy(std::span<const double> probabilities);

/// Mean prediction entropy of blend * x + (1 - blend) * c over `n_overlays`
/// overlays c drawn without replacement from `pool`. Selection is made on a
/// content-sorted view of the pool, so it does not depend on pool order.
double strip_entropy(const ProbabilityModel& model, const Image& test_image, std::span<const Image> pool,
                     int n_overlays, double blend = 0.5, std::uint64_t seed = 1);

using ImageTransform = std::function<Image(const Image&)>;

/// Fraction of test images with label != target that are predicted as the
/// target after `trigger` and then `defense` are applied.
double attack_success_rate(const ProbabilityModel& model, const LabeledDataset& clean_test,
                           const ImageTransform& trigger, int target_label,
                           const DefenseSpec& defense = {});
double attack_success_rate(const ProbabilityModel& model, const LabeledDataset& clean_test,
                           const FrequencyTrigger& trigger, int target_label,
                           const DefenseSpec& defense = {});

/// Clean accuracy after the defense transform.
double defended_accuracy(const ProbabilityModel& model, const LabeledDataset& clean_test,
                         const DefenseSpec& defense);

}  // namespace lowfreq
