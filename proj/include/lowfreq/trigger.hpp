#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "lowfreq/spectral.hpp"
#include "lowfreq/tensor_io.hpp"

namespace lowfreq {

/// One DCT coefficient position.
struct Band {
  int channel = 0;
  int row = 0;
  int col = 0;
  bool operator==(const Band&) const = default;
  auto operator<=>(const Band&) const = default;
};

/// Sparse additive perturbation of the DCT spectrum: deltas[i] is added at bands[i].
struct FrequencyTrigger {
  std::vector<Band> bands;
  std::vector<double> deltas;
  double epsilon = 0.0;

  std::size_t size() const { return bands.size(); }
  /// max_i |delta_i| <= epsilon (inclusive).
  bool feasible() const;
  double delta_norm() const;
  /// Throws ArgumentError unless bands are distinct, counts agree, n >= 1,
  /// epsilon >= 0 and the trigger is feasible.
  void validate() const;
  bool operator==(const FrequencyTrigger&) const = default;
};

/// Searchable top-left block [0, row_limit) x [0, col_limit) of every channel.
struct FrequencyRegion {
  int row_limit = 1;
  int col_limit = 1;
  int band_count(int channels) const { return row_limit * col_limit * channels; }
};

/// Spatial patch trigger: x * (1 - mask) + pattern * mask.
struct PatchTrigger {
  Grid mask;
  Image pattern;
};

/// Pixel-domain pattern of the trigger, i.e. idct2 of the sparse delta spectrum.
Grid trigger_pattern(const Shape& shape, const FrequencyTrigger& trigger);

/// Adds the trigger in the DCT domain, inverts, and clips to [0, 1].
/// Evaluated as clip(x + idct2(delta)), which equals
/// clip(idct2(dct2(x) + delta)) by linearity.
Image apply_frequency_trigger(const Image& image, const FrequencyTrigger& trigger);

/// Applies the trigger to the items at `indices` and relabels them to `target_label`.
LabeledDataset poison_dataset(const LabeledDataset& dataset, const FrequencyTrigger& trigger,
                              std::span<const std::size_t> indices, int target_label);

/// Square top-left block with side round(sqrt(fraction) * min(H, W)), at least 1.
FrequencyRegion make_low_frequency_region(int height, int width, double fraction);

/// n distinct bands uniform over channels x region, deltas uniform in [-epsilon, epsilon].
FrequencyTrigger random_trigger(const FrequencyRegion& region, int channels, int n, double epsilon,
                                std::uint64_t seed);

/// Fresh candidate with the same n and epsilon (a full resample, not a local move).
FrequencyTrigger resample_trigger(const FrequencyTrigger& trigger, const FrequencyRegion& region,
                                  int channels, std::uint64_t seed);

/// Fixed trigger on the n highest-frequency bands of channel 0 in the
/// bottom-right quadrant, each perturbed by +epsilon.
FrequencyTrigger high_frequency_trigger(const Shape& shape, int n, double epsilon);

Image apply_patch_trigger(const Image& image, const PatchTrigger& patch);

/// White square of side `size` with its top-left pixel at (top, left), on every channel.
PatchTrigger square_patch(const Shape& shape, int size, int top, int left);

/// Trigger file: JSON object {n, epsilon, bands: [[c,h,w],...], deltas: [...]}.
std::string trigger_to_json(const FrequencyTrigger& trigger);
FrequencyTrigger trigger_from_json(const std::string& text);
void save_trigger(const FrequencyTrigger& trigger, const std::filesystem::path& path);
FrequencyTrigger load_trigger(const std::filesystem::path& path);

}  // namespace lowfreq
