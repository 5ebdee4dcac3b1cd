#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace lowfreq {

struct Shape {
  int height = 0;
  int width = 0;
  int channels = 0;

  std::size_t size() const {
    return static_cast<std::size_t>(height) * static_cast<std::size_t>(width) *
           static_cast<std::size_t>(channels);
  }
  std::size_t plane() const { return static_cast<std::size_t>(height) * static_cast<std::size_t>(width); }
  bool operator==(const Shape&) const = default;
};

std::string to_string(const Shape& s);

/// Unconstrained real array with image layout: planar, channel-major, row-major
/// within a channel. Holds spectra and intermediate (unclipped) pixel data.
struct Grid {
  Shape shape;
  std::vector<double> values;

  Grid() = default;
  explicit Grid(Shape s, double fill = 0.0);
  Grid(Shape s, std::vector<double> v);

  std::size_t index(int c, int y, int x) const {
    return (static_cast<std::size_t>(c) * static_cast<std::size_t>(shape.height) +
            static_cast<std::size_t>(y)) *
               static_cast<std::size_t>(shape.width) +
           static_cast<std::size_t>(x);
  }
  double& at(int c, int y, int x) { return values[index(c, y, x)]; }
  double at(int c, int y, int x) const { return values[index(c, y, x)]; }

  std::span<double> channel(int c) { return {values.data() + c * shape.plane(), shape.plane()}; }
  std::span<const double> channel(int c) const {
    return {values.data() + c * shape.plane(), shape.plane()};
  }
};

/// H×W×C image with every pixel in [0, 1]. Construction validates the range.
class Image {
 public:
  Image() = default;
  Image(Shape shape, std::vector<double> pixels);
  explicit Image(Grid grid);

  /// Constant-valued image.
  static Image filled(Shape shape, double value);
  /// Clamps every value of `grid` into [0, 1].
  static Image clipped(Grid grid);

  const Shape& shape() const { return grid_.shape; }
  int height() const { return grid_.shape.height; }
  int width() const { return grid_.shape.width; }
  int channels() const { return grid_.shape.channels; }

  const std::vector<double>& pixels() const { return grid_.values; }
  const Grid& grid() const { return grid_; }
  double at(int c, int y, int x) const { return grid_.at(c, y, x); }

  bool operator==(const Image& other) const {
    return grid_.shape == other.grid_.shape && grid_.values == other.grid_.values;
  }

 private:
  Grid grid_;
};

struct PoisonMeta {
  double ratio = 0.0;
  int target_label = 0;
};

struct LabeledDataset {
  std::vector<Image> images;
  std::vector<int> labels;
  int num_classes = 2;
  std::vector<std::uint8_t> poison_flags;
  std::optional<PoisonMeta> poison_meta;

  std::size_t size() const { return images.size(); }
  bool empty() const { return images.empty(); }
  /// Shape shared by all items; throws ArgumentError on an empty dataset.
  const Shape& shape() const;
  std::size_t poisoned_count() const;

  /// Checks every dataset invariant, throwing ConsistencyError on violation.
  void validate() const;

  /// First `n` items (or all, if fewer). Poison flags are carried along.
  LabeledDataset head(std::size_t n) const;
  /// Items at `indices`, in that order.
  LabeledDataset subset(std::span<const std::size_t> indices) const;
};

/// Reads an IDX image/label file pair (uncompressed, u8 payload).
/// Pixels are scaled by 1/255. num_classes is max label + 1 (at least 2).
LabeledDataset load_idx(const std::filesystem::path& images_path,
                        const std::filesystem::path& labels_path);

/// Writes an IDX pair; pixels are quantized with round(p * 255).
void save_idx(const LabeledDataset& dataset, const std::filesystem::path& images_path,
              const std::filesystem::path& labels_path);

/// Binary PGM (P5) or PPM (P6) with maxval 255.
Image load_pnm(const std::filesystem::path& path);
void save_pnm(const Image& image, const std::filesystem::path& path);

/// round(ratio * N) distinct indices drawn uniformly without replacement,
/// returned in draw order. Deterministic under `seed`.
std::vector<std::size_t> select_poison_indices(const LabeledDataset& dataset, double ratio,
                                               std::uint64_t seed);

/// Byte quantization used by every 8-bit writer.
std::uint8_t quantize_byte(double p);

}  // namespace lowfreq
