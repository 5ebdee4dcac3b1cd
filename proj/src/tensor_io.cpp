#include "lowfreq/tensor_io.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "lowfreq/errors.hpp"
#include "lowfreq/random.hpp"

namespace lowfreq {

namespace {

constexpr std::uint32_t kIdxImageMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

std::uint32_t read_be32(std::istream& in, const std::filesystem::path& path) {
  std::array<unsigned char, 4> b{};
  if (!in.read(reinterpret_cast<char*>(b.data()), 4)) {
    throw IoError("truncated IDX header in " + path.string());
  }
  return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) |
         std::uint32_t{b[3]};
}

void write_be32(std::ostream& out, std::uint32_t v) {
  const std::array<char, 4> b{static_cast<char>(v >> 24), static_cast<char>(v >> 16),
                              static_cast<char>(v >> 8), static_cast<char>(v)};
  out.write(b.data(), 4);
}

std::ifstream open_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return in;
}

std::vector<unsigned char> read_payload(std::istream& in, std::size_t bytes,
                                        const std::filesystem::path& path) {
  std::vector<unsigned char> buf(bytes);
  if (bytes > 0 && !in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(bytes))) {
    throw IoError("truncated payload in " + path.string());
  }
  return buf;
}

// Next whitespace-delimited PNM header token, skipping '#' comments.
std::string pnm_token(std::istream& in) {
  std::string tok;
  int ch;
  while ((ch = in.get()) != EOF) {
    if (ch == '#') {
      while ((ch = in.get()) != EOF && ch != '\n') {
      }
      continue;
    }
    if (std::isspace(ch)) {
      if (!tok.empty()) return tok;
      continue;
    }
    tok.push_back(static_cast<char>(ch));
  }
  return tok;
}

int parse_header_int(const std::string& tok, const std::filesystem::path& path) {
  try {
    std::size_t pos = 0;
    const int v = std::stoi(tok, &pos);
    if (pos != tok.size()) throw FormatError("");
    return v;
  } catch (const std::exception&) {
    throw FormatError("bad PNM header field '" + tok + "' in " + path.string());
  }
}

}  // namespace

std::string to_string(const Shape& s) {
  std::ostringstream os;
  os << s.height << "x" << s.width << "x" << s.channels;
  return os.str();
}

Grid::Grid(Shape s, double fill) : shape(s), values(s.size(), fill) {}

Grid::Grid(Shape s, std::vector<double> v) : shape(s), values(std::move(v)) {
  if (values.size() != shape.size()) {
    throw DimensionError("grid of shape " + to_string(shape) + " given " +
                         std::to_string(values.size()) + " values");
  }
}

Image::Image(Shape shape, std::vector<double> pixels) : Image(Grid(shape, std::move(pixels))) {}

Image::Image(Grid grid) : grid_(std::move(grid)) {
  const Shape& s = grid_.shape;
  if (s.height < 1 || s.width < 1 || (s.channels != 1 && s.channels != 3)) {
    throw DimensionError("invalid image shape " + to_string(s));
  }
  if (grid_.values.size() != s.size()) throw DimensionError("pixel count does not match shape");
  for (double p : grid_.values) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw ArgumentError("pixel value " + std::to_string(p) + " outside [0,1]");
    }
  }
}

Image Image::filled(Shape shape, double value) { return Image(Grid(shape, value)); }

Image Image::clipped(Grid grid) {
  for (double& v : grid.values) v = std::clamp(v, 0.0, 1.0);
  return Image(std::move(grid));
}

const Shape& LabeledDataset::shape() const {
  if (images.empty()) throw ArgumentError("empty dataset has no shape");
  return images.front().shape();
}

std::size_t LabeledDataset::poisoned_count() const {
  return static_cast<std::size_t>(std::count(poison_flags.begin(), poison_flags.end(), 1));
}

void LabeledDataset::validate() const {
  if (num_classes < 2) throw ConsistencyError("num_classes must be at least 2");
  if (labels.size() != images.size() || poison_flags.size() != images.size()) {
    throw ConsistencyError("dataset arrays have different lengths");
  }
  for (int y : labels) {
    if (y < 0 || y >= num_classes) throw ConsistencyError("label " + std::to_string(y) + " out of range");
  }
  for (const Image& im : images) {
    if (im.shape() != images.front().shape()) throw ConsistencyError("images differ in shape");
  }
  if (poison_meta) {
    const auto& m = *poison_meta;
    if (m.ratio < 0.0 || m.ratio > 1.0) throw ConsistencyError("poison ratio outside [0,1]");
    if (m.target_label < 0 || m.target_label >= num_classes) {
      throw ConsistencyError("target label out of range");
    }
    const auto expected = static_cast<std::size_t>(std::llround(m.ratio * static_cast<double>(size())));
    if (poisoned_count() != expected) {
      throw ConsistencyError("poisoned count " + std::to_string(poisoned_count()) +
                             " != round(ratio*N) = " + std::to_string(expected));
    }
  }
}

LabeledDataset LabeledDataset::head(std::size_t n) const {
  std::vector<std::size_t> idx(std::min(n, size()));
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return subset(idx);
}

LabeledDataset LabeledDataset::subset(std::span<const std::size_t> indices) const {
  LabeledDataset out;
  out.num_classes = num_classes;
  out.images.reserve(indices.size());
  for (std::size_t i : indices) {
    if (i >= size()) throw ArgumentError("subset index " + std::to_string(i) + " out of range");
    out.images.push_back(images[i]);
    out.labels.push_back(labels[i]);
    out.poison_flags.push_back(poison_flags[i]);
  }
  // The ratio invariant no longer holds for an arbitrary subset.
  return out;
}

LabeledDataset load_idx(const std::filesystem::path& images_path,
                        const std::filesystem::path& labels_path) {
  auto img_in = open_binary(images_path);
  auto lbl_in = open_binary(labels_path);

  if (read_be32(img_in, images_path) != kIdxImageMagic) {
    throw FormatError("bad IDX image magic in " + images_path.string());
  }
  const std::uint32_t count = read_be32(img_in, images_path);
  const std::uint32_t rows = read_be32(img_in, images_path);
  const std::uint32_t cols = read_be32(img_in, images_path);

  if (read_be32(lbl_in, labels_path) != kIdxLabelMagic) {
    throw FormatError("bad IDX label magic in " + labels_path.string());
  }
  const std::uint32_t label_count = read_be32(lbl_in, labels_path);
  if (label_count != count) {
    throw ConsistencyError("image count " + std::to_string(count) + " != label count " +
                           std::to_string(label_count));
  }
  if (count > 0 && (rows == 0 || cols == 0)) throw FormatError("zero image dimension in IDX header");

  const Shape shape{static_cast<int>(rows), static_cast<int>(cols), 1};
  const auto pixels = read_payload(img_in, std::size_t{count} * shape.size(), images_path);
  const auto raw_labels = read_payload(lbl_in, count, labels_path);

  LabeledDataset ds;
  ds.images.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    std::vector<double> px(shape.size());
    const unsigned char* src = pixels.data() + std::size_t{i} * shape.size();
    for (std::size_t k = 0; k < px.size(); ++k) px[k] = static_cast<double>(src[k]) / 255.0;
    ds.images.emplace_back(shape, std::move(px));
  }
  int max_label = 0;
  for (unsigned char l : raw_labels) {
    ds.labels.push_back(l);
    max_label = std::max(max_label, static_cast<int>(l));
  }
  ds.num_classes = std::max(2, max_label + 1);
  ds.poison_flags.assign(count, 0);
  return ds;
}

std::uint8_t quantize_byte(double p) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(p * 255.0), 0L, 255L));
}

void save_idx(const LabeledDataset& dataset, const std::filesystem::path& images_path,
              const std::filesystem::path& labels_path) {
  std::ofstream img(images_path, std::ios::binary);
  std::ofstream lbl(labels_path, std::ios::binary);
  if (!img || !lbl) throw IoError("cannot create IDX output files");
  const Shape s = dataset.empty() ? Shape{0, 0, 1} : dataset.shape();
  if (s.channels != 1) throw DimensionError("IDX writer supports single-channel images only");
  write_be32(img, kIdxImageMagic);
  write_be32(img, static_cast<std::uint32_t>(dataset.size()));
  write_be32(img, static_cast<std::uint32_t>(s.height));
  write_be32(img, static_cast<std::uint32_t>(s.width));
  for (const Image& im : dataset.images) {
    for (double p : im.pixels()) img.put(static_cast<char>(quantize_byte(p)));
  }
  write_be32(lbl, kIdxLabelMagic);
  write_be32(lbl, static_cast<std::uint32_t>(dataset.size()));
  for (int y : dataset.labels) lbl.put(static_cast<char>(y));
  if (!img || !lbl) throw IoError("failed writing IDX output");
}

Image load_pnm(const std::filesystem::path& path) {
  auto in = open_binary(path);
  const std::string magic = pnm_token(in);
  int channels;
  if (magic == "P5") {
    channels = 1;
  } else if (magic == "P6") {
    channels = 3;
  } else {
    throw FormatError("unsupported PNM magic '" + magic + "' in " + path.string());
  }
  const int width = parse_header_int(pnm_token(in), path);
  const int height = parse_header_int(pnm_token(in), path);
  const int maxval = parse_header_int(pnm_token(in), path);
  if (maxval != 255) throw FormatError("unsupported PNM maxval " + std::to_string(maxval));
  if (width < 1 || height < 1) throw FormatError("bad PNM dimensions in " + path.string());

  const Shape shape{height, width, channels};
  const auto bytes = read_payload(in, shape.size(), path);
  Grid g(shape);
  std::size_t k = 0;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      for (int c = 0; c < channels; ++c) g.at(c, y, x) = static_cast<double>(bytes[k++]) / 255.0;
    }
  }
  return Image(std::move(g));
}

void save_pnm(const Image& image, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot create " + path.string());
  out << (image.channels() == 1 ? "P5" : "P6") << "\n"
      << image.width() << " " << image.height() << "\n255\n";
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      for (int c = 0; c < image.channels(); ++c) out.put(static_cast<char>(quantize_byte(image.at(c, y, x))));
    }
  }
  if (!out) throw IoError("failed writing " + path.string());
}

std::vector<std::size_t> select_poison_indices(const LabeledDataset& dataset, double ratio,
                                               std::uint64_t seed) {
  if (!(ratio >= 0.0 && ratio <= 1.0)) throw ArgumentError("poison ratio must lie in [0,1]");
  const std::size_t n = dataset.size();
  const auto k = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(n)));
  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  Rng rng(seed);
  // Partial Fisher-Yates.
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  return pool;
}

}  // namespace lowfreq
