#include "lowfreq/defenses.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "lowfreq/errors.hpp"
#include "lowfreq/random.hpp"
#include "lowfreq/spectral.hpp"

namespace lowfreq {

namespace {

constexpr std::array<int, 64> kLuminanceTable = {
    16, 11, 10, 16, 24,  40,  51,  61,   //
    12, 12, 14, 19, 26,  58,  60,  55,   //
    14, 13, 16, 24, 40,  57,  69,  56,   //
    14, 17, 22, 29, 51,  87,  80,  62,   //
    18, 22, 37, 56, 68,  109, 103, 77,   //
    24, 35, 55, 64, 81,  104, 113, 92,   //
    49, 64, 78, 87, 103, 121, 120, 101,  //
    72, 92, 95, 98, 112, 100, 103, 99};

void check_window(int window) {
  if (window < 3 || window % 2 == 0) throw ArgumentError("filter window must be odd and >= 3");
}

int clamp_index(int i, int n) { return std::clamp(i, 0, n - 1); }

}  // namespace

void DefenseSpec::validate() const {
  switch (kind) {
    case DefenseKind::None: break;
    case DefenseKind::Gaussian:
    case DefenseKind::Wiener: check_window(window); break;
    case DefenseKind::Jpeg:
      if (quality < 1 || quality > 100) throw ArgumentError("JPEG quality must lie in [1,100]");
      break;
  }
}

std::string DefenseSpec::name() const {
  switch (kind) {
    case DefenseKind::None: return "none";
    case DefenseKind::Gaussian: return "gaussian";
    case DefenseKind::Wiener: return "wiener";
    case DefenseKind::Jpeg: return "jpeg";
  }
  return "none";
}

std::string DefenseSpec::param() const {
  std::ostringstream os;
  switch (kind) {
    case DefenseKind::None: os << "-"; break;
    case DefenseKind::Gaussian:
      os << "w=" << window << " sigma=" << (sigma > 0.0 ? sigma : default_gaussian_sigma(window));
      break;
    case DefenseKind::Wiener: os << "w=" << window; break;
    case DefenseKind::Jpeg: os << "q=" << quality; break;
  }
  return os.str();
}

DefenseSpec parse_defense(const std::string& kind, int window, double sigma, int quality) {
  DefenseSpec d;
  if (kind == "none") {
    d.kind = DefenseKind::None;
  } else if (kind == "gaussian") {
    d.kind = DefenseKind::Gaussian;
  } else if (kind == "wiener") {
    d.kind = DefenseKind::Wiener;
  } else if (kind == "jpeg") {
    d.kind = DefenseKind::Jpeg;
  } else {
    throw ArgumentError("unknown defense '" + kind + "'");
  }
  d.window = window;
  d.sigma = sigma;
  d.quality = quality;
  d.validate();
  return d;
}

double default_gaussian_sigma(int window) { return 0.3 * ((window - 1) * 0.5 - 1.0) + 0.8; }

std::vector<double> gaussian_kernel(int window, double sigma) {
  check_window(window);
  if (sigma <= 0.0) sigma = default_gaussian_sigma(window);
  const int r = window / 2;
  std::vector<double> k(static_cast<std::size_t>(window) * window);
  double sum = 0.0;
  for (int dy = -r; dy <= r; ++dy) {
    for (int dx = -r; dx <= r; ++dx) {
      const double v = std::exp(-(dy * dy + dx * dx) / (2.0 * sigma * sigma));
      k[static_cast<std::size_t>(dy + r) * window + (dx + r)] = v;
      sum += v;
    }
  }
  for (double& v : k) v /= sum;
  return k;
}

Image gaussian_filter(const Image& image, int window, double sigma) {
  const auto kernel = gaussian_kernel(window, sigma);
  const int r = window / 2;
  const int h = image.height();
  const int w = image.width();
  Grid out(image.shape());
  for (int c = 0; c < image.channels(); ++c) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        double s = 0.0;
        for (int dy = -r; dy <= r; ++dy) {
          for (int dx = -r; dx <= r; ++dx) {
            s += kernel[static_cast<std::size_t>(dy + r) * window + (dx + r)] *
                 image.at(c, clamp_index(y + dy, h), clamp_index(x + dx, w));
          }
        }
        out.at(c, y, x) = s;
      }
    }
  }
  return Image::clipped(std::move(out));
}

Image wiener_filter(const Image& image, int window) {
  check_window(window);
  const int r = window / 2;
  const int h = image.height();
  const int w = image.width();
  const double count = static_cast<double>(window) * window;
  Grid out(image.shape());
  std::vector<double> mean(static_cast<std::size_t>(h) * w);
  std::vector<double> var(mean.size());
  for (int c = 0; c < image.channels(); ++c) {
    double noise = 0.0;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        double s = 0.0;
        double s2 = 0.0;
        for (int dy = -r; dy <= r; ++dy) {
          for (int dx = -r; dx <= r; ++dx) {
            const double v = image.at(c, clamp_index(y + dy, h), clamp_index(x + dx, w));
            s += v;
            s2 += v * v;
          }
        }
        const std::size_t i = static_cast<std::size_t>(y) * w + x;
        mean[i] = s / count;
        var[i] = std::max(s2 / count - mean[i] * mean[i], 0.0);
        noise += var[i];
      }
    }
    noise /= static_cast<double>(mean.size());
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const std::size_t i = static_cast<std::size_t>(y) * w + x;
        const double denom = std::max(var[i], noise);
        const double gain = denom > 0.0 ? std::max(var[i] - noise, 0.0) / denom : 0.0;
        out.at(c, y, x) = mean[i] + gain * (image.at(c, y, x) - mean[i]);
      }
    }
  }
  return Image::clipped(std::move(out));
}

std::array<int, 64> jpeg_quant_table(int quality) {
  if (quality < 1 || quality > 100) throw ArgumentError("JPEG quality must lie in [1,100]");
  const int scale = quality < 50 ? 5000 / quality : 200 - 2 * quality;
  std::array<int, 64> t{};
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = std::max(1, (kLuminanceTable[i] * scale + 50) / 100);
  return t;
}

Image jpeg_compress(const Image& image, int quality) {
  const auto table = jpeg_quant_table(quality);
  const DctMatrix m(8);
  const int h = image.height();
  const int w = image.width();
  Grid out(image.shape());
  double block[8][8];
  double coeff[8][8];
  double tmp[8][8];
  for (int c = 0; c < image.channels(); ++c) {
    for (int by = 0; by < h; by += 8) {
      for (int bx = 0; bx < w; bx += 8) {
        for (int y = 0; y < 8; ++y) {
          for (int x = 0; x < 8; ++x) {
            block[y][x] = image.at(c, clamp_index(by + y, h), clamp_index(bx + x, w)) * 255.0 - 128.0;
          }
        }
        // Forward DCT: coeff = M * block * M^T.
        for (int u = 0; u < 8; ++u) {
          for (int x = 0; x < 8; ++x) {
            double s = 0.0;
            for (int y = 0; y < 8; ++y) s += m(u, y) * block[y][x];
            tmp[u][x] = s;
          }
        }
        for (int u = 0; u < 8; ++u) {
          for (int v = 0; v < 8; ++v) {
            double s = 0.0;
            for (int x = 0; x < 8; ++x) s += tmp[u][x] * m(v, x);
            const double q = table[static_cast<std::size_t>(u * 8 + v)];
            coeff[u][v] = std::round(s / q) * q;
          }
        }
        // Inverse DCT: block = M^T * coeff * M.
        for (int y = 0; y < 8; ++y) {
          for (int v = 0; v < 8; ++v) {
            double s = 0.0;
            for (int u = 0; u < 8; ++u) s += m(u, y) * coeff[u][v];
            tmp[y][v] = s;
          }
        }
        for (int y = 0; y < 8 && by + y < h; ++y) {
          for (int x = 0; x < 8 && bx + x < w; ++x) {
            double s = 0.0;
            for (int v = 0; v < 8; ++v) s += tmp[y][v] * m(v, x);
            out.at(c, by + y, bx + x) = (s + 128.0) / 255.0;
          }
        }
      }
    }
  }
  return Image::clipped(std::move(out));
}

Image apply_defense(const Image& image, const DefenseSpec& defense) {
  defense.validate();
  switch (defense.kind) {
    case DefenseKind::None: return image;
    case DefenseKind::Gaussian: return gaussian_filter(image, defense.window, defense.sigma);
    case DefenseKind::Wiener: return wiener_filter(image, defense.window);
    case DefenseKind::Jpeg: return jpeg_compress(image, defense.quality);
  }
  return image;
}

double entropy(std::span<const double> probabilities) {
  double h = 0.0;
  for (double p : probabilities) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

double strip_entropy(const ProbabilityModel& model, const Image& test_image, std::span<const Image> pool,
                     int n_overlays, double blend, std::uint64_t seed) {
  if (pool.empty()) throw ArgumentError("STRIP needs a non-empty clean pool");
  if (n_overlays < 1 || static_cast<std::size_t>(n_overlays) > pool.size()) {
    throw ArgumentError("STRIP overlay count must lie in [1, pool size]");
  }
  // Canonical order: by content hash, ties by lexicographic pixel order.
  std::vector<std::size_t> order(pool.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<std::uint64_t> hashes(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) {
    const auto& px = pool[i].pixels();
    hashes[i] = fnv1a64({reinterpret_cast<const char*>(px.data()), px.size() * sizeof(double)});
  }
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (hashes[a] != hashes[b]) return hashes[a] < hashes[b];
    return pool[a].pixels() < pool[b].pixels();
  });
  Rng rng(seed);
  double sum = 0.0;
  for (int k = 0; k < n_overlays; ++k) {
    const std::size_t j = static_cast<std::size_t>(k) + rng.below(order.size() - static_cast<std::size_t>(k));
    std::swap(order[static_cast<std::size_t>(k)], order[j]);
    const Image& overlay = pool[order[static_cast<std::size_t>(k)]];
    if (overlay.shape() != test_image.shape()) throw DimensionError("STRIP overlay shape mismatch");
    Grid mix(test_image.shape());
    for (std::size_t i = 0; i < mix.values.size(); ++i) {
      mix.values[i] = blend * test_image.pixels()[i] + (1.0 - blend) * overlay.pixels()[i];
    }
    sum += entropy(model(Image::clipped(std::move(mix))));
  }
  return sum / n_overlays;
}

double attack_success_rate(const ProbabilityModel& model, const LabeledDataset& clean_test,
                           const ImageTransform& trigger, int target_label, const DefenseSpec& defense) {
  defense.validate();
  std::size_t total = 0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < clean_test.size(); ++i) {
    if (clean_test.labels[i] == target_label) continue;
    ++total;
    const Image attacked = apply_defense(trigger(clean_test.images[i]), defense);
    if (argmax(model(attacked)) == target_label) ++hits;
  }
  if (total == 0) throw ArgumentError("no test samples outside the target class");
  return static_cast<double>(hits) / static_cast<double>(total);
}

double attack_success_rate(const ProbabilityModel& model, const LabeledDataset& clean_test,
                           const FrequencyTrigger& trigger, int target_label, const DefenseSpec& defense) {
  return attack_success_rate(
      model, clean_test, [&](const Image& im) { return apply_frequency_trigger(im, trigger); }, target_label,
      defense);
}

double defended_accuracy(const ProbabilityModel& model, const LabeledDataset& clean_test,
                         const DefenseSpec& defense) {
  defense.validate();
  if (clean_test.empty()) throw ArgumentError("accuracy of an empty dataset");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < clean_test.size(); ++i) {
    if (argmax(model(apply_defense(clean_test.images[i], defense))) == clean_test.labels[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(clean_test.size());
}

}  // namespace lowfreq
