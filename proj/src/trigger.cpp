#include "lowfreq/trigger.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "lowfreq/errors.hpp"
#include "lowfreq/random.hpp"

namespace lowfreq {

namespace {

void check_bands(const Shape& shape, const FrequencyTrigger& trigger) {
  for (const Band& b : trigger.bands) {
    if (b.channel < 0 || b.channel >= shape.channels || b.row < 0 || b.row >= shape.height ||
        b.col < 0 || b.col >= shape.width) {
      throw DimensionError("band (" + std::to_string(b.channel) + "," + std::to_string(b.row) + "," +
                           std::to_string(b.col) + ") outside image " + to_string(shape));
    }
  }
  if (trigger.bands.size() != trigger.deltas.size()) {
    throw ArgumentError("trigger has mismatched band/delta counts");
  }
}

}  // namespace

bool FrequencyTrigger::feasible() const {
  return std::all_of(deltas.begin(), deltas.end(), [&](double d) { return std::abs(d) <= epsilon; });
}

double FrequencyTrigger::delta_norm() const {
  double s = 0.0;
  for (double d : deltas) s += d * d;
  return std::sqrt(s);
}

void FrequencyTrigger::validate() const {
  if (bands.empty()) throw ArgumentError("trigger needs at least one band");
  if (bands.size() != deltas.size()) throw ArgumentError("trigger has mismatched band/delta counts");
  if (!(epsilon >= 0.0)) throw ArgumentError("trigger epsilon must be non-negative");
  if (std::set<Band>(bands.begin(), bands.end()).size() != bands.size()) {
    throw ArgumentError("trigger bands must be distinct");
  }
  if (!feasible()) throw ArgumentError("trigger perturbation exceeds epsilon");
}

Grid trigger_pattern(const Shape& shape, const FrequencyTrigger& trigger) {
  check_bands(shape, trigger);
  Grid out(shape);
  const DctMatrix rows(shape.height);
  const DctMatrix cols(shape.width);
  for (std::size_t i = 0; i < trigger.size(); ++i) {
    const Band& b = trigger.bands[i];
    const double d = trigger.deltas[i];
    if (d == 0.0) continue;
    for (int y = 0; y < shape.height; ++y) {
      const double ry = d * rows(b.row, y);
      for (int x = 0; x < shape.width; ++x) out.at(b.channel, y, x) += ry * cols(b.col, x);
    }
  }
  return out;
}

Image apply_frequency_trigger(const Image& image, const FrequencyTrigger& trigger) {
  Grid g = trigger_pattern(image.shape(), trigger);
  for (std::size_t i = 0; i < g.values.size(); ++i) g.values[i] += image.pixels()[i];
  return Image::clipped(std::move(g));
}

LabeledDataset poison_dataset(const LabeledDataset& dataset, const FrequencyTrigger& trigger,
                              std::span<const std::size_t> indices, int target_label) {
  if (target_label < 0 || target_label >= dataset.num_classes) {
    throw ArgumentError("target label " + std::to_string(target_label) + " out of range");
  }
  if (std::set<std::size_t>(indices.begin(), indices.end()).size() != indices.size()) {
    throw ArgumentError("poison indices must be distinct");
  }
  LabeledDataset out = dataset;
  if (indices.empty()) return out;
  const Grid pattern = trigger_pattern(dataset.shape(), trigger);
  for (std::size_t i : indices) {
    if (i >= dataset.size()) throw ArgumentError("poison index " + std::to_string(i) + " out of range");
    Grid g = pattern;
    const auto& px = dataset.images[i].pixels();
    for (std::size_t k = 0; k < g.values.size(); ++k) g.values[k] += px[k];
    out.images[i] = Image::clipped(std::move(g));
    out.labels[i] = target_label;
    out.poison_flags[i] = 1;
  }
  out.poison_meta = PoisonMeta{static_cast<double>(out.poisoned_count()) / static_cast<double>(out.size()),
                               target_label};
  return out;
}

FrequencyRegion make_low_frequency_region(int height, int width, double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ArgumentError("region fraction must lie in (0,1]");
  if (height < 1 || width < 1) throw DimensionError("region needs a positive image size");
  // std::lround rounds half away from zero.
  long side = std::lround(std::sqrt(fraction) * std::min(height, width));
  side = std::clamp(side, 1L, static_cast<long>(std::min(height, width)));
  return FrequencyRegion{static_cast<int>(side), static_cast<int>(side)};
}

FrequencyTrigger random_trigger(const FrequencyRegion& region, int channels, int n, double epsilon,
                                std::uint64_t seed) {
  if (n < 1) throw ArgumentError("trigger needs n >= 1");
  if (!(epsilon >= 0.0)) throw ArgumentError("epsilon must be non-negative");
  if (region.row_limit < 1 || region.col_limit < 1 || channels < 1) {
    throw ArgumentError("empty frequency region");
  }
  const int count = region.band_count(channels);
  if (n > count) {
    throw ArgumentError("region holds " + std::to_string(count) + " bands, fewer than n=" + std::to_string(n));
  }
  Rng rng(seed);
  std::vector<int> pool(static_cast<std::size_t>(count));
  std::iota(pool.begin(), pool.end(), 0);
  FrequencyTrigger t;
  t.epsilon = epsilon;
  const int per_channel = region.row_limit * region.col_limit;
  for (int i = 0; i < n; ++i) {
    const auto j = static_cast<std::size_t>(i) + rng.below(static_cast<std::uint64_t>(count - i));
    std::swap(pool[static_cast<std::size_t>(i)], pool[j]);
    const int idx = pool[static_cast<std::size_t>(i)];
    const int rem = idx % per_channel;
    t.bands.push_back(Band{idx / per_channel, rem / region.col_limit, rem % region.col_limit});
  }
  for (int i = 0; i < n; ++i) t.deltas.push_back(rng.uniform(-epsilon, epsilon));
  return t;
}

FrequencyTrigger resample_trigger(const FrequencyTrigger& trigger, const FrequencyRegion& region,
                                  int channels, std::uint64_t seed) {
  return random_trigger(region, channels, static_cast<int>(trigger.size()), trigger.epsilon, seed);
}

FrequencyTrigger high_frequency_trigger(const Shape& shape, int n, double epsilon) {
  std::vector<Band> quadrant;
  for (int h = shape.height / 2; h < shape.height; ++h) {
    for (int w = shape.width / 2; w < shape.width; ++w) quadrant.push_back(Band{0, h, w});
  }
  if (n < 1 || static_cast<std::size_t>(n) > quadrant.size()) {
    throw ArgumentError("bottom-right quadrant cannot host n bands");
  }
  std::stable_sort(quadrant.begin(), quadrant.end(), [](const Band& a, const Band& b) {
    if (a.row + a.col != b.row + b.col) return a.row + a.col > b.row + b.col;
    return a.row > b.row;
  });
  FrequencyTrigger t;
  t.epsilon = epsilon;
  t.bands.assign(quadrant.begin(), quadrant.begin() + n);
  t.deltas.assign(static_cast<std::size_t>(n), epsilon);
  return t;
}

Image apply_patch_trigger(const Image& image, const PatchTrigger& patch) {
  if (patch.mask.shape != image.shape() || patch.pattern.shape() != image.shape()) {
    throw DimensionError("patch trigger shape does not match image " + to_string(image.shape()));
  }
  Grid out(image.shape());
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    const double m = patch.mask.values[i];
    out.values[i] = image.pixels()[i] * (1.0 - m) + patch.pattern.pixels()[i] * m;
  }
  return Image(std::move(out));
}

PatchTrigger square_patch(const Shape& shape, int size, int top, int left) {
  if (size < 1 || top < 0 || left < 0 || top + size > shape.height || left + size > shape.width) {
    throw ArgumentError("patch does not fit inside the image");
  }
  Grid mask(shape);
  for (int c = 0; c < shape.channels; ++c) {
    for (int y = top; y < top + size; ++y) {
      for (int x = left; x < left + size; ++x) mask.at(c, y, x) = 1.0;
    }
  }
  return PatchTrigger{std::move(mask), Image::filled(shape, 1.0)};
}

std::string trigger_to_json(const FrequencyTrigger& trigger) {
  nlohmann::json j;
  j["n"] = trigger.size();
  j["epsilon"] = trigger.epsilon;
  j["bands"] = nlohmann::json::array();
  for (const Band& b : trigger.bands) j["bands"].push_back({b.channel, b.row, b.col});
  j["deltas"] = trigger.deltas;
  return j.dump(2) + "\n";
}

FrequencyTrigger trigger_from_json(const std::string& text) {
  FrequencyTrigger t;
  try {
    const auto j = nlohmann::json::parse(text);
    t.epsilon = j.at("epsilon").get<double>();
    for (const auto& b : j.at("bands")) {
      if (b.size() != 3) throw FormatError("band entries must be [c,h,w]");
      t.bands.push_back(Band{b[0].get<int>(), b[1].get<int>(), b[2].get<int>()});
    }
    t.deltas = j.at("deltas").get<std::vector<double>>();
    if (j.at("n").get<std::size_t>() != t.bands.size()) throw FormatError("trigger n does not match bands");
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed trigger file: ") + e.what());
  }
  t.validate();
  return t;
}

void save_trigger(const FrequencyTrigger& trigger, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot create " + path.string());
  out << trigger_to_json(trigger);
}

FrequencyTrigger load_trigger(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return trigger_from_json(ss.str());
}

}  // namespace lowfreq
