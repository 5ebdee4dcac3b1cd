#include "lowfreq/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <bit>
#include <cctype>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

#include "lowfreq/errors.hpp"
#include "lowfreq/random.hpp"

namespace lowfreq {

namespace {

constexpr char kCheckpointMagic[8] = {'L', 'F', 'Q', 'C', 'K', 'P', 'T', '\0'};
constexpr std::uint32_t kCheckpointVersion = 1;
constexpr double kProbabilityFloor = 1e-12;

int flat(const Shape& s) { return static_cast<int>(s.size()); }

void softmax_inplace(std::vector<double>& v) {
  const double m = *std::max_element(v.begin(), v.end());
  double sum = 0.0;
  for (double& x : v) {
    x = std::exp(x - m);
    sum += x;
  }
  for (double& x : v) x /= sum;
}

template <typename T>
void put(std::ostream& out, T v) {
  unsigned char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
  out.write(reinterpret_cast<const char*>(b), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  unsigned char b[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(b), sizeof(T))) throw IoError("truncated checkpoint");
  if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
  T v;
  std::memcpy(&v, b, sizeof(T));
  return v;
}

}  // namespace

struct Classifier::Trace {
  std::vector<std::vector<double>> acts;         // acts[i] is the input of layer i
  std::vector<std::vector<std::uint32_t>> pool;  // argmax positions per maxpool layer
};

Descriptor default_descriptor(int num_classes) {
  return {LayerSpec::conv(8, 3, 1), LayerSpec::relu(),         LayerSpec::maxpool(2),
          LayerSpec::conv(16, 3, 1), LayerSpec::relu(),        LayerSpec::maxpool(2),
          LayerSpec::dense(32),      LayerSpec::relu(),        LayerSpec::dense(num_classes),
          LayerSpec::softmax()};
}

std::string descriptor_to_string(const Descriptor& d) {
  std::ostringstream os;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (i) os << ",";
    const LayerSpec& l = d[i];
    switch (l.kind) {
      case LayerKind::Conv: os << "conv(" << l.out << "," << l.kernel << "," << l.stride << ")"; break;
      case LayerKind::Relu: os << "relu"; break;
      case LayerKind::MaxPool: os << "maxpool(" << l.kernel << ")"; break;
      case LayerKind::Dense: os << "dense(" << l.out << ")"; break;
      case LayerKind::Softmax: os << "softmax"; break;
    }
  }
  return os.str();
}

Descriptor parse_descriptor(const std::string& text) {
  Descriptor d;
  std::size_t pos = 0;
  auto fail = [&](const std::string& why) -> DescriptorError {
    return DescriptorError("bad descriptor '" + text + "': " + why);
  };
  while (pos < text.size()) {
    std::size_t end = pos;
    while (end < text.size() && std::isalpha(static_cast<unsigned char>(text[end]))) ++end;
    const std::string name = text.substr(pos, end - pos);
    std::vector<int> args;
    if (end < text.size() && text[end] == '(') {
      const std::size_t close = text.find(')', end);
      if (close == std::string::npos) throw fail("unclosed parenthesis");
      std::stringstream ss(text.substr(end + 1, close - end - 1));
      std::string item;
      while (std::getline(ss, item, ',')) {
        try {
          args.push_back(std::stoi(item));
        } catch (const std::exception&) {
          throw fail("non-integer argument '" + item + "'");
        }
      }
      end = close + 1;
    }
    if (name == "conv" && (args.size() == 2 || args.size() == 3)) {
      d.push_back(LayerSpec::conv(args[0], args[1], args.size() == 3 ? args[2] : 1));
    } else if (name == "relu" && args.empty()) {
      d.push_back(LayerSpec::relu());
    } else if (name == "maxpool" && args.size() == 1) {
      d.push_back(LayerSpec::maxpool(args[0]));
    } else if (name == "dense" && args.size() == 1) {
      d.push_back(LayerSpec::dense(args[0]));
    } else if (name == "softmax" && args.empty()) {
      d.push_back(LayerSpec::softmax());
    } else {
      throw fail("unknown layer '" + name + "'");
    }
    if (end < text.size()) {
      if (text[end] != ',') throw fail("expected ','");
      ++end;
    }
    pos = end;
  }
  return d;
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ArgumentError("learning_rate must be positive");
  if (!(lr_decay_factor > 0.0 && lr_decay_factor <= 1.0)) {
    throw ArgumentError("lr_decay_factor must lie in (0,1]");
  }
  if (lr_decay_every < 1) throw ArgumentError("lr_decay_every must be positive");
  if (batch_size < 1) throw ArgumentError("batch_size must be positive");
  if (epochs < 0) throw ArgumentError("epochs must be non-negative");
}

Classifier::Classifier(Descriptor d, Shape input, int num_classes)
    : descriptor_(std::move(d)), input_(input), num_classes_(num_classes) {
  resolve();
}

void Classifier::resolve() {
  if (num_classes_ < 2) throw DescriptorError("classifier needs at least 2 classes");
  if (descriptor_.empty() || descriptor_.back().kind != LayerKind::Softmax) {
    throw DescriptorError("descriptor must end with softmax");
  }
  shapes_.clear();
  Shape cur = input_;
  for (std::size_t i = 0; i < descriptor_.size(); ++i) {
    const LayerSpec& l = descriptor_[i];
    Shape next = cur;
    switch (l.kind) {
      case LayerKind::Conv:
        if (l.out < 1 || l.kernel < 1 || l.stride < 1) throw DescriptorError("bad conv parameters");
        if (cur.height < l.kernel || cur.width < l.kernel) {
          throw DescriptorError("conv kernel larger than its input " + to_string(cur));
        }
        next = Shape{(cur.height - l.kernel) / l.stride + 1, (cur.width - l.kernel) / l.stride + 1, l.out};
        break;
      case LayerKind::Relu:
        break;
      case LayerKind::MaxPool:
        if (l.kernel < 1 || cur.height < l.kernel || cur.width < l.kernel) {
          throw DescriptorError("bad maxpool window for input " + to_string(cur));
        }
        next = Shape{cur.height / l.kernel, cur.width / l.kernel, cur.channels};
        break;
      case LayerKind::Dense:
        if (l.out < 1) throw DescriptorError("dense needs a positive width");
        next = Shape{1, 1, l.out};
        break;
      case LayerKind::Softmax:
        if (i + 1 != descriptor_.size()) throw DescriptorError("softmax must be the last layer");
        if (flat(cur) != num_classes_) {
          throw DescriptorError("softmax input has " + std::to_string(flat(cur)) + " units but K=" +
                                std::to_string(num_classes_));
        }
        break;
    }
    shapes_.push_back({cur, next});
    cur = next;
  }
}

Classifier Classifier::init(const Descriptor& descriptor, Shape input, int num_classes,
                            std::uint64_t seed) {
  Classifier m(descriptor, input, num_classes);
  Rng rng(seed);
  m.params_.resize(descriptor.size());
  for (std::size_t i = 0; i < descriptor.size(); ++i) {
    const LayerSpec& l = descriptor[i];
    const Shape& in = m.shapes_[i].in;
    int fan_in = 0;
    std::size_t count = 0;
    if (l.kind == LayerKind::Conv) {
      fan_in = in.channels * l.kernel * l.kernel;
      count = static_cast<std::size_t>(l.out) * fan_in;
    } else if (l.kind == LayerKind::Dense) {
      fan_in = flat(in);
      count = static_cast<std::size_t>(fan_in) * l.out;
    } else {
      continue;
    }
    const double bound = std::sqrt(6.0 / fan_in);
    auto& p = m.params_[i];
    p.weights.resize(count);
    for (double& w : p.weights) w = rng.uniform(-bound, bound);
    p.bias.assign(static_cast<std::size_t>(l.out), 0.0);
  }
  return m;
}

Classifier Classifier::from_parts(const Descriptor& descriptor, Shape input, int num_classes,
                                  std::vector<LayerParams> params) {
  Classifier m(descriptor, input, num_classes);
  const auto zero = Classifier::init(descriptor, input, num_classes, 0).params_;
  if (params.size() != zero.size()) throw DescriptorError("parameter layer count mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].weights.size() != zero[i].weights.size() || params[i].bias.size() != zero[i].bias.size()) {
      throw DescriptorError("parameter shape mismatch at layer " + std::to_string(i));
    }
  }
  m.params_ = std::move(params);
  return m;
}

std::size_t Classifier::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.weights.size() + p.bias.size();
  return n;
}

std::vector<LayerParams> Classifier::zero_gradients() const {
  std::vector<LayerParams> g(params_.size());
  for (std::size_t i = 0; i < params_.size(); ++i) {
    g[i].weights.assign(params_[i].weights.size(), 0.0);
    g[i].bias.assign(params_[i].bias.size(), 0.0);
  }
  return g;
}

void Classifier::run_forward(const Image& image, Trace& trace) const {
  if (image.shape() != input_) {
    throw DimensionError("model expects " + to_string(input_) + ", got " + to_string(image.shape()));
  }
  const std::size_t n = descriptor_.size();
  trace.acts.resize(n + 1);
  trace.pool.resize(n);
  trace.acts[0] = image.pixels();
  for (std::size_t li = 0; li < n; ++li) {
    const LayerSpec& l = descriptor_[li];
    const Shape& is = shapes_[li].in;
    const Shape& os = shapes_[li].out;
    const std::vector<double>& in = trace.acts[li];
    std::vector<double>& out = trace.acts[li + 1];
    out.assign(os.size(), 0.0);
    switch (l.kind) {
      case LayerKind::Conv: {
        const auto& w = params_[li].weights;
        const auto& b = params_[li].bias;
        const int k = l.kernel;
        for (int o = 0; o < os.channels; ++o) {
          double* oplane = out.data() + static_cast<std::size_t>(o) * os.plane();
          std::fill(oplane, oplane + os.plane(), b[o]);
          for (int ci = 0; ci < is.channels; ++ci) {
            const double* iplane = in.data() + static_cast<std::size_t>(ci) * is.plane();
            const double* wk = w.data() + (static_cast<std::size_t>(o) * is.channels + ci) * k * k;
            for (int ky = 0; ky < k; ++ky) {
              for (int kx = 0; kx < k; ++kx) {
                const double wv = wk[ky * k + kx];
                for (int y = 0; y < os.height; ++y) {
                  const double* irow = iplane + static_cast<std::size_t>(y * l.stride + ky) * is.width + kx;
                  double* orow = oplane + static_cast<std::size_t>(y) * os.width;
                  for (int x = 0; x < os.width; ++x) orow[x] += wv * irow[x * l.stride];
                }
              }
            }
          }
        }
        break;
      }
      case LayerKind::Relu:
        for (std::size_t i = 0; i < in.size(); ++i) out[i] = in[i] > 0.0 ? in[i] : 0.0;
        break;
      case LayerKind::MaxPool: {
        auto& idx = trace.pool[li];
        idx.assign(os.size(), 0);
        const int k = l.kernel;
        for (int c = 0; c < os.channels; ++c) {
          for (int y = 0; y < os.height; ++y) {
            for (int x = 0; x < os.width; ++x) {
              std::size_t best = (static_cast<std::size_t>(c) * is.height + y * k) * is.width + x * k;
              for (int dy = 0; dy < k; ++dy) {
                for (int dx = 0; dx < k; ++dx) {
                  const std::size_t p = (static_cast<std::size_t>(c) * is.height + y * k + dy) * is.width + x * k + dx;
                  if (in[p] > in[best]) best = p;
                }
              }
              const std::size_t o = (static_cast<std::size_t>(c) * os.height + y) * os.width + x;
              out[o] = in[best];
              idx[o] = static_cast<std::uint32_t>(best);
            }
          }
        }
        break;
      }
      case LayerKind::Dense: {
        const auto& w = params_[li].weights;
        const auto& b = params_[li].bias;
        const int nout = l.out;
        std::copy(b.begin(), b.end(), out.begin());
        for (std::size_t i = 0; i < in.size(); ++i) {
          const double v = in[i];
          if (v == 0.0) continue;
          const double* wrow = w.data() + i * nout;
          for (int o = 0; o < nout; ++o) out[o] += v * wrow[o];
        }
        break;
      }
      case LayerKind::Softmax:
        out = in;
        softmax_inplace(out);
        break;
    }
  }
}

Probabilities Classifier::forward(const Image& image) const {
  Trace t;
  run_forward(image, t);
  return std::move(t.acts.back());
}

int Classifier::predict(const Image& image) const { return argmax(forward(image)); }

ProbabilityModel Classifier::as_model() const {
  return [this](const Image& im) { return forward(im); };
}

double Classifier::accumulate_gradient(const Image& image, int label,
                                       std::vector<LayerParams>& grads) const {
  if (label < 0 || label >= num_classes_) throw ArgumentError("label out of range");
  Trace t;
  run_forward(image, t);
  const std::size_t n = descriptor_.size();
  const std::vector<double>& probs = t.acts[n];
  const double loss = cross_entropy(probs, label);

  // Gradient w.r.t. the softmax input.
  std::vector<double> g = probs;
  g[static_cast<std::size_t>(label)] -= 1.0;

  for (std::size_t li = n - 1; li-- > 0;) {
    const LayerSpec& l = descriptor_[li];
    const Shape& is = shapes_[li].in;
    const Shape& os = shapes_[li].out;
    const std::vector<double>& in = t.acts[li];
    const bool need_input_grad = li > 0;
    std::vector<double> gin;
    if (need_input_grad) gin.assign(is.size(), 0.0);
    switch (l.kind) {
      case LayerKind::Conv: {
        const auto& w = params_[li].weights;
        auto& gw = grads[li].weights;
        auto& gb = grads[li].bias;
        const int k = l.kernel;
        for (int o = 0; o < os.channels; ++o) {
          const double* gplane = g.data() + static_cast<std::size_t>(o) * os.plane();
          double bsum = 0.0;
          for (std::size_t p = 0; p < os.plane(); ++p) bsum += gplane[p];
          gb[o] += bsum;
          for (int ci = 0; ci < is.channels; ++ci) {
            const double* iplane = in.data() + static_cast<std::size_t>(ci) * is.plane();
            const std::size_t wbase = (static_cast<std::size_t>(o) * is.channels + ci) * k * k;
            for (int ky = 0; ky < k; ++ky) {
              for (int kx = 0; kx < k; ++kx) {
                double acc = 0.0;
                const double wv = w[wbase + ky * k + kx];
                for (int y = 0; y < os.height; ++y) {
                  const std::size_t irow = static_cast<std::size_t>(y * l.stride + ky) * is.width + kx;
                  const double* grow = gplane + static_cast<std::size_t>(y) * os.width;
                  for (int x = 0; x < os.width; ++x) {
                    acc += grow[x] * iplane[irow + x * l.stride];
                    if (need_input_grad) {
                      gin[static_cast<std::size_t>(ci) * is.plane() + irow + x * l.stride] += grow[x] * wv;
                    }
                  }
                }
                gw[wbase + ky * k + kx] += acc;
              }
            }
          }
        }
        break;
      }
      case LayerKind::Relu:
        for (std::size_t i = 0; i < in.size(); ++i) gin[i] = in[i] > 0.0 ? g[i] : 0.0;
        break;
      case LayerKind::MaxPool: {
        const auto& idx = t.pool[li];
        for (std::size_t o = 0; o < g.size(); ++o) gin[idx[o]] += g[o];
        break;
      }
      case LayerKind::Dense: {
        const auto& w = params_[li].weights;
        auto& gw = grads[li].weights;
        auto& gb = grads[li].bias;
        const int nout = l.out;
        for (int o = 0; o < nout; ++o) gb[o] += g[o];
        for (std::size_t i = 0; i < in.size(); ++i) {
          const double v = in[i];
          double* gwrow = gw.data() + i * nout;
          const double* wrow = w.data() + i * nout;
          double s = 0.0;
          for (int o = 0; o < nout; ++o) {
            gwrow[o] += v * g[o];
            s += wrow[o] * g[o];
          }
          if (need_input_grad) gin[i] = s;
        }
        break;
      }
      case LayerKind::Softmax:
        throw DescriptorError("softmax before the last layer");
    }
    g = std::move(gin);
  }
  return loss;
}

int argmax(std::span<const double> values) {
  if (values.empty()) throw ArgumentError("argmax of empty vector");
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return static_cast<int>(best);
}

double cross_entropy(std::span<const double> probabilities, int label) {
  if (label < 0 || static_cast<std::size_t>(label) >= probabilities.size()) {
    throw ArgumentError("label " + std::to_string(label) + " out of range");
  }
  return -std::log(std::max(probabilities[static_cast<std::size_t>(label)], kProbabilityFloor));
}

Classifier train(const Classifier& model, const LabeledDataset& dataset, const TrainConfig& config,
                 TrainLog* log) {
  config.validate();
  if (dataset.empty()) throw ArgumentError("cannot train on an empty dataset");
  if (dataset.shape() != model.input_shape()) throw DimensionError("dataset shape does not match model");

  Classifier out = model;
  Rng rng(config.seed);
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto grads = out.zero_gradients();

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const double lr =
        config.learning_rate * std::pow(config.lr_decay_factor, epoch / config.lr_decay_every);
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[rng.below(i)]);
    }
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      for (auto& g : grads) {
        std::fill(g.weights.begin(), g.weights.end(), 0.0);
        std::fill(g.bias.begin(), g.bias.end(), 0.0);
      }
      for (std::size_t k = start; k < stop; ++k) {
        const std::size_t idx = order[k];
        loss_sum += out.accumulate_gradient(dataset.images[idx], dataset.labels[idx], grads);
      }
      const double step = lr / static_cast<double>(stop - start);
      auto& params = out.params();
      for (std::size_t li = 0; li < params.size(); ++li) {
        for (std::size_t j = 0; j < params[li].weights.size(); ++j) {
          params[li].weights[j] -= step * grads[li].weights[j];
        }
        for (std::size_t j = 0; j < params[li].bias.size(); ++j) params[li].bias[j] -= step * grads[li].bias[j];
      }
    }
    if (log) log->epoch_mean_loss.push_back(loss_sum / static_cast<double>(dataset.size()));
  }
  return out;
}

double gradient_check(const Classifier& model, const Image& image, int label,
                      const GradientCheckOptions& options) {
  auto analytic = model.zero_gradients();
  model.accumulate_gradient(image, label, analytic);
  if (options.tamper) options.tamper(analytic);

  Classifier probe = model;
  Rng rng(options.seed);
  double worst = 0.0;
  auto loss_at = [&]() { return cross_entropy(probe.forward(image), label); };
  auto check = [&](std::vector<double>& values, const std::vector<double>& grad) {
    if (values.empty()) return;
    const int samples = std::min<int>(options.samples_per_layer, static_cast<int>(values.size()));
    for (int s = 0; s < samples; ++s) {
      const std::size_t j = samples == static_cast<int>(values.size()) ? static_cast<std::size_t>(s)
                                                                        : rng.below(values.size());
      const double saved = values[j];
      values[j] = saved + options.step;
      const double up = loss_at();
      values[j] = saved - options.step;
      const double down = loss_at();
      values[j] = saved;
      const double numeric = (up - down) / (2.0 * options.step);
      const double denom = std::max({std::abs(grad[j]), std::abs(numeric), 1e-6});
      worst = std::max(worst, std::abs(grad[j] - numeric) / denom);
    }
  };
  for (std::size_t li = 0; li < probe.params().size(); ++li) {
    check(probe.params()[li].weights, analytic[li].weights);
    check(probe.params()[li].bias, analytic[li].bias);
  }
  return worst;
}

double accuracy(const ProbabilityModel& model, const LabeledDataset& dataset) {
  if (dataset.empty()) throw ArgumentError("accuracy of an empty dataset");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (argmax(model(dataset.images[i])) == dataset.labels[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(dataset.size());
}

double accuracy(const Classifier& model, const LabeledDataset& dataset) {
  return accuracy(model.as_model(), dataset);
}

void save_classifier(const Classifier& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot create " + path.string());
  out.write(kCheckpointMagic, sizeof kCheckpointMagic);
  put<std::uint32_t>(out, kCheckpointVersion);
  const Shape& s = model.input_shape();
  put<std::uint32_t>(out, static_cast<std::uint32_t>(s.height));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(s.width));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(s.channels));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(model.num_classes()));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(model.descriptor().size()));
  for (const LayerSpec& l : model.descriptor()) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(l.kind));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(l.out));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(l.kernel));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(l.stride));
  }
  for (const LayerParams& p : model.params()) {
    put<std::uint64_t>(out, p.weights.size());
    for (double w : p.weights) put<double>(out, w);
    put<std::uint64_t>(out, p.bias.size());
    for (double b : p.bias) put<double>(out, b);
  }
  if (!out) throw IoError("failed writing " + path.string());
}

Classifier load_classifier(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  char magic[8];
  if (!in.read(magic, sizeof magic)) throw IoError("truncated checkpoint " + path.string());
  if (std::memcmp(magic, kCheckpointMagic, sizeof magic) != 0) {
    throw FormatError("not a classifier checkpoint: " + path.string());
  }
  if (get<std::uint32_t>(in) != kCheckpointVersion) throw FormatError("unsupported checkpoint version");
  Shape s;
  s.height = static_cast<int>(get<std::uint32_t>(in));
  s.width = static_cast<int>(get<std::uint32_t>(in));
  s.channels = static_cast<int>(get<std::uint32_t>(in));
  const int k = static_cast<int>(get<std::uint32_t>(in));
  const std::uint32_t layers = get<std::uint32_t>(in);
  if (layers > 4096) throw FormatError("implausible layer count in checkpoint");
  Descriptor d;
  for (std::uint32_t i = 0; i < layers; ++i) {
    LayerSpec l;
    const auto kind = get<std::uint32_t>(in);
    if (kind < 1 || kind > 5) throw FormatError("unknown layer kind in checkpoint");
    l.kind = static_cast<LayerKind>(kind);
    l.out = static_cast<int>(get<std::uint32_t>(in));
    l.kernel = static_cast<int>(get<std::uint32_t>(in));
    l.stride = static_cast<int>(get<std::uint32_t>(in));
    d.push_back(l);
  }
  std::vector<LayerParams> params(layers);
  for (auto& p : params) {
    const auto nw = get<std::uint64_t>(in);
    if (nw > (1ULL << 32)) throw FormatError("implausible parameter count in checkpoint");
    p.weights.resize(nw);
    for (double& w : p.weights) w = get<double>(in);
    const auto nb = get<std::uint64_t>(in);
    if (nb > (1ULL << 32)) throw FormatError("implausible parameter count in checkpoint");
    p.bias.resize(nb);
    for (double& b : p.bias) b = get<double>(in);
  }
  return Classifier::from_parts(d, s, k, std::move(params));
}

}  // namespace lowfreq
