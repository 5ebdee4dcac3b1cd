#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lowfreq/tensor_io.hpp"

namespace lowfreq {

enum class LayerKind : std::uint32_t { Conv = 1, Relu = 2, MaxPool = 3, Dense = 4, Softmax = 5 };

struct LayerSpec {
  LayerKind kind = LayerKind::Relu;
  int out = 0;     // conv output channels / dense output features
  int kernel = 0;  // conv kernel side / pooling window side
  int stride = 1;  // conv stride

  static LayerSpec conv(int out_channels, int kernel, int stride = 1) {
    return {LayerKind::Conv, out_channels, kernel, stride};
  }
  static LayerSpec relu() { return {LayerKind::Relu, 0, 0, 1}; }
  static LayerSpec maxpool(int kernel) { return {LayerKind::MaxPool, 0, kernel, 1}; }
  static LayerSpec dense(int out_features) { return {LayerKind::Dense, out_features, 0, 1}; }
  static LayerSpec softmax() { return {LayerKind::Softmax, 0, 0, 1}; }

  bool operator==(const LayerSpec&) const = default;
};

using Descriptor = std::vector<LayerSpec>;

/// conv(8,3,1)-relu-maxpool(2) -> conv(16,3,1)-relu-maxpool(2) -> dense(32)-relu -> dense(K)-softmax.
Descriptor default_descriptor(int num_classes);

/// Text form, e.g. "conv(8,3,1),relu,maxpool(2),dense(10),softmax".
std::string descriptor_to_string(const Descriptor& d);
Descriptor parse_descriptor(const std::string& text);

/// Parameters of one layer. Conv weights are [out][in][k][k]; dense weights
/// are [in][out]. Parameter-free layers hold empty arrays.
struct LayerParams {
  std::vector<double> weights;
  std::vector<double> bias;
  bool operator==(const LayerParams&) const = default;
};

using Probabilities = std::vector<double>;

/// Anything that maps an image to a class-probability vector. Lets the
/// metric and objective code run against stub models in tests.
using ProbabilityModel = std::function<Probabilities(const Image&)>;

struct TrainConfig {
  double learning_rate = 0.01;
  double lr_decay_factor = 0.1;
  int lr_decay_every = 50;
  int batch_size = 64;
  int epochs = 10;
  std::uint64_t seed = 1;

  void validate() const;
};

struct TrainLog {
  std::vector<double> epoch_mean_loss;
};

/// Small convolutional network with a softmax head.
class Classifier {
 public:
  /// Weights U(-sqrt(6/fan_in), +sqrt(6/fan_in)), biases zero.
  static Classifier init(const Descriptor& descriptor, Shape input, int num_classes, std::uint64_t seed);
  /// Reassembles a model from stored parameters; throws DescriptorError on shape mismatch.
  static Classifier from_parts(const Descriptor& descriptor, Shape input, int num_classes,
                               std::vector<LayerParams> params);

  const Descriptor& descriptor() const { return descriptor_; }
  const Shape& input_shape() const { return input_; }
  int num_classes() const { return num_classes_; }
  std::vector<LayerParams>& params() { return params_; }
  const std::vector<LayerParams>& params() const { return params_; }
  std::size_t parameter_count() const;

  Probabilities forward(const Image& image) const;
  int predict(const Image& image) const;
  ProbabilityModel as_model() const;

  /// Cross-entropy loss of one sample; adds d(loss)/d(params) into `grads`
  /// (which must be shaped like params(), see zero_gradients()).
  double accumulate_gradient(const Image& image, int label, std::vector<LayerParams>& grads) const;
  std::vector<LayerParams> zero_gradients() const;

  bool operator==(const Classifier& other) const {
    return descriptor_ == other.descriptor_ && input_ == other.input_ &&
           num_classes_ == other.num_classes_ && params_ == other.params_;
  }

 private:
  struct Resolved {
    Shape in;
    Shape out;
  };
  struct Trace;

  Classifier(Descriptor d, Shape input, int num_classes);
  void resolve();
  void run_forward(const Image& image, Trace& trace) const;

  Descriptor descriptor_;
  Shape input_;
  int num_classes_ = 0;
  std::vector<Resolved> shapes_;
  std::vector<LayerParams> params_;
};

/// Index of the largest entry, lowest index on ties.
int argmax(std::span<const double> values);

/// -log(max(p[label], 1e-12)).
double cross_entropy(std::span<const double> probabilities, int label);

/// Minibatch SGD on mean cross-entropy. Returns a trained copy.
Classifier train(const Classifier& model, const LabeledDataset& dataset, const TrainConfig& config,
                 TrainLog* log = nullptr);

struct GradientCheckOptions {
  int samples_per_layer = 24;
  double step = 1e-5;
  std::uint64_t seed = 7;
  /// Test hook applied to the analytic gradient before comparison.
  std::function<void(std::vector<LayerParams>&)> tamper;
};

/// Max over a random parameter subset of |g - fd| / max(|g|, |fd|, 1e-6),
/// comparing backprop g against central finite differences fd.
double gradient_check(const Classifier& model, const Image& image, int label,
                      const GradientCheckOptions& options = {});

double accuracy(const ProbabilityModel& model, const LabeledDataset& dataset);
double accuracy(const Classifier& model, const LabeledDataset& dataset);

/// Binary checkpoint: "LFQCKPT\0", u32 version, u32 H/W/C/K, u32 layer
/// count, per layer u32 kind/out/kernel/stride, then per layer u64 count +
/// little-endian f64 weights, u64 count + f64 biases.
void save_classifier(const Classifier& model, const std::filesystem::path& path);
Classifier load_classifier(const std::filesystem::path& path);

}  // namespace lowfreq
