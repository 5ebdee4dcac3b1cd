#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "lowfreq/classifier.hpp"
#include "lowfreq/objective.hpp"
#include "lowfreq/trigger.hpp"

namespace lowfreq {

enum class AcceptanceMode { Greedy, Metropolis };

std::string to_string(AcceptanceMode mode);
AcceptanceMode parse_acceptance_mode(const std::string& text);

struct SAConfig {
  double initial_temperature = 1.0;
  double final_temperature = 0.1;
  int iters_per_temp = 4;
  double alpha = 0.3;
  double epsilon = 0.1;
  int retrain_epochs = 1;
  int n_bands = 3;
  FrequencyRegion region{12, 12};
  int semi_train_epochs = 1;
  std::uint64_t seed = 1;
  AcceptanceMode acceptance_mode = AcceptanceMode::Metropolis;
  double lambda_p = 1.0;
  /// Concurrent candidate evaluations per temperature block (greedy mode only).
  int workers = 1;

  void validate() const;
};

/// Number of temperature blocks the schedule T <- (1 - alpha) T visits:
/// ceil(log(Tf / T0) / log(1 - alpha)), or 0 when T0 <= Tf.
int temperature_block_count(double initial_temperature, double final_temperature, double alpha);

struct TraceEntry {
  int block = -1;  // -1 for the initial trigger
  double temperature = 0.0;
  int iteration = 0;
  ObjectiveValue value;
  bool accepted = false;
  double best_total = 0.0;
};

struct SAResult {
  FrequencyTrigger best_trigger;
  ObjectiveValue best_objective;
  std::vector<TraceEntry> trace;
  int evaluations = 0;
  int temperature_blocks = 0;

  bool operator==(const SAResult& other) const;
};

/// Scores one candidate trigger. Must be pure: the same trigger always gives
/// the same value regardless of evaluation order.
using CandidateEvaluator = std::function<ObjectiveValue(const FrequencyTrigger&)>;

/// Simulated-annealing search over triggers in `config.region` for an image
/// with `channels` channels. Each step draws a fresh random candidate; the
/// incumbent follows the acceptance rule while the best trigger seen so far
/// is tracked separately.
SAResult optimize_trigger(const SAConfig& config, int channels, const CandidateEvaluator& evaluate);

/// Everything the real evaluator needs besides the SA schedule.
struct SearchSetup {
  Descriptor descriptor;
  TrainConfig train;  // learning rate, batch size and seed for warm-up and retraining
  double poison_ratio = 0.05;
  int target_label = 7;
};

/// Trains a fresh classifier for `epochs` epochs on clean data.
Classifier semi_train_surrogate(const Descriptor& descriptor, const LabeledDataset& clean, int epochs,
                                const TrainConfig& warmup);

/// Poisons `indices` of a copy of `dataset` with `trigger`, retrains a copy of
/// `snapshot` for `retrain.epochs` epochs on the mix, and scores the result
/// on the raw images at `indices`.
ObjectiveValue evaluate_candidate(const Classifier& snapshot, const LabeledDataset& dataset,
                                  std::span<const std::size_t> indices, const FrequencyTrigger& trigger,
                                  int target_label, const TrainConfig& retrain, double lambda_p = 1.0);

/// Full search: semi-trains the surrogate, fixes the poisoned subset and runs
/// optimize_trigger with evaluate_candidate.
SAResult search_trigger(const SAConfig& config, const SearchSetup& setup, const LabeledDataset& dataset,
                        Classifier* surrogate_out = nullptr);

/// CSV: temperature,iteration,O,P,total,accepted,best_total (values as %.17g).
void write_trace_csv(const SAResult& result, const std::filesystem::path& path, const std::string& header);

}  // namespace lowfreq
