#include "lowfreq/sa_optimizer.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <thread>

#include "lowfreq/errors.hpp"
#include "lowfreq/random.hpp"

namespace lowfreq {

namespace {

std::vector<ObjectiveValue> evaluate_all(const std::vector<FrequencyTrigger>& candidates,
                                         const CandidateEvaluator& evaluate, int workers) {
  std::vector<ObjectiveValue> values(candidates.size());
  if (workers <= 1 || candidates.size() <= 1) {
    for (std::size_t i = 0; i < candidates.size(); ++i) values[i] = evaluate(candidates[i]);
    return values;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(candidates.size());
  std::vector<std::thread> pool;
  const auto n = std::min<std::size_t>(static_cast<std::size_t>(workers), candidates.size());
  for (std::size_t w = 0; w < n; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < candidates.size(); i = next++) {
        try {
          values[i] = evaluate(candidates[i]);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return values;
}

}  // namespace

std::string to_string(AcceptanceMode mode) {
  return mode == AcceptanceMode::Greedy ? "greedy" : "metropolis";
}

AcceptanceMode parse_acceptance_mode(const std::string& text) {
  if (text == "greedy") return AcceptanceMode::Greedy;
  if (text == "metropolis") return AcceptanceMode::Metropolis;
  throw ArgumentError("unknown acceptance mode '" + text + "'");
}

void SAConfig::validate() const {
  if (!(initial_temperature > 0.0) || !(final_temperature > 0.0)) {
    throw ArgumentError("temperatures must be positive");
  }
  if (!(alpha > 0.0 && alpha < 1.0)) throw ArgumentError("alpha must lie in (0,1)");
  if (iters_per_temp < 0) throw ArgumentError("iters_per_temp must be non-negative");
  if (!(epsilon >= 0.0)) throw ArgumentError("epsilon must be non-negative");
  if (retrain_epochs < 0 || semi_train_epochs < 0) throw ArgumentError("epoch counts must be non-negative");
  if (n_bands < 1) throw ArgumentError("n_bands must be at least 1");
  if (region.row_limit < 1 || region.col_limit < 1) throw ArgumentError("empty search region");
  if (workers < 1) throw ArgumentError("workers must be at least 1");
  if (!(lambda_p >= 0.0)) throw ArgumentError("lambda_p must be non-negative");
}

int temperature_block_count(double initial_temperature, double final_temperature, double alpha) {
  if (initial_temperature <= final_temperature) return 0;
  const double ratio = std::log(final_temperature / initial_temperature) / std::log(1.0 - alpha);
  return static_cast<int>(std::ceil(ratio));
}

bool SAResult::operator==(const SAResult& other) const {
  if (!(best_trigger == other.best_trigger && best_objective == other.best_objective &&
        evaluations == other.evaluations && temperature_blocks == other.temperature_blocks &&
        trace.size() == other.trace.size())) {
    return false;
  }
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const auto& a = trace[i];
    const auto& b = other.trace[i];
    if (a.block != b.block || a.temperature != b.temperature || a.iteration != b.iteration ||
        !(a.value == b.value) || a.accepted != b.accepted || a.best_total != b.best_total) {
      return false;
    }
  }
  return true;
}

SAResult optimize_trigger(const SAConfig& config, int channels, const CandidateEvaluator& evaluate) {
  config.validate();
  Rng proposals(config.seed);
  Rng acceptance(derive_seed(config.seed, "metropolis"));

  FrequencyTrigger incumbent =
      random_trigger(config.region, channels, config.n_bands, config.epsilon, proposals.next());
  ObjectiveValue incumbent_value = evaluate(incumbent);

  SAResult result;
  result.best_trigger = incumbent;
  result.best_objective = incumbent_value;
  result.evaluations = 1;
  result.trace.push_back({-1, config.initial_temperature, 0, incumbent_value, true, incumbent_value.total});

  const int blocks =
      temperature_block_count(config.initial_temperature, config.final_temperature, config.alpha);
  result.temperature_blocks = blocks;
  const int workers = config.acceptance_mode == AcceptanceMode::Greedy ? config.workers : 1;

  double temperature = config.initial_temperature;
  for (int block = 0; block < blocks; ++block) {
    // Proposals do not depend on the incumbent, so a block can be drawn up front.
    std::vector<FrequencyTrigger> candidates;
    for (int i = 0; i < config.iters_per_temp; ++i) {
      candidates.push_back(resample_trigger(incumbent, config.region, channels, proposals.next()));
    }
    const auto values = evaluate_all(candidates, evaluate, workers);
    result.evaluations += static_cast<int>(candidates.size());

    for (std::size_t i = 0; i < candidates.size(); ++i) {
      const ObjectiveValue& v = values[i];
      bool accepted = false;
      if (v.feasible) {
        accepted = v.total < incumbent_value.total;
        if (!accepted && config.acceptance_mode == AcceptanceMode::Metropolis) {
          accepted = acceptance.uniform() < std::exp(-(v.total - incumbent_value.total) / temperature);
        }
      }
      if (accepted) {
        incumbent = candidates[i];
        incumbent_value = v;
      }
      if (v.feasible && v.total < result.best_objective.total) {
        result.best_trigger = candidates[i];
        result.best_objective = v;
      }
      result.trace.push_back(
          {block, temperature, static_cast<int>(i) + 1, v, accepted, result.best_objective.total});
    }
    temperature -= config.alpha * temperature;
  }
  return result;
}

Classifier semi_train_surrogate(const Descriptor& descriptor, const LabeledDataset& clean, int epochs,
                                const TrainConfig& warmup) {
  if (clean.empty()) throw ArgumentError("surrogate needs a non-empty dataset");
  Classifier model = Classifier::init(descriptor, clean.shape(), clean.num_classes, warmup.seed);
  TrainConfig cfg = warmup;
  cfg.epochs = epochs;
  return train(model, clean, cfg);
}

ObjectiveValue evaluate_candidate(const Classifier& snapshot, const LabeledDataset& dataset,
                                  std::span<const std::size_t> indices, const FrequencyTrigger& trigger,
                                  int target_label, const TrainConfig& retrain, double lambda_p) {
  if (indices.empty()) throw ArgumentError("candidate evaluation needs a poisoned subset");
  const LabeledDataset mixed = poison_dataset(dataset, trigger, indices, target_label);
  const Classifier tuned = train(snapshot, mixed, retrain);
  std::vector<Image> clean;
  clean.reserve(indices.size());
  for (std::size_t i : indices) clean.push_back(dataset.images[i]);
  return total_objective(tuned.as_model(), clean, trigger, target_label, lambda_p);
}

SAResult search_trigger(const SAConfig& config, const SearchSetup& setup, const LabeledDataset& dataset,
                        Classifier* surrogate_out) {
  config.validate();
  if (dataset.empty()) throw ArgumentError("trigger search needs a non-empty dataset");
  const Shape& shape = dataset.shape();
  if (config.region.row_limit > shape.height || config.region.col_limit > shape.width) {
    throw DimensionError("search region exceeds the image spectrum");
  }
  TrainConfig warmup = setup.train;
  warmup.seed = derive_seed(config.seed, "surrogate");
  const Classifier snapshot = semi_train_surrogate(setup.descriptor, dataset, config.semi_train_epochs, warmup);
  if (surrogate_out) *surrogate_out = snapshot;

  const auto indices = select_poison_indices(dataset, setup.poison_ratio, derive_seed(config.seed, "poison"));
  TrainConfig retrain = setup.train;
  retrain.epochs = config.retrain_epochs;
  retrain.seed = derive_seed(config.seed, "retrain");

  return optimize_trigger(config, shape.channels, [&](const FrequencyTrigger& t) {
    return evaluate_candidate(snapshot, dataset, indices, t, setup.target_label, retrain, config.lambda_p);
  });
}

void write_trace_csv(const SAResult& result, const std::filesystem::path& path, const std::string& header) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot create " + path.string());
  if (!header.empty()) out << header << "\n";
  out << "temperature,iteration,O,P,total,accepted,best_total\n";
  char line[256];
  for (const TraceEntry& e : result.trace) {
    std::snprintf(line, sizeof line, "%.17g,%d,%.17g,%.17g,%.17g,%d,%.17g\n", e.temperature, e.iteration,
                  e.value.backdoor_loss, e.value.penalty, e.value.total, e.accepted ? 1 : 0, e.best_total);
    out << line;
  }
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace lowfreq
