#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "lowfreq/classifier.hpp"
#include "lowfreq/defenses.hpp"
#include "lowfreq/sa_optimizer.hpp"
#include "lowfreq/stealth_metrics.hpp"
#include "lowfreq/trigger.hpp"

namespace lowfreq {

/// Invalid experiment configuration (exit code 4).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A pipeline stage failed; the message names the stage (exit code 5).
class StageError : public std::runtime_error {
 public:
  StageError(const std::string& stage, const std::string& what)
      : std::runtime_error("stage '" + stage + "' failed: " + what), stage_(stage) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

struct ExperimentConfig {
  std::filesystem::path train_images;
  std::filesystem::path train_labels;
  std::filesystem::path test_images;
  std::filesystem::path test_labels;
  std::size_t train_cap = 1000;
  std::size_t test_cap = 1000;

  int n_bands = 3;
  double epsilon = 0.1;
  double region_fraction = 0.183;

  double poison_ratio = 0.05;
  int target_label = 7;

  std::string descriptor = "default";
  TrainConfig surrogate;  // epochs unused; warm-up length comes from sa.semi_train_epochs
  TrainConfig victim;
  SAConfig sa;            // region, epsilon, n_bands and seed are filled from the fields above

  bool full_spectrum_control = true;
  bool high_frequency_control = true;
  bool patch_baseline = true;
  std::vector<DefenseSpec> defenses;

  std::size_t stealth_samples = 500;
  std::size_t strip_samples = 20;
  int strip_overlays = 100;
  double strip_blend = 0.5;

  std::filesystem::path output_dir = "lowfreq_out";
  std::uint64_t seed = 1;

  /// Effective settings as JSON (the input of config_hash).
  nlohmann::json to_json() const;
  static ExperimentConfig from_json(const nlohmann::json& j);
  /// Throws ConfigError when a setting is out of range or an input file is missing.
  void validate() const;
};

/// Built-in defaults as JSON; file values and flag overrides are merged on top.
nlohmann::json default_config_json();

/// Loads `path` (may be empty for defaults only), merges it over the defaults,
/// then applies "dotted.key=value" overrides (value parsed as JSON, else string).
ExperimentConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});

/// 64-bit FNV-1a of the effective configuration without output_dir, as hex.
std::string config_hash(const ExperimentConfig& config);

/// "# config_hash=<hex> seed=<n>"
std::string report_header(const ExperimentConfig& config);

/// Stage seed derived from the master seed.
std::uint64_t stage_seed(const ExperimentConfig& config, const std::string& stage);

struct Datasets {
  LabeledDataset train;
  LabeledDataset test;
};

Datasets load_datasets(const ExperimentConfig& config);
Descriptor resolve_descriptor(const ExperimentConfig& config, int num_classes);

struct Variant {
  std::string name;
  FrequencyTrigger trigger;            // frequency variants
  std::optional<PatchTrigger> patch;   // spatial patch baseline
  ImageTransform transform() const;
};

struct VariantMetrics {
  std::string name;
  double acc = 0.0;
  double asr = 0.0;
};

struct RobustnessRow {
  std::string variant;
  std::string defense;
  std::string param;
  double acc = 0.0;
  double asr = 0.0;
};

struct ExperimentSummary {
  SAResult low_search;
  std::optional<SAResult> full_search;
  std::vector<Variant> variants;
  std::vector<VariantMetrics> metrics;
  std::vector<RobustnessRow> robustness;
  std::vector<StealthReport> stealth;  // low-frequency variant, one per sample
};

// Individual stages, each usable on its own from the CLI.
SAResult stage_search(const ExperimentConfig& config, const LabeledDataset& train, bool full_spectrum,
                      Classifier* surrogate_out = nullptr);
std::vector<std::size_t> stage_poison_indices(const ExperimentConfig& config, const LabeledDataset& train);
LabeledDataset stage_poison(const ExperimentConfig& config, const LabeledDataset& train, const Variant& variant);
Classifier stage_train_victim(const ExperimentConfig& config, const LabeledDataset& training_set);
VariantMetrics stage_evaluate(const ExperimentConfig& config, const Classifier& model,
                              const LabeledDataset& test, const Variant& variant);
std::vector<RobustnessRow> stage_defend(const ExperimentConfig& config, const ProbabilityModel& model,
                                        const LabeledDataset& test, const Variant& variant,
                                        const std::vector<DefenseSpec>& defenses);
std::vector<StealthReport> stage_stealth(const ExperimentConfig& config, const LabeledDataset& train,
                                         const Variant& variant);

/// Runs every stage in order and writes all artifacts into config.output_dir.
ExperimentSummary run_experiment(const ExperimentConfig& config);

struct SweepRow {
  double ratio = 0.0;
  double acc = 0.0;
  double asr = 0.0;
};

/// Retrains the victim for each poison ratio; every other seed stays fixed.
std::vector<SweepRow> run_poison_sweep(const ExperimentConfig& config, const FrequencyTrigger& trigger,
                                       const std::vector<double>& ratios);

// Report writers. Every CSV starts with report_header(config).
void write_metrics_csv(const ExperimentConfig& config, const std::vector<VariantMetrics>& rows,
                       const std::filesystem::path& path);
void write_robustness_csv(const ExperimentConfig& config, const std::vector<RobustnessRow>& rows,
                          const std::filesystem::path& path);
void write_stealth_csv(const ExperimentConfig& config, const std::vector<StealthReport>& rows,
                       const std::filesystem::path& path);
void write_manifest_csv(const ExperimentConfig& config, const LabeledDataset& original,
                        const LabeledDataset& poisoned, const std::filesystem::path& path);
void write_sweep_csv(const ExperimentConfig& config, const std::vector<SweepRow>& rows,
                     const std::filesystem::path& path);

/// Reads the poisoned indices back from a manifest CSV.
std::vector<std::size_t> read_manifest_indices(const std::filesystem::path& path);

/// "%.17g", so CSV values round-trip exactly.
std::string fmt(double v);

}  // namespace lowfreq
