#pragma once

#include <span>

#include "lowfreq/classifier.hpp"
#include "lowfreq/trigger.hpp"

namespace lowfreq {

struct ObjectiveValue {
  double backdoor_loss = 0.0;
  double penalty = 0.0;
  double total = 0.0;
  bool feasible = true;

  bool operator==(const ObjectiveValue&) const = default;
};

/// Mean cross-entropy against `target_label` over images that already carry the trigger.
double backdoor_loss(const ProbabilityModel& model, std::span<const Image> triggered, int target_label);

/// Mean cross-entropy against `target_label` over the items flagged as poisoned.
double backdoor_loss(const ProbabilityModel& model, const LabeledDataset& poisoned, int target_label);

/// Same, applying `trigger` to clean images on the fly.
double backdoor_loss(const ProbabilityModel& model, std::span<const Image> clean,
                     const FrequencyTrigger& trigger, int target_label);

/// ||dct2(apply_frequency_trigger(clean, trigger) - clean)||_2. Equals ||delta||_2
/// unless clipping removed part of the perturbation.
double stealth_penalty(const Image& clean, const FrequencyTrigger& trigger);
double stealth_penalty(std::span<const Image> clean, const FrequencyTrigger& trigger);

/// O + lambda_p * P over `clean` (the raw images of the poisoned subset).
ObjectiveValue total_objective(const ProbabilityModel& model, std::span<const Image> clean,
                               const FrequencyTrigger& trigger, int target_label,
                               double lambda_p = 1.0);

}  // namespace lowfreq
