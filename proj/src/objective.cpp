#include "lowfreq/objective.hpp"

#include <vector>

#include "lowfreq/errors.hpp"
#include "lowfreq/spectral.hpp"

namespace lowfreq {

double backdoor_loss(const ProbabilityModel& model, std::span<const Image> triggered, int target_label) {
  if (triggered.empty()) throw ArgumentError("backdoor loss over an empty poisoned subset");
  double sum = 0.0;
  for (const Image& im : triggered) sum += cross_entropy(model(im), target_label);
  return sum / static_cast<double>(triggered.size());
}

double backdoor_loss(const ProbabilityModel& model, const LabeledDataset& poisoned, int target_label) {
  std::vector<Image> flagged;
  for (std::size_t i = 0; i < poisoned.size(); ++i) {
    if (poisoned.poison_flags[i]) flagged.push_back(poisoned.images[i]);
  }
  return backdoor_loss(model, flagged, target_label);
}

double backdoor_loss(const ProbabilityModel& model, std::span<const Image> clean,
                     const FrequencyTrigger& trigger, int target_label) {
  if (clean.empty()) throw ArgumentError("backdoor loss over an empty poisoned subset");
  double sum = 0.0;
  for (const Image& im : clean) {
    sum += cross_entropy(model(apply_frequency_trigger(im, trigger)), target_label);
  }
  return sum / static_cast<double>(clean.size());
}

double stealth_penalty(const Image& clean, const FrequencyTrigger& trigger) {
  return l2_norm(spectrum_disparity(apply_frequency_trigger(clean, trigger), clean));
}

double stealth_penalty(std::span<const Image> clean, const FrequencyTrigger& trigger) {
  if (clean.empty()) throw ArgumentError("stealth penalty over an empty batch");
  double sum = 0.0;
  for (const Image& im : clean) sum += stealth_penalty(im, trigger);
  return sum / static_cast<double>(clean.size());
}

ObjectiveValue total_objective(const ProbabilityModel& model, std::span<const Image> clean,
                               const FrequencyTrigger& trigger, int target_label, double lambda_p) {
  ObjectiveValue v;
  v.backdoor_loss = backdoor_loss(model, clean, trigger, target_label);
  v.penalty = lambda_p * stealth_penalty(clean, trigger);
  v.total = v.backdoor_loss + v.penalty;
  v.feasible = trigger.feasible();
  return v;
}

}  // namespace lowfreq
