#pragma once

#include <span>
#include <string>
#include <vector>

#include "cea/attack.hpp"
#include "cea/labels.hpp"
#include "cea/norms.hpp"

namespace cea {

struct PerturbationReport {
  PerturbationNorms norms;
  std::vector<double> confidence_per_class;
  double wall_time_seconds = 0.0;
};

struct AttackOutcome {
  std::size_t index = 0;
  ClassLabel true_label;
  ClassLabel predicted;
  bool success = false;          ///< argmax flipped (untargeted) / hit the target (targeted)
  double confidence = 0.0;       ///< tracked-class probability of the final image
  int iterations_run = 0;
  int first_success_iteration = 0;  ///< 0 when the attack never succeeded
  PerturbationNorms final_norms;
  PerturbationNorms first_success_norms;
};

struct MisclassificationResult {
  double rate = 0.0;
  std::vector<AttackOutcome> outcomes;
};

/// Attacks every image (untargeted runs use each image's own label; targeted
/// runs use cfg.mode.label) and reports the success fraction. Images must be
/// classified correctly by the model beforehand; std::invalid_argument
/// otherwise. Results are identical for any thread count.
MisclassificationResult misclassification_rate(const Classifier& model,
                                               std::span<const LabeledImage> dataset,
                                               const AttackConfig& cfg, int threads = 1);

bool attack_succeeded(const std::vector<double>& probabilities, const LossMode& mode);

struct SweepRow {
  int iteration = 0;
  double confidence = 0.0;
  PerturbationNorms norms;
};

/// Row 0 is the unperturbed image; row k is iteration k of the attack.
struct SweepRecord {
  std::vector<SweepRow> rows;
};

SweepRecord confidence_sweep(const Classifier& model, const ImageTensor& x,
                             const AttackConfig& cfg);

struct TimingResult {
  AttackMethod method = AttackMethod::Fgsm;
  double mean_seconds = 0.0;
  double stddev_seconds = 0.0;
  int samples = 0;
};

/// Wall time of full untargeted attacks (the first image only warms caches
/// and is excluded). Runs sequentially. Needs at least two images.
std::vector<TimingResult> timing_benchmark(const Classifier& model,
                                           std::span<const LabeledImage> dataset,
                                           std::span<const AttackConfig> configs, int iterations);

double median(std::vector<double> values);

}  // namespace cea
