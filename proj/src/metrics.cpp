#include "cea/metrics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include "cea/parallel.hpp"

namespace cea {

namespace {

ClassLabel argmax_label(const std::vector<double>& p) {
  return ClassLabel::from_index(static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin()));
}

}  // namespace

PixelMap delta_e_map(const ImageTensor& x, const ImageTensor& x_prime,
                     color::Convention convention) {
  if (!x.same_shape(x_prime)) throw std::invalid_argument("image shape mismatch");
  return channel_norm(rgb_to_lab(x_prime, convention) - rgb_to_lab(x, convention), NormOrder::L2);
}

PerturbationNorms perturbation_norms(const ImageTensor& x, const ImageTensor& x_prime,
                                     color::Convention convention) {
  if (x.channels() != 3) return perturbation_norms(x, ImageTensor{}, x_prime, convention);
  return perturbation_norms(x, rgb_to_lab(x, convention), x_prime, convention);
}

PerturbationNorms perturbation_norms(const ImageTensor& x, const ImageTensor& x_lab,
                                     const ImageTensor& x_prime, color::Convention convention) {
  if (!x.same_shape(x_prime)) throw std::invalid_argument("image shape mismatch");
  PerturbationNorms out;
  const ImageTensor delta = x_prime - x;
  out.l1_rgb = entrywise_norm(delta, NormOrder::L1);
  out.l2_rgb = entrywise_norm(delta, NormOrder::L2);
  out.linf_rgb = entrywise_norm(delta, NormOrder::Linf);
  if (x.channels() == 3) {
    const PixelMap de = channel_norm(rgb_to_lab(x_prime, convention) - x_lab, NormOrder::L2);
    out.lab_l1 = entrywise_norm(de, NormOrder::L1);
    out.lab_l2 = entrywise_norm(de, NormOrder::L2);
    out.lab_linf = entrywise_norm(de, NormOrder::Linf);
  }
  return out;
}

bool attack_succeeded(const std::vector<double>& probabilities, const LossMode& mode) {
  const ClassLabel predicted = argmax_label(probabilities);
  return mode.is_targeted() ? predicted == mode.label : !(predicted == mode.label);
}

MisclassificationResult misclassification_rate(const Classifier& model,
                                               std::span<const LabeledImage> dataset,
                                               const AttackConfig& cfg, int threads) {
  if (dataset.empty()) throw std::invalid_argument("misclassification rate needs images");
  validate(cfg);
  MisclassificationResult result;
  result.outcomes.resize(dataset.size());
  parallel_for(dataset.size(), threads, [&](std::size_t i) {
    const LabeledImage& sample = dataset[i];
    if (!(model.predict(sample.image) == sample.label)) {
      throw std::invalid_argument("image " + std::to_string(i) +
                                  " is not classified correctly by the model");
    }
    AttackConfig run = cfg;
    if (!cfg.mode.is_targeted()) run.mode = LossMode::untargeted(sample.label);
    const AttackTrajectory traj = run_attack(model, sample.image, run);

    AttackOutcome& out = result.outcomes[i];
    out.index = i;
    out.true_label = sample.label;
    out.iterations_run = static_cast<int>(traj.steps.size());
    const auto& final_probs =
        traj.steps.empty() ? traj.source_probabilities : traj.steps.back().probabilities;
    out.predicted = argmax_label(final_probs);
    out.success = attack_succeeded(final_probs, run.mode);
    out.confidence = tracked_confidence(final_probs, run.mode);
    if (!traj.steps.empty()) out.final_norms = traj.steps.back().norms;
    for (const auto& step : traj.steps) {
      if (attack_succeeded(step.probabilities, run.mode)) {
        out.first_success_iteration = step.iteration;
        out.first_success_norms = step.norms;
        break;
      }
    }
  });
  const auto hits = std::count_if(result.outcomes.begin(), result.outcomes.end(),
                                  [](const AttackOutcome& o) { return o.success; });
  result.rate = static_cast<double>(hits) / static_cast<double>(dataset.size());
  return result;
}

SweepRecord confidence_sweep(const Classifier& model, const ImageTensor& x,
                             const AttackConfig& cfg) {
  const AttackTrajectory traj = run_attack(model, x, cfg);
  SweepRecord record;
  record.rows.push_back({0, tracked_confidence(traj.source_probabilities, cfg.mode), {}});
  for (const auto& step : traj.steps) {
    record.rows.push_back({step.iteration, tracked_confidence(step.probabilities, cfg.mode),
                           step.norms});
  }
  return record;
}

std::vector<TimingResult> timing_benchmark(const Classifier& model,
                                           std::span<const LabeledImage> dataset,
                                           std::span<const AttackConfig> configs,
                                           int iterations) {
  if (dataset.size() < 2) throw std::invalid_argument("timing needs at least two images");
  // Methods are interleaved per image so slow drifts in machine load hit
  // every method alike.
  std::vector<std::vector<double>> seconds(configs.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    for (std::size_t c = 0; c < configs.size(); ++c) {
      AttackConfig run = configs[c];
      run.iterations = iterations;
      run.stop_confidence.reset();
      if (!run.mode.is_targeted()) run.mode = LossMode::untargeted(dataset[i].label);
      const auto start = std::chrono::steady_clock::now();
      const AttackTrajectory traj = run_attack(model, dataset[i].image, run);
      const auto stop = std::chrono::steady_clock::now();
      if (traj.steps.empty()) throw std::logic_error("attack produced no iterations");
      if (i > 0) seconds[c].push_back(std::chrono::duration<double>(stop - start).count());
    }
  }
  std::vector<TimingResult> results;
  for (std::size_t c = 0; c < configs.size(); ++c) {
    const auto& s = seconds[c];
    double mean = 0.0;
    for (double v : s) mean += v;
    mean /= static_cast<double>(s.size());
    double var = 0.0;
    for (double v : s) var += (v - mean) * (v - mean);
    const double stddev = s.size() > 1 ? std::sqrt(var / static_cast<double>(s.size() - 1)) : 0.0;
    results.push_back({configs[c].method, mean, stddev, static_cast<int>(s.size())});
  }
  return results;
}

double median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median of an empty set");
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  if (values.size() % 2 == 1) return values[mid];
  return 0.5 * (values[mid - 1] + values[mid]);
}

}  // namespace cea
