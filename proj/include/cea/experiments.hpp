#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "cea/attack.hpp"
#include "cea/classifier.hpp"
#include "cea/color_space.hpp"
#include "cea/corpus.hpp"
#include "cea/metrics.hpp"
#include "cea/random.hpp"
#include "cea/report.hpp"

namespace cea {

// Blue patch (0,0,1) modified by 0.2 in one plane; reference distances 3.04,
// 17.23 and 76.94.
struct BluePatchVariant {
  std::string name;
  color::RgbPixel modified;
  double reference = 0.0;
};

struct BluePatchRow {
  std::string variant;
  color::Convention convention = color::kDefaultConvention;
  double delta_e = 0.0;
  double reference = 0.0;
  double relative_error = 0.0;
};

std::vector<BluePatchVariant> blue_patch_variants();
std::vector<BluePatchRow> calibrate_blue_patch(color::Convention convention);

/// Candidate budgets. LAB methods use Delta-E units, RGB methods [0,1] units,
/// L-BFGS penalty weights.
std::vector<double> alpha_grid(AttackMethod method);

struct AlphaChoice {
  double alpha = 0.0;
  double rate = 0.0;
};

/// Picks the grid value with the highest success rate on `images`; ties go to
/// the smaller perturbation budget (smaller alpha, larger L-BFGS penalty).
AlphaChoice select_alpha(const Classifier& model, std::span<const LabeledImage> images,
                         AttackConfig cfg, int threads);

/// The first `count` images of `candidates` that the model classifies
/// correctly and whose label differs from `excluded`.
std::vector<LabeledImage> select_evaluation_set(const Classifier& model,
                                                std::span<const LabeledImage> candidates,
                                                std::size_t count, ClassLabel excluded,
                                                int threads);

struct ExperimentConfig {
  std::uint64_t seed = 1;
  int threads = 1;
  int samples_per_class = 150;
  double train_fraction = 0.8;
  TrainConfig train;
  std::size_t eval_images = 100;
  std::size_t calibration_images = 10;
  int untargeted_iterations = 5;
  int targeted_iterations = 10;
  ClassLabel target{1};
  int sweep_iterations = 10;
  std::size_t timing_images = 100;
  color::Convention convention = color::kDefaultConvention;
};

struct Table3Row {
  AttackMethod method = AttackMethod::Fgsm;
  bool targeted = false;
  int target = 0;  ///< target label for targeted rows
  int iterations = 0;
  double alpha = 0.0;
  double calibration_rate = 0.0;
  MisclassificationResult result;
};

/// Per-method comparison at the first iteration that flips the argmax.
struct MatchedRow {
  AttackMethod method = AttackMethod::Fgsm;
  std::size_t images = 0;
  std::size_t flipped = 0;
  /// Medians over all images; images that never flip count as +infinity.
  double median_lab_l1 = 0.0;
  double median_l2_rgb = 0.0;
};

struct ReproduceResult {
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
  std::vector<Table3Row> table3;
  std::vector<MatchedRow> matched;
  std::vector<std::pair<AttackMethod, SweepRecord>> sweeps;
  std::vector<TimingResult> timings;
  std::vector<BluePatchRow> calibration;
  std::vector<std::filesystem::path> written;
};

inline constexpr std::array<AttackMethod, 5> kAllMethods{
    AttackMethod::Fgsm, AttackMethod::EdgeAwareFgsm, AttackMethod::ColorAware,
    AttackMethod::ColorEdgeAware, AttackMethod::Lbfgs};

/// Loads the corpus and model cached under out_dir/cache (generating and
/// training them when absent), then writes table3_analogue.csv,
/// fig6_analogue.csv, fig6_matched.csv, table5_analogue.csv,
/// fig2_calibration.csv and model_summary.csv. Everything except
/// table5_analogue.csv is a pure function of cfg.seed.
ReproduceResult reproduce_all(const std::filesystem::path& out_dir, const ExperimentConfig& cfg,
                              bool verbose = false);

ReportTable table3_report(std::span<const Table3Row> rows);
ReportTable matched_report(std::span<const MatchedRow> rows);
ReportTable sweep_report(std::span<const std::pair<AttackMethod, SweepRecord>> sweeps);
ReportTable timing_report(std::span<const TimingResult> timings, int iterations);
ReportTable calibration_report(std::span<const BluePatchRow> rows);

}  // namespace cea
