#include "cea/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <stdexcept>

#include "cea/parallel.hpp"

namespace cea {

namespace {

std::string mode_name(bool targeted) { return targeted ? "targeted" : "untargeted"; }

void log(bool verbose, const std::string& msg) {
  if (verbose) std::cerr << "[reproduce] " << msg << std::endl;
}

std::filesystem::path cache_dir(const std::filesystem::path& out_dir, const ExperimentConfig& cfg) {
  return out_dir / "cache" /
         ("s" + std::to_string(cfg.seed) + "-n" + std::to_string(cfg.samples_per_class) + "-e" +
          std::to_string(cfg.train.epochs));
}

std::vector<LabeledImage> cached_corpus(const std::filesystem::path& dir, const ExperimentConfig& cfg,
                                        bool verbose) {
  if (std::filesystem::exists(dir / "labels.csv")) {
    log(verbose, "loading cached corpus from " + dir.string());
    return load_corpus(dir);
  }
  CorpusSpec spec;
  spec.samples_per_class = cfg.samples_per_class;
  spec.seed = cfg.seed;
  log(verbose, "generating corpus");
  auto corpus = generate_corpus(spec, cfg.threads);
  const auto tmp = dir.string() + ".tmp";
  std::filesystem::remove_all(tmp);
  save_corpus(corpus, tmp);
  std::filesystem::remove_all(dir);
  std::filesystem::rename(tmp, dir);
  return corpus;
}

Classifier cached_model(const std::filesystem::path& path, std::span<const LabeledImage> train_set,
                        const ExperimentConfig& cfg, bool verbose) {
  if (std::filesystem::exists(path)) {
    log(verbose, "loading cached model " + path.string());
    return load_model(path);
  }
  TrainConfig tc = cfg.train;
  tc.seed = mix_seed(cfg.seed, 17);
  tc.threads = cfg.threads;
  log(verbose, "training on " + std::to_string(train_set.size()) + " images");
  TrainResult trained = train(train_set, tc);
  const auto tmp = path.string() + ".tmp";
  save_model(trained.model, tmp);
  std::filesystem::rename(tmp, path);
  return std::move(trained.model);
}

double median_or_inf(std::vector<double> values) {
  return values.empty() ? std::numeric_limits<double>::infinity() : median(std::move(values));
}

}  // namespace

std::vector<BluePatchVariant> blue_patch_variants() {
  return {{"red+0.2", {0.2, 0.0, 1.0}, 3.04},
          {"green+0.2", {0.0, 0.2, 1.0}, 17.23},
          {"blue-0.2", {0.0, 0.0, 0.8}, 76.94}};
}

std::vector<BluePatchRow> calibrate_blue_patch(color::Convention convention) {
  const color::LabPixel base = color::rgb_to_lab({0.0, 0.0, 1.0}, convention);
  std::vector<BluePatchRow> rows;
  for (const auto& v : blue_patch_variants()) {
    const double d = color::delta_e(base, color::rgb_to_lab(v.modified, convention));
    rows.push_back({v.name, convention, d, v.reference, std::abs(d - v.reference) / v.reference});
  }
  return rows;
}

std::vector<double> alpha_grid(AttackMethod method) {
  switch (method) {
    case AttackMethod::ColorAware:
    case AttackMethod::ColorEdgeAware:
      return {0.5, 1, 2, 4, 8, 16};
    case AttackMethod::Fgsm:
    case AttackMethod::EdgeAwareFgsm:
      return {1 / 255.0, 2 / 255.0, 4 / 255.0, 8 / 255.0, 16 / 255.0};
    case AttackMethod::Lbfgs:
      return {10, 1, 0.1, 0.01, 0.001};
  }
  return {};
}

AlphaChoice select_alpha(const Classifier& model, std::span<const LabeledImage> images,
                         AttackConfig cfg, int threads) {
  // Grids are ordered from the smallest perturbation budget to the largest, so
  // a strict improvement is needed to move on.
  AlphaChoice best{0.0, -1.0};
  for (double alpha : alpha_grid(cfg.method)) {
    cfg.alpha = alpha;
    const double rate = misclassification_rate(model, images, cfg, threads).rate;
    if (rate > best.rate) best = {alpha, rate};
  }
  return best;
}

std::vector<LabeledImage> select_evaluation_set(const Classifier& model,
                                                std::span<const LabeledImage> candidates,
                                                std::size_t count, ClassLabel excluded,
                                                int threads) {
  std::vector<char> correct(candidates.size(), 0);
  parallel_for(candidates.size(), threads, [&](std::size_t i) {
    correct[i] = model.predict(candidates[i].image) == candidates[i].label;
  });
  std::vector<LabeledImage> out;
  for (std::size_t i = 0; i < candidates.size() && out.size() < count; ++i) {
    if (correct[i] && !(candidates[i].label == excluded)) out.push_back(candidates[i]);
  }
  if (out.size() < count) {
    throw std::runtime_error("only " + std::to_string(out.size()) +
                             " usable evaluation images, need " + std::to_string(count));
  }
  return out;
}

ReportTable table3_report(std::span<const Table3Row> rows) {
  ReportTable t{{"method", "mode", "target", "iterations", "alpha", "calibration_rate", "images",
                 "misclassified", "rate", "mean_lab_l1", "mean_linf_rgb"},
                {}};
  for (const auto& r : rows) {
    const auto& outcomes = r.result.outcomes;
    std::int64_t hits = 0;
    double lab_l1 = 0.0, linf = 0.0;
    for (const auto& o : outcomes) {
      hits += o.success ? 1 : 0;
      lab_l1 += o.final_norms.lab_l1;
      linf += o.final_norms.linf_rgb;
    }
    const double n = static_cast<double>(outcomes.size());
    t.add_row({std::string(to_string(r.method)), mode_name(r.targeted),
               static_cast<std::int64_t>(r.targeted ? r.target : 0),
               static_cast<std::int64_t>(r.iterations),
               r.alpha, r.calibration_rate, static_cast<std::int64_t>(outcomes.size()), hits,
               r.result.rate, lab_l1 / n, linf / n});
  }
  return t;
}

ReportTable matched_report(std::span<const MatchedRow> rows) {
  ReportTable t{{"method", "images", "flipped", "median_lab_l1_at_flip", "median_l2_rgb_at_flip"}, {}};
  for (const auto& r : rows) {
    t.add_row({std::string(to_string(r.method)), static_cast<std::int64_t>(r.images),
               static_cast<std::int64_t>(r.flipped), r.median_lab_l1, r.median_l2_rgb});
  }
  return t;
}

ReportTable sweep_report(std::span<const std::pair<AttackMethod, SweepRecord>> sweeps) {
  ReportTable t{{"method", "iteration", "confidence", "l1_rgb", "l2_rgb", "linf_rgb", "lab_l1",
                 "lab_l2", "lab_linf"},
                {}};
  for (const auto& [method, record] : sweeps) {
    for (const auto& row : record.rows) {
      const auto& n = row.norms;
      t.add_row({std::string(to_string(method)), static_cast<std::int64_t>(row.iteration),
                 row.confidence, n.l1_rgb, n.l2_rgb, n.linf_rgb, n.lab_l1, n.lab_l2, n.lab_linf});
    }
  }
  return t;
}

ReportTable timing_report(std::span<const TimingResult> timings, int iterations) {
  ReportTable t{{"method", "iterations", "samples", "mean_seconds", "stddev_seconds"}, {}};
  for (const auto& r : timings) {
    t.add_row({std::string(to_string(r.method)), static_cast<std::int64_t>(iterations),
               static_cast<std::int64_t>(r.samples), r.mean_seconds, r.stddev_seconds});
  }
  return t;
}

ReportTable calibration_report(std::span<const BluePatchRow> rows) {
  ReportTable t{{"variant", "convention", "delta_e", "reference", "relative_error"}, {}};
  for (const auto& r : rows) {
    t.add_row({r.variant, std::string(color::to_string(r.convention)), r.delta_e, r.reference,
               r.relative_error});
  }
  return t;
}

ReproduceResult reproduce_all(const std::filesystem::path& out_dir, const ExperimentConfig& cfg,
                              bool verbose) {
  std::filesystem::create_directories(out_dir);
  const auto cache = cache_dir(out_dir, cfg);
  std::filesystem::create_directories(cache);
  ReproduceResult result;

  const auto corpus = cached_corpus(cache / "corpus", cfg, verbose);
  const auto [train_set, test_set] = split(corpus, cfg.train_fraction, mix_seed(cfg.seed, 3));
  const Classifier model = cached_model(cache / "model.bin", train_set, cfg, verbose);
  result.train_accuracy = accuracy(model, train_set, cfg.threads);
  result.test_accuracy = accuracy(model, test_set, cfg.threads);
  log(verbose, "held-out accuracy " + std::to_string(result.test_accuracy));

  const auto eval = select_evaluation_set(model, test_set, cfg.eval_images, cfg.target, cfg.threads);
  const std::span<const LabeledImage> calibration(eval.data(),
                                                  std::min(cfg.calibration_images, eval.size()));

  for (bool targeted : {false, true}) {
    for (AttackMethod method : kAllMethods) {
      AttackConfig ac;
      ac.method = method;
      ac.convention = cfg.convention;
      ac.iterations = targeted ? cfg.targeted_iterations : cfg.untargeted_iterations;
      ac.mode = targeted ? LossMode::targeted(cfg.target) : LossMode::untargeted(ClassLabel{1});
      const AlphaChoice choice = select_alpha(model, calibration, ac, cfg.threads);
      ac.alpha = choice.alpha;
      Table3Row row{method, targeted, cfg.target.value, ac.iterations, choice.alpha, choice.rate,
                    misclassification_rate(model, eval, ac, cfg.threads)};
      log(verbose, std::string(to_string(method)) + " " + mode_name(targeted) + " alpha " +
                       std::to_string(choice.alpha) + " rate " + std::to_string(row.result.rate));
      result.table3.push_back(std::move(row));
    }
  }

  for (const auto& row : result.table3) {
    if (row.targeted) continue;
    MatchedRow m{row.method, row.result.outcomes.size(), 0, 0.0, 0.0};
    std::vector<double> lab_l1, l2;
    for (const auto& o : row.result.outcomes) {
      const bool flipped = o.first_success_iteration > 0;
      m.flipped += flipped ? 1 : 0;
      const double inf = std::numeric_limits<double>::infinity();
      lab_l1.push_back(flipped ? o.first_success_norms.lab_l1 : inf);
      l2.push_back(flipped ? o.first_success_norms.l2_rgb : inf);
    }
    m.median_lab_l1 = median_or_inf(lab_l1);
    m.median_l2_rgb = median_or_inf(l2);
    result.matched.push_back(m);
  }

  for (const auto& row : result.table3) {
    if (row.targeted) continue;
    AttackConfig ac;
    ac.method = row.method;
    ac.convention = cfg.convention;
    ac.alpha = row.alpha;
    ac.iterations = cfg.sweep_iterations;
    ac.mode = LossMode::untargeted(eval.front().label);
    result.sweeps.emplace_back(row.method, confidence_sweep(model, eval.front().image, ac));
  }

  std::vector<AttackConfig> timing_configs;
  for (const auto& row : result.table3) {
    if (row.targeted) continue;
    AttackConfig ac;
    ac.method = row.method;
    ac.convention = cfg.convention;
    ac.alpha = row.alpha;
    ac.mode = LossMode::untargeted(ClassLabel{1});
    timing_configs.push_back(ac);
  }
  const std::span<const LabeledImage> timing_set(eval.data(), std::min(cfg.timing_images, eval.size()));
  log(verbose, "timing " + std::to_string(timing_set.size()) + " images per method");
  result.timings = timing_benchmark(model, timing_set, timing_configs, cfg.untargeted_iterations);

  result.calibration = calibrate_blue_patch(color::Convention::Srgb);
  for (const auto& r : calibrate_blue_patch(color::Convention::Linear)) result.calibration.push_back(r);

  ReportTable summary{{"train_images", "test_images", "train_accuracy", "test_accuracy",
                       "eval_images", "target"},
                      {}};
  summary.add_row({static_cast<std::int64_t>(train_set.size()),
                   static_cast<std::int64_t>(test_set.size()), result.train_accuracy,
                   result.test_accuracy, static_cast<std::int64_t>(eval.size()),
                   static_cast<std::int64_t>(cfg.target.value)});

  const std::vector<std::pair<std::string, ReportTable>> files{
      {"table3_analogue.csv", table3_report(result.table3)},
      {"fig6_analogue.csv", sweep_report(result.sweeps)},
      {"fig6_matched.csv", matched_report(result.matched)},
      {"table5_analogue.csv", timing_report(result.timings, cfg.untargeted_iterations)},
      {"fig2_calibration.csv", calibration_report(result.calibration)},
      {"model_summary.csv", summary}};
  for (const auto& [name, table] : files) {
    emit_report(table, ReportFormat::Csv, out_dir / name);
    result.written.push_back(out_dir / name);
  }
  log(verbose, "wrote reports to " + out_dir.string());
  return result;
}

}  // namespace cea
