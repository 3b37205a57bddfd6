#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cea/attack.hpp"
#include "cea/classifier.hpp"
#include "cea/color_space.hpp"
#include "cea/corpus.hpp"
#include "cea/edge_filter.hpp"
#include "cea/experiments.hpp"
#include "cea/image_io.hpp"
#include "cea/metrics.hpp"
#include "cea/parallel.hpp"
#include "cea/report.hpp"

namespace {

constexpr const char* kVersion = "1.0.0";

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Globals {
  std::uint64_t seed = 1;
  int threads = cea::default_thread_count();
  std::string convention = cea::color::to_string(cea::color::kDefaultConvention);

  cea::color::Convention conv() const { return cea::color::parse_convention(convention.c_str()); }
};

cea::LossMode parse_mode(const std::string& text, std::optional<int> label, int classes) {
  auto check = [&](int k) {
    if (k < 1 || k > classes) {
      throw UsageError("label " + std::to_string(k) + " outside 1.." + std::to_string(classes));
    }
    return cea::ClassLabel{k};
  };
  if (text == "untargeted") {
    if (!label) throw std::logic_error("untargeted mode needs the true label");
    return cea::LossMode::untargeted(check(*label));
  }
  if (text.rfind("targeted:", 0) == 0) {
    int k = 0;
    try {
      std::size_t used = 0;
      k = std::stoi(text.substr(9), &used);
      if (used != text.size() - 9) throw std::invalid_argument(text);
    } catch (const std::logic_error&) {
      throw UsageError("bad --mode '" + text + "' (expected untargeted or targeted:K)");
    }
    return cea::LossMode::targeted(check(k));
  }
  throw UsageError("bad --mode '" + text + "' (expected untargeted or targeted:K)");
}

std::string join_methods() { return "lbfgs|fgsm|color|edge-fgsm|color-edge"; }

CLI::Validator method_check() {
  return CLI::IsMember({"lbfgs", "fgsm", "color", "edge-fgsm", "color-edge"});
}

CLI::Validator mode_check() {
  return CLI::Validator(
      [](std::string& s) -> std::string {
        if (s == "untargeted") return {};
        if (s.rfind("targeted:", 0) == 0 && s.size() > 9 &&
            std::all_of(s.begin() + 9, s.end(), [](char c) { return c >= '0' && c <= '9'; })) {
          return {};
        }
        return "expected untargeted or targeted:K";
      },
      "untargeted|targeted:K");
}

void require_shape(const cea::Classifier& model, const cea::ImageTensor& img) {
  const auto& s = model.input_shape();
  if (img.height() != s.height || img.width() != s.width || img.channels() != s.channels) {
    throw std::runtime_error("image is " + std::to_string(img.height()) + "x" +
                             std::to_string(img.width()) + "x" + std::to_string(img.channels()) +
                             ", model expects " + std::to_string(s.height) + "x" +
                             std::to_string(s.width) + "x" + std::to_string(s.channels));
  }
}

std::vector<double> parse_triple(const std::string& text) {
  std::vector<double> v;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const std::string part = text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    try {
      std::size_t used = 0;
      v.push_back(std::stod(part, &used));
      if (used != part.size()) throw std::invalid_argument(part);
    } catch (const std::logic_error&) {
      throw UsageError("bad component '" + part + "' in '" + text + "'");
    }
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (v.size() != 3) throw UsageError("expected three comma-separated values, got '" + text + "'");
  return v;
}

nlohmann::ordered_json norms_json(const cea::PerturbationNorms& n) {
  return {{"l1_rgb", n.l1_rgb}, {"l2_rgb", n.l2_rgb}, {"linf_rgb", n.linf_rgb},
          {"lab_l1", n.lab_l1}, {"lab_l2", n.lab_l2}, {"lab_linf", n.lab_linf}};
}

/// Min-max rescaling of the perturbation to [0,1]; a constant perturbation maps to 0.5.
cea::ImageTensor perturbation_visual(const cea::ImageTensor& delta) {
  const auto [lo, hi] = std::minmax_element(delta.values().begin(), delta.values().end());
  cea::ImageTensor out(delta.height(), delta.width(), delta.channels(), cea::SpaceTag::Rgb, 0.5);
  if (*hi > *lo) {
    for (std::size_t n = 0; n < delta.size(); ++n) out[n] = (delta[n] - *lo) / (*hi - *lo);
  }
  return out;
}

std::vector<cea::LabeledImage> evaluation_images(const cea::Classifier& model,
                                                 const std::string& data, double holdout,
                                                 std::uint64_t split_seed, std::size_t count,
                                                 int threads) {
  auto corpus = cea::load_corpus(data);
  std::vector<cea::LabeledImage> pool;
  if (holdout > 0.0) {
    pool = cea::split(corpus, 1.0 - holdout, split_seed).second;
  } else {
    pool = std::move(corpus);
  }
  std::vector<cea::LabeledImage> out;
  std::vector<char> ok(pool.size(), 0);
  cea::parallel_for(pool.size(), threads, [&](std::size_t i) {
    ok[i] = model.predict(pool[i].image) == pool[i].label;
  });
  for (std::size_t i = 0; i < pool.size() && out.size() < count; ++i) {
    if (ok[i]) out.push_back(pool[i]);
  }
  if (out.empty()) throw std::runtime_error("no correctly classified images in " + data);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Color- and edge-aware adversarial perturbation toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version",
                       std::string("cea ") + kVersion + " (model format " +
                           std::to_string(cea::kModelFormatVersion) + ", report schema " +
                           std::to_string(cea::kReportSchemaVersion) + ")");
  app.set_config("--config", "", "Key-value file with default flag values (flags override)");

  Globals g;
  app.add_option("--seed", g.seed, "Random seed")->capture_default_str();
  app.add_option("--threads", g.threads, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--convention", g.convention, "RGB convention for color conversions")
      ->check(CLI::IsMember({"srgb", "linear"}))
      ->capture_default_str();

  std::function<void()> run;

  // generate
  struct {
    std::string out, format, input;
    int classes = 10, per_class = 100, size = 32;
  } gen;
  auto* generate = app.add_subcommand("generate", "Write a labeled corpus (PNG files + labels.csv)");
  generate->add_option("--out", gen.out, "Output directory")->required();
  generate->add_option("--classes", gen.classes, "Class count")->check(CLI::Range(1, 255))->capture_default_str();
  generate->add_option("--per-class", gen.per_class, "Images per class")->check(CLI::PositiveNumber)->capture_default_str();
  generate->add_option("--size", gen.size, "Image side length")->check(CLI::Range(3, 4096))->capture_default_str();
  generate->add_option("--format", gen.format, "Ingest an external file instead of generating")
      ->check(CLI::IsMember({"cifar10-binary"}));
  generate->add_option("--input", gen.input, "External file for --format")->check(CLI::ExistingFile);
  generate->callback([&] {
    run = [&] {
      std::vector<cea::LabeledImage> corpus;
      if (!gen.format.empty()) {
        if (gen.input.empty()) throw UsageError("--format needs --input");
        corpus = cea::ingest_external(gen.input, cea::ExternalFormat::Cifar10Binary, gen.classes);
      } else {
        if (!gen.input.empty()) throw UsageError("--input needs --format");
        cea::CorpusSpec spec{gen.classes, gen.size, gen.size, gen.per_class, g.seed};
        corpus = cea::generate_corpus(spec, g.threads);
      }
      cea::save_corpus(corpus, gen.out);
      std::cout << "wrote " << corpus.size() << " images to " << gen.out << "\n";
    };
  });

  // train
  struct {
    std::string data, out;
    cea::TrainConfig cfg;
    double holdout = 0.2;
    std::uint64_t split_seed = 1;
  } tr;
  auto* train = app.add_subcommand("train", "Train the reference classifier on a corpus directory");
  train->add_option("--data", tr.data, "Corpus directory")->required()->check(CLI::ExistingDirectory);
  train->add_option("--out", tr.out, "Model file")->required();
  train->add_option("--epochs", tr.cfg.epochs, "Epochs")->check(CLI::PositiveNumber)->capture_default_str();
  train->add_option("--batch", tr.cfg.batch_size, "Minibatch size")->check(CLI::PositiveNumber)->capture_default_str();
  train->add_option("--lr", tr.cfg.learning_rate, "Learning rate")->check(CLI::NonNegativeNumber)->capture_default_str();
  train->add_option("--holdout", tr.holdout, "Held-out fraction for reporting accuracy (0 = train on all)")
      ->check(CLI::Range(0.0, 0.99))
      ->capture_default_str();
  train->add_option("--split-seed", tr.split_seed, "Seed of the train/held-out split")->capture_default_str();
  train->callback([&] {
    run = [&] {
      const auto corpus = cea::load_corpus(tr.data);
      std::vector<cea::LabeledImage> train_set = corpus, test_set;
      if (tr.holdout > 0.0) std::tie(train_set, test_set) = cea::split(corpus, 1.0 - tr.holdout, tr.split_seed);
      tr.cfg.seed = g.seed;
      tr.cfg.threads = g.threads;
      const auto result = cea::train(train_set, tr.cfg, test_set);
      for (std::size_t e = 0; e < result.epoch_loss.size(); ++e) {
        std::cout << "epoch " << e + 1 << " loss " << result.epoch_loss[e] << "\n";
      }
      std::cout << "train accuracy " << result.train_accuracy;
      if (!test_set.empty()) std::cout << ", held-out accuracy " << result.test_accuracy;
      std::cout << "\n";
      cea::save_model(result.model, tr.out);
    };
  });

  // attack, sweep, evaluate share the attack flags
  struct AttackFlags {
    std::string model, method, mode = "untargeted";
    double alpha = 0.0;
    int iters = 1;
    std::optional<double> stop;
  };
  auto add_attack_flags = [](CLI::App* cmd, AttackFlags& f) {
    cmd->add_option("--model", f.model, "Model file")->required()->check(CLI::ExistingFile);
    cmd->add_option("--method", f.method, join_methods())->required()->check(method_check());
    cmd->add_option("--mode", f.mode, "untargeted or targeted:K")->check(mode_check())->capture_default_str();
    cmd->add_option("--alpha", f.alpha, "Step budget (RGB units, Delta-E units, or L-BFGS penalty)")
        ->required()
        ->check(CLI::NonNegativeNumber);
    cmd->add_option("--iters", f.iters, "Iterations")->check(CLI::PositiveNumber)->capture_default_str();
    cmd->add_option("--stop", f.stop, "Early-stop confidence in [0,1]")->check(CLI::Range(0.0, 1.0));
  };
  auto make_config = [&g](const AttackFlags& f, const cea::Classifier& model, std::optional<int> label) {
    cea::AttackConfig cfg;
    cfg.method = cea::parse_method(f.method);
    cfg.mode = parse_mode(f.mode, label, model.class_count());
    cfg.alpha = f.alpha;
    cfg.iterations = f.iters;
    cfg.stop_confidence = f.stop;
    cfg.convention = g.conv();
    return cfg;
  };

  struct {
    AttackFlags flags;
    std::string input, out_dir;
    std::optional<int> label;
  } at;
  auto* attack = app.add_subcommand("attack", "Attack one image and write the result, a perturbation view and a JSON record");
  add_attack_flags(attack, at.flags);
  attack->add_option("--input", at.input, "Input image")->required()->check(CLI::ExistingFile);
  attack->add_option("--out-dir", at.out_dir, "Output directory")->required();
  attack->add_option("--label", at.label, "True label for untargeted runs (default: model prediction)");
  attack->callback([&] {
    run = [&] {
      const auto model = cea::load_model(at.flags.model);
      const auto img = cea::load_image(at.input);
      require_shape(model, img);
      const int label = at.label.value_or(model.predict(img).value);
      const auto cfg = make_config(at.flags, model, label);
      const auto traj = cea::run_attack(model, img, cfg);

      std::filesystem::create_directories(at.out_dir);
      const std::filesystem::path dir(at.out_dir);
      cea::save_image(traj.final_image(), dir / "perturbed.png");
      cea::save_image(perturbation_visual(traj.delta_rgb), dir / "perturbation.png");

      nlohmann::ordered_json doc;
      doc["schema"] = "cea-trajectory";
      doc["version"] = 1;
      doc["method"] = cea::to_string(cfg.method);
      doc["mode"] = at.flags.mode;
      doc["label"] = cfg.mode.label.value;
      doc["alpha"] = cfg.alpha;
      doc["convention"] = cea::color::to_string(cfg.convention);
      doc["source_probabilities"] = traj.source_probabilities;
      auto steps = nlohmann::ordered_json::array();
      for (const auto& s : traj.steps) {
        const auto best = std::max_element(s.probabilities.begin(), s.probabilities.end());
        nlohmann::ordered_json j;
        j["iteration"] = s.iteration;
        j["predicted"] = static_cast<int>(best - s.probabilities.begin()) + 1;
        j["confidence"] = cea::tracked_confidence(s.probabilities, cfg.mode);
        j["success"] = cea::attack_succeeded(s.probabilities, cfg.mode);
        j["probabilities"] = s.probabilities;
        j["norms"] = norms_json(s.norms);
        if (cfg.method == cea::AttackMethod::Lbfgs) j["objective"] = s.objective;
        steps.push_back(std::move(j));
      }
      doc["steps"] = std::move(steps);
      std::ofstream(dir / "trajectory.json") << doc.dump(2) << "\n";

      const auto& last = traj.steps.back();
      std::cout << "iterations " << traj.steps.size() << ", confidence "
                << cea::tracked_confidence(last.probabilities, cfg.mode) << ", success "
                << (cea::attack_succeeded(last.probabilities, cfg.mode) ? "yes" : "no") << "\n";
    };
  });

  struct {
    AttackFlags flags;
    std::string input, out, format = "csv";
    std::optional<int> label;
  } sw;
  auto* sweep = app.add_subcommand("sweep", "Confidence and norms per iteration for one image");
  add_attack_flags(sweep, sw.flags);
  sweep->add_option("--input", sw.input, "Input image")->required()->check(CLI::ExistingFile);
  sweep->add_option("--out", sw.out, "Report file")->required();
  sweep->add_option("--format", sw.format, "csv or json")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
  sweep->add_option("--label", sw.label, "True label for untargeted runs (default: model prediction)");
  sweep->callback([&] {
    run = [&] {
      const auto model = cea::load_model(sw.flags.model);
      const auto img = cea::load_image(sw.input);
      require_shape(model, img);
      const auto cfg = make_config(sw.flags, model, sw.label.value_or(model.predict(img).value));
      const std::vector<std::pair<cea::AttackMethod, cea::SweepRecord>> rec{
          {cfg.method, cea::confidence_sweep(model, img, cfg)}};
      cea::emit_report(cea::sweep_report(rec), cea::parse_report_format(sw.format), sw.out);
    };
  });

  struct {
    AttackFlags flags;
    std::string data, out, format = "csv", details;
    std::size_t count = 100;
    double holdout = 0.2;
    std::uint64_t split_seed = 1;
  } ev;
  auto* evaluate = app.add_subcommand("evaluate", "Misclassification rate over correctly classified images");
  add_attack_flags(evaluate, ev.flags);
  evaluate->add_option("--data", ev.data, "Corpus directory")->required()->check(CLI::ExistingDirectory);
  evaluate->add_option("--out", ev.out, "Report file")->required();
  evaluate->add_option("--format", ev.format, "csv or json")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
  evaluate->add_option("--count", ev.count, "Images to attack")->check(CLI::PositiveNumber)->capture_default_str();
  evaluate->add_option("--holdout", ev.holdout, "Attack the held-out side of this split (0 = whole corpus)")
      ->check(CLI::Range(0.0, 0.99))
      ->capture_default_str();
  evaluate->add_option("--split-seed", ev.split_seed, "Seed of the train/held-out split")->capture_default_str();
  evaluate->add_option("--details", ev.details, "Optional per-image report file");
  evaluate->callback([&] {
    run = [&] {
      const auto model = cea::load_model(ev.flags.model);
      auto images = evaluation_images(model, ev.data, ev.holdout, ev.split_seed, ev.count, g.threads);
      require_shape(model, images.front().image);
      auto cfg = make_config(ev.flags, model, images.front().label.value);
      if (cfg.mode.is_targeted()) {
        std::erase_if(images, [&](const cea::LabeledImage& s) { return s.label == cfg.mode.label; });
        if (images.empty()) throw std::runtime_error("no images left after removing the target class");
      }
      const auto result = cea::misclassification_rate(model, images, cfg, g.threads);
      const auto format = cea::parse_report_format(ev.format);
      cea::ReportTable t{{"method", "mode", "alpha", "iterations", "images", "misclassified", "rate"}, {}};
      const auto hits = std::count_if(result.outcomes.begin(), result.outcomes.end(),
                                      [](const cea::AttackOutcome& o) { return o.success; });
      t.add_row({std::string(cea::to_string(cfg.method)), ev.flags.mode, cfg.alpha,
                 static_cast<std::int64_t>(cfg.iterations), static_cast<std::int64_t>(images.size()),
                 static_cast<std::int64_t>(hits), result.rate});
      cea::emit_report(t, format, ev.out);
      if (!ev.details.empty()) {
        cea::ReportTable d{{"image", "true_label", "predicted", "success", "confidence", "iterations",
                            "first_success_iteration", "l2_rgb", "linf_rgb", "lab_l1", "lab_linf"},
                           {}};
        for (const auto& o : result.outcomes) {
          d.add_row({static_cast<std::int64_t>(o.index), static_cast<std::int64_t>(o.true_label.value),
                     static_cast<std::int64_t>(o.predicted.value), static_cast<std::int64_t>(o.success),
                     o.confidence, static_cast<std::int64_t>(o.iterations_run),
                     static_cast<std::int64_t>(o.first_success_iteration), o.final_norms.l2_rgb,
                     o.final_norms.linf_rgb, o.final_norms.lab_l1, o.final_norms.lab_linf});
        }
        cea::emit_report(d, format, ev.details);
      }
      std::cout << "misclassification " << result.rate << " (" << hits << "/" << images.size() << ")\n";
    };
  });

  // edges
  struct {
    std::string input, output;
  } ed;
  auto* edges = app.add_subcommand("edges", "Write the normalized Sobel edge-weight map as a grayscale image");
  edges->add_option("--input", ed.input, "Input image")->required()->check(CLI::ExistingFile);
  edges->add_option("--output", ed.output, "Output image (.png or .pgm)")->required();
  edges->callback([&] {
    run = [&] { cea::save_image(cea::edge_weights(cea::load_image(ed.input), g.conv()), ed.output); };
  });

  // color
  auto* color = app.add_subcommand("color", "Color conversions");
  color->require_subcommand(1);
  struct {
    std::string from, to, pixel, p1, p2, space = "rgb";
  } co;
  auto* convert = color->add_subcommand("convert", "Convert one pixel between rgb, xyz and lab");
  convert->add_option("--from", co.from, "Source space")->required()->check(CLI::IsMember({"rgb", "lab", "xyz"}));
  convert->add_option("--to", co.to, "Target space")->required()->check(CLI::IsMember({"rgb", "lab", "xyz"}));
  convert->add_option("--pixel", co.pixel, "Comma-separated triple")->required();
  convert->callback([&] {
    run = [&] {
      namespace c = cea::color;
      const auto v = parse_triple(co.pixel);
      const auto conv = g.conv();
      auto to_linear = [&](c::RgbPixel p) {
        if (conv == c::Convention::Srgb) p = {c::srgb_decode(p.r), c::srgb_decode(p.g), c::srgb_decode(p.b)};
        return p;
      };
      auto from_linear = [&](c::RgbPixel p) {
        if (conv == c::Convention::Srgb) p = {c::srgb_encode(p.r), c::srgb_encode(p.g), c::srgb_encode(p.b)};
        return p;
      };
      c::XyzPixel xyz;
      if (co.from == "rgb") xyz = c::rgb_to_xyz(to_linear({v[0], v[1], v[2]}));
      else if (co.from == "lab") xyz = c::lab_to_xyz({v[0], v[1], v[2]});
      else xyz = {v[0], v[1], v[2]};
      double out[3];
      if (co.to == "rgb") {
        const auto p = from_linear(c::xyz_to_rgb(xyz));
        out[0] = p.r, out[1] = p.g, out[2] = p.b;
      } else if (co.to == "lab") {
        const auto p = c::xyz_to_lab(xyz);
        out[0] = p.l, out[1] = p.a, out[2] = p.b;
      } else {
        out[0] = xyz.x, out[1] = xyz.y, out[2] = xyz.z;
      }
      std::printf("%.6f,%.6f,%.6f\n", out[0], out[1], out[2]);
    };
  });
  auto* delta = color->add_subcommand("delta-e", "Euclidean LAB distance between two pixels");
  delta->add_option("--p1", co.p1, "First pixel triple")->required();
  delta->add_option("--p2", co.p2, "Second pixel triple")->required();
  delta->add_option("--space", co.space, "Space of the triples")->check(CLI::IsMember({"rgb", "lab"}))->capture_default_str();
  delta->callback([&] {
    run = [&] {
      namespace c = cea::color;
      const auto a = parse_triple(co.p1), b = parse_triple(co.p2);
      c::LabPixel la{a[0], a[1], a[2]}, lb{b[0], b[1], b[2]};
      if (co.space == "rgb") {
        la = c::rgb_to_lab({a[0], a[1], a[2]}, g.conv());
        lb = c::rgb_to_lab({b[0], b[1], b[2]}, g.conv());
      }
      std::printf("%.6f\n", c::delta_e(la, lb));
    };
  });

  // bench
  struct {
    std::string model, data, out, format = "csv";
    std::vector<std::string> methods{"fgsm", "edge-fgsm", "color", "color-edge", "lbfgs"};
    std::size_t count = 20;
    int iters = 5;
    double alpha_rgb = 2.0 / 255.0, alpha_lab = 2.0, penalty = 0.1;
  } be;
  auto* bench = app.add_subcommand("bench", "Wall time per untargeted attack and method");
  bench->add_option("--model", be.model, "Model file")->required()->check(CLI::ExistingFile);
  bench->add_option("--data", be.data, "Corpus directory")->required()->check(CLI::ExistingDirectory);
  bench->add_option("--out", be.out, "Report file")->required();
  bench->add_option("--format", be.format, "csv or json")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
  bench->add_option("--methods", be.methods, "Methods to time")->delimiter(',')->check(method_check())->capture_default_str();
  bench->add_option("--count", be.count, "Images (the first is a warm-up)")->check(CLI::Range(2, 1000000))->capture_default_str();
  bench->add_option("--iters", be.iters, "Iterations per attack")->check(CLI::PositiveNumber)->capture_default_str();
  bench->add_option("--alpha-rgb", be.alpha_rgb, "Budget for fgsm and edge-fgsm")->capture_default_str();
  bench->add_option("--alpha-lab", be.alpha_lab, "Budget for color and color-edge")->capture_default_str();
  bench->add_option("--penalty", be.penalty, "L-BFGS penalty weight")->capture_default_str();
  bench->callback([&] {
    run = [&] {
      const auto model = cea::load_model(be.model);
      const auto images = evaluation_images(model, be.data, 0.0, 0, be.count, g.threads);
      if (images.size() < 2) throw std::runtime_error("bench needs at least two correctly classified images");
      std::vector<cea::AttackConfig> configs;
      for (const auto& name : be.methods) {
        cea::AttackConfig cfg;
        cfg.method = cea::parse_method(name);
        cfg.convention = g.conv();
        cfg.alpha = cfg.method == cea::AttackMethod::Lbfgs ? be.penalty
                    : cea::works_in_lab(cfg.method)        ? be.alpha_lab
                                                           : be.alpha_rgb;
        cfg.mode = cea::LossMode::untargeted(cea::ClassLabel{1});
        configs.push_back(cfg);
      }
      const auto timings = cea::timing_benchmark(model, images, configs, be.iters);
      cea::emit_report(cea::timing_report(timings, be.iters), cea::parse_report_format(be.format), be.out);
      for (const auto& t : timings) {
        std::printf("%-10s %.5f s +- %.5f\n", cea::to_string(t.method), t.mean_seconds, t.stddev_seconds);
      }
    };
  });

  // reproduce
  struct {
    std::string out;
    cea::ExperimentConfig cfg;
    bool quiet = false;
  } re;
  auto* reproduce = app.add_subcommand("reproduce", "Run every experiment and write the CSV reports");
  reproduce->add_option("--out", re.out, "Output directory (corpus and model are cached below it)")->required();
  reproduce->add_option("--per-class", re.cfg.samples_per_class, "Corpus images per class")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  reproduce->add_option("--epochs", re.cfg.train.epochs, "Training epochs")->check(CLI::PositiveNumber)->capture_default_str();
  reproduce->add_option("--eval-images", re.cfg.eval_images, "Evaluation images")->check(CLI::PositiveNumber)->capture_default_str();
  reproduce->add_option("--timing-images", re.cfg.timing_images, "Images timed per method")
      ->check(CLI::Range(2, 1000000))
      ->capture_default_str();
  reproduce->add_flag("--quiet", re.quiet, "No progress messages");
  reproduce->callback([&] {
    run = [&] {
      re.cfg.seed = g.seed;
      re.cfg.threads = g.threads;
      re.cfg.convention = g.conv();
      const auto result = cea::reproduce_all(re.out, re.cfg, !re.quiet);
      for (const auto& path : result.written) std::cout << path.string() << "\n";
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  try {
    run();
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
