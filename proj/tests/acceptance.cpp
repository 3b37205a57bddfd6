// One PASS/FAIL line per acceptance criterion. Exit status is the number of
// failing criteria that were not listed with --expected-failures.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cea/attack.hpp"
#include "cea/color_space.hpp"
#include "cea/edge_filter.hpp"
#include "cea/experiments.hpp"
#include "cea/random.hpp"

using namespace cea;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double inner(const ImageTensor& a, const ImageTensor& b) {
  double acc = 0.0;
  for (std::size_t n = 0; n < a.size(); ++n) acc += a[n] * b[n];
  return acc;
}

ImageTensor random_rgb(int h, int w, Rng& rng, double lo = 0.0, double hi = 1.0) {
  ImageTensor img(h, w, 3, SpaceTag::Rgb);
  for (double& v : img.values()) v = rng.uniform(lo, hi);
  return img;
}

const Table3Row& find_row(const ReproduceResult& r, AttackMethod m, bool targeted) {
  for (const auto& row : r.table3) {
    if (row.method == m && row.targeted == targeted) return row;
  }
  throw std::logic_error("missing table row");
}

// 1 -------------------------------------------------------------------------
Verdict blue_patch() {
  const auto t0 = Clock::now();
  const auto rows = calibrate_blue_patch(color::kDefaultConvention);
  const double elapsed = seconds_since(t0);
  bool ok = elapsed < 1.0;
  std::string detail = std::string("convention ") + color::to_string(color::kDefaultConvention) + ":";
  for (const auto& r : rows) {
    ok = ok && r.relative_error <= 0.02;
    detail += fmt(" %s=%.2f (ref %.2f, err %.1f%%)", r.variant.c_str(), r.delta_e, r.reference,
                  100 * r.relative_error);
  }
  return {ok, detail + fmt(", %.3g s", elapsed)};
}

// 2 -------------------------------------------------------------------------
bool near_breakpoint(const color::RgbPixel& p) {
  using namespace color;
  const double t0 = kLabDelta * kLabDelta * kLabDelta;
  const XyzPixel xyz = rgb_to_xyz({srgb_decode(p.r), srgb_decode(p.g), srgb_decode(p.b)});
  for (double t : {xyz.x / WhitePoint::kXn, xyz.y / WhitePoint::kYn, xyz.z / WhitePoint::kZn}) {
    if (std::abs(t - t0) < 1e-3) return true;
  }
  for (double c : {p.r, p.g, p.b}) {
    if (std::abs(c - 0.04045) < 1e-3) return true;
  }
  return false;
}

Verdict color_math() {
  using namespace color;
  Rng rng(mix_seed(2024, 2));
  double roundtrip = 0.0;
  for (int n = 0; n < 10000; ++n) {
    const RgbPixel p{rng.uniform(), rng.uniform(), rng.uniform()};
    const RgbPixel q = lab_to_rgb(rgb_to_lab(p));
    roundtrip = std::max({roundtrip, std::abs(p.r - q.r), std::abs(p.g - q.g), std::abs(p.b - q.b)});
  }
  const LabPixel black = rgb_to_lab(RgbPixel{0, 0, 0});
  const LabPixel white = rgb_to_lab(RgbPixel{1, 1, 1});
  const bool black_ok = std::abs(black.l) < 1e-9 && std::abs(black.a) < 1e-9 && std::abs(black.b) < 1e-9;
  const bool white_ok = std::abs(white.l - 100.0) < 1e-6 && std::abs(white.a) < 1e-3 && std::abs(white.b) < 1e-3;

  double worst_jac = 0.0;
  int points = 0;
  const double h = 1e-5;
  while (points < 1000) {
    const RgbPixel p{rng.uniform(), rng.uniform(), rng.uniform()};
    if (near_breakpoint(p)) continue;
    ++points;
    const LabPixel lab = rgb_to_lab(p);
    const Mat3 j = lab_to_rgb_jacobian(lab);
    const double base[3] = {lab.l, lab.a, lab.b};
    double diff = 0.0, scale = 0.0;
    for (int col = 0; col < 3; ++col) {
      double up[3] = {base[0], base[1], base[2]}, dn[3] = {base[0], base[1], base[2]};
      up[col] += h;
      dn[col] -= h;
      const RgbPixel a = lab_to_rgb(LabPixel{up[0], up[1], up[2]});
      const RgbPixel b = lab_to_rgb(LabPixel{dn[0], dn[1], dn[2]});
      const double fd[3] = {(a.r - b.r) / (2 * h), (a.g - b.g) / (2 * h), (a.b - b.b) / (2 * h)};
      for (int row = 0; row < 3; ++row) {
        diff = std::max(diff, std::abs(j(row, col) - fd[row]));
        scale = std::max(scale, std::abs(j(row, col)));
      }
    }
    worst_jac = std::max(worst_jac, diff / scale);
  }
  return {roundtrip < 1e-6 && black_ok && white_ok && worst_jac < 1e-4,
          fmt("roundtrip max err %.2e over 10000 pixels; black (%.1e,%.1e,%.1e); white (%.9f,%.1e,%.1e); "
              "jacobian max rel err %.2e over %d points",
              roundtrip, black.l, black.a, black.b, white.l, white.a, white.b, worst_jac, points)};
}

// 3 -------------------------------------------------------------------------
Verdict gradient_integrity() {
  const Classifier model =
      Classifier::create({32, 32, 3}, Classifier::reference_architecture(10), mix_seed(2024, 3));
  Rng rng(mix_seed(2024, 4));
  double worst = 0.0;
  int checked = 0;
  for (int img = 0; img < 10; ++img) {
    const ImageTensor x_lab = rgb_to_lab(random_rgb(32, 32, rng, 0.05, 0.95));
    const LossMode mode = img % 2 ? LossMode::targeted(ClassLabel{1 + img % 10})
                                  : LossMode::untargeted(ClassLabel{1 + img % 10});
    const ImageTensor g = lab_input_gradient(model, x_lab, mode);
    const double h = 1e-4;
    for (int c = 0; c < 100; ++c) {
      const std::size_t n = rng.below(x_lab.size());
      ImageTensor up = x_lab, dn = x_lab;
      up[n] += h;
      dn[n] -= h;
      const double fd = (model.loss(lab_to_rgb(up), mode) - model.loss(lab_to_rgb(dn), mode)) / (2 * h);
      worst = std::max(worst, std::abs(g[n] - fd) / std::max({std::abs(g[n]), std::abs(fd), 1e-12}));
      ++checked;
    }
  }
  return {worst < 1e-3, fmt("max rel err %.2e over %d coordinates of 10 images", worst, checked)};
}

// 4 -------------------------------------------------------------------------
Verdict closed_form(const Classifier& model, std::span<const LabeledImage> images) {
  bool exact = true, optimal = true;
  int beaten = 0;
  Rng rng(mix_seed(2024, 5));
  for (std::size_t i = 0; i < 3; ++i) {
    const ImageTensor& x = images[i].image;
    const LossMode mode = LossMode::untargeted(images[i].label);
    const ImageTensor x_lab = rgb_to_lab(x);
    const EdgeWeightMap w = edge_weights(x);
    const double a_rgb = 4.0 / 255.0, a_lab = 2.0;

    const ImageTensor g_rgb = model.input_gradient(x, mode);
    const ImageTensor g_lab = lab_input_gradient(model, x_lab, mode);
    const ImageTensor d_inf = linearized_minimizer(g_rgb, a_rgb, LinfBall{});
    const ImageTensor d_l2 = linearized_minimizer(g_lab, a_lab, ChannelL2Ball{});
    const ImageTensor d_w = linearized_minimizer(g_lab, a_lab, WeightedChannelL2Ball{w});
    exact = exact && fgsm_step(model, x, mode, a_rgb) == clip_to_unit(x + d_inf);
    ImageTensor ca = x_lab + d_l2, cea = x_lab + d_w;
    ca.set_tag(SpaceTag::Lab);
    cea.set_tag(SpaceTag::Lab);
    exact = exact && color_aware_step(model, x_lab, mode, a_lab) == ca;
    exact = exact && color_edge_aware_step(model, x_lab, w, mode, a_lab) == cea;

    const double best_inf = inner(g_rgb, d_inf), best_l2 = inner(g_lab, d_l2), best_w = inner(g_lab, d_w);
    for (int trial = 0; trial < 10000; ++trial) {
      ImageTensor box(x.height(), x.width(), 3), ball(x.height(), x.width(), 3), wball(x.height(), x.width(), 3);
      // Half the candidates sit on the boundary of the feasible set.
      const bool boundary = trial % 2 == 0;
      for (std::size_t n = 0; n < box.size(); ++n) {
        box[n] = boundary ? (rng.uniform() < 0.5 ? -a_rgb : a_rgb) : rng.uniform(-a_rgb, a_rgb);
      }
      for (int p = 0; p < x.pixel_count(); ++p) {
        double d[3], len = 0.0;
        for (double& v : d) {
          v = rng.uniform(-1, 1);
          len += v * v;
        }
        len = std::sqrt(len);
        const double radius = boundary ? 1.0 : rng.uniform();
        for (int k = 0; k < 3; ++k) {
          ball.pixel(p)[k] = a_lab * radius * d[k] / len;
          wball.pixel(p)[k] = a_lab * w[p] * radius * d[k] / len;
        }
      }
      const bool lost = inner(g_rgb, box) < best_inf || inner(g_lab, ball) < best_l2 || inner(g_lab, wball) < best_w;
      beaten += lost;
      optimal = optimal && !lost;
    }
  }
  return {exact && optimal,
          fmt("steps equal the closed form bitwise: %s; random feasible candidates beating it: %d of 3x10000 "
              "per constraint set",
              exact ? "yes" : "no", beaten)};
}

// 5 -------------------------------------------------------------------------
Verdict constraints(const Classifier& model, std::span<const LabeledImage> images, double a_ca,
                    double a_cea) {
  double worst_ca = -1e300, worst_cea = -1e300;
  std::size_t frozen_checked = 0, frozen_moved = 0;
  for (std::size_t i = 0; i < 20; ++i) {
    ImageTensor x = images[i].image;
    if (i % 2 == 1) {
      // Paste a flat patch so that zero-weight pixels are guaranteed.
      for (int r = 0; r < 10; ++r)
        for (int c = 0; c < 10; ++c)
          for (int k = 0; k < 3; ++k) x.at(r, c, k) = x.at(0, 0, k);
    }
    const EdgeWeightMap w = edge_weights(x);
    for (auto method : {AttackMethod::ColorAware, AttackMethod::ColorEdgeAware}) {
      AttackConfig cfg;
      cfg.method = method;
      cfg.alpha = method == AttackMethod::ColorAware ? a_ca : a_cea;
      cfg.iterations = 10;
      cfg.mode = LossMode::untargeted(images[i].label);
      const auto traj = run_attack(model, x, cfg);
      for (const auto& s : traj.steps) {
        for (std::size_t p = 0; p < w.size(); ++p) {
          if (method == AttackMethod::ColorAware) {
            worst_ca = std::max(worst_ca, s.lab_step_norm[p] - cfg.alpha);
          } else {
            worst_cea = std::max(worst_cea, s.lab_step_norm[p] - cfg.alpha * w[p]);
            if (w[p] == 0.0) {
              ++frozen_checked;
              const auto a = s.image.pixel(static_cast<int>(p));
              const auto b = x.pixel(static_cast<int>(p));
              frozen_moved += !(a[0] == b[0] && a[1] == b[1] && a[2] == b[2]);
            }
          }
        }
      }
    }
  }
  const bool ok = worst_ca <= 1e-9 && worst_cea <= 1e-9 && frozen_checked > 0 && frozen_moved == 0;
  return {ok, fmt("max(step - alpha) = %.2e, max(step - alpha*w) = %.2e; zero-weight pixel-iterations "
                  "checked %zu, changed %zu",
                  worst_ca, worst_cea, frozen_checked, frozen_moved)};
}

// 6 -------------------------------------------------------------------------
Verdict misclassification(const ReproduceResult& r, double elapsed) {
  struct Need {
    AttackMethod m;
    bool targeted;
    double min_rate;
  };
  const Need needs[] = {{AttackMethod::Fgsm, false, 0.90},          {AttackMethod::ColorAware, false, 0.90},
                        {AttackMethod::ColorEdgeAware, false, 0.75}, {AttackMethod::Lbfgs, false, 0.75},
                        {AttackMethod::Fgsm, true, 0.80},            {AttackMethod::ColorAware, true, 0.80},
                        {AttackMethod::Lbfgs, true, 0.80},           {AttackMethod::ColorEdgeAware, true, 0.65}};
  bool ok = elapsed < 20 * 60;
  std::string detail;
  for (const auto& n : needs) {
    const auto& row = find_row(r, n.m, n.targeted);
    const bool hit = row.result.rate >= n.min_rate && row.result.outcomes.size() == 100;
    ok = ok && hit;
    detail += fmt("%s%s %s %.0f%% (>= %.0f%%, alpha %.4g)", detail.empty() ? "" : "; ", to_string(n.m),
                  n.targeted ? "targeted" : "untargeted", 100 * row.result.rate, 100 * n.min_rate, row.alpha);
  }
  return {ok, detail + fmt("; held-out accuracy %.1f%%; %.0f s", 100 * r.test_accuracy, elapsed)};
}

// 7 -------------------------------------------------------------------------
Verdict matched(const ReproduceResult& r) {
  double fgsm = 0, color = 0;
  for (const auto& m : r.matched) {
    if (m.method == AttackMethod::Fgsm) fgsm = m.median_lab_l1;
    if (m.method == AttackMethod::ColorAware) color = m.median_lab_l1;
  }
  return {color <= fgsm, fmt("median LAB-l1 at first flip: color %.6g, fgsm %.6g", color, fgsm)};
}

// 8 -------------------------------------------------------------------------
Verdict timing(const ReproduceResult& r) {
  double t[5] = {};
  for (const auto& x : r.timings) t[static_cast<int>(x.method)] = x.mean_seconds;
  const double fgsm = t[static_cast<int>(AttackMethod::Fgsm)];
  const double lbfgs = t[static_cast<int>(AttackMethod::Lbfgs)];
  const double ca = t[static_cast<int>(AttackMethod::ColorAware)];
  const double cea = t[static_cast<int>(AttackMethod::ColorEdgeAware)];
  const bool ok = fgsm < lbfgs && ca / fgsm <= 1.5 && (cea - ca) / ca <= 0.10;
  return {ok, fmt("fgsm %.4f s < lbfgs %.4f s; color/fgsm %.3f (<= 1.5); (color-edge - color)/color %+.3f (<= 0.10)",
                  fgsm, lbfgs, ca / fgsm, (cea - ca) / ca)};
}

// 9 -------------------------------------------------------------------------
Verdict edges(std::span<const LabeledImage> images) {
  bool constant_ok = true;
  for (int side : {3, 8, 32}) {
    for (double v : {0.0, 0.37, 1.0}) {
      const ImageTensor img(side, side + 1, 3, SpaceTag::Rgb, v);
      const PixelMap sobel = sobel_magnitude(luminance(img));
      const EdgeWeightMap w = edge_weights(img);
      for (double s : sobel.values()) constant_ok = constant_ok && s == 0.0;
      for (double s : w.values()) constant_ok = constant_ok && s == 0.0;
    }
  }
  bool range_ok = true;
  double worst_transpose = 0.0;
  Rng rng(mix_seed(2024, 9));
  std::vector<ImageTensor> inputs;
  for (const auto& s : images) inputs.push_back(s.image);
  for (int k = 0; k < 20; ++k) inputs.push_back(random_rgb(9 + k, 17, rng));
  for (const auto& img : inputs) {
    const EdgeWeightMap w = edge_weights(img);
    const auto [lo, hi] = std::minmax_element(w.values().begin(), w.values().end());
    range_ok = range_ok && *lo >= 0.0 && *hi == 1.0;
    ImageTensor t(img.width(), img.height(), 3, SpaceTag::Rgb);
    for (int i = 0; i < img.height(); ++i)
      for (int j = 0; j < img.width(); ++j)
        for (int k = 0; k < 3; ++k) t.at(j, i, k) = img.at(i, j, k);
    const PixelMap a = transpose(w), b = edge_weights(t);
    for (std::size_t n = 0; n < a.size(); ++n) worst_transpose = std::max(worst_transpose, std::abs(a[n] - b[n]));
  }
  return {constant_ok && range_ok && worst_transpose <= 1e-12,
          fmt("constant images all zero: %s; range [0,1] with max exactly 1 on %zu images: %s; "
              "transpose max diff %.1e",
              constant_ok ? "yes" : "no", inputs.size(), range_ok ? "yes" : "no", worst_transpose)};
}

// 10 ------------------------------------------------------------------------
Verdict determinism(const std::vector<std::filesystem::path>& dirs) {
  const char* files[] = {"table3_analogue.csv", "fig6_analogue.csv", "fig6_matched.csv",
                         "fig2_calibration.csv", "model_summary.csv"};
  bool ok = true;
  std::string mismatched;
  for (const char* f : files) {
    const std::string ref = slurp(dirs[0] / f);
    for (std::size_t d = 1; d < dirs.size(); ++d) {
      if (ref.empty() || slurp(dirs[d] / f) != ref) {
        ok = false;
        mismatched += std::string(" ") + f;
      }
    }
  }
  return {ok, ok ? "5 report files bitwise identical across fresh 1-thread, fresh 8-thread and cached reruns"
                 : "mismatch:" + mismatched};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks"};
  std::string work = "acceptance_work";
  std::vector<int> expected;
  std::uint64_t seed = 1;
  app.add_option("--work", work, "Scratch directory");
  app.add_option("--expected-failures", expected, "Criteria known to be unattainable")->delimiter(',');
  app.add_option("--seed", seed, "Experiment seed");
  CLI11_PARSE(app, argc, argv);

  int unexpected = 0;
  auto report = [&](int id, const std::string& name, const std::function<Verdict()>& check) {
    Verdict v;
    try {
      v = check();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const bool known = std::find(expected.begin(), expected.end(), id) != expected.end();
    std::cout << (v.pass ? "PASS" : "FAIL") << " criterion " << id << " (" << name << "): " << v.detail
              << (!v.pass && known ? " [known failure]" : "") << std::endl;
    if (!v.pass && !known) ++unexpected;
  };

  report(1, "blue-patch Delta-E calibration", blue_patch);
  report(2, "color math", color_math);
  report(3, "composed gradient integrity", gradient_integrity);

  const std::filesystem::path root(work);
  std::filesystem::remove_all(root);
  ExperimentConfig cfg;
  cfg.seed = seed;
  cfg.threads = 1;
  std::cerr << "running the experiment suite (three times, for the determinism check)" << std::endl;
  const auto t0 = Clock::now();
  ReproduceResult main_run;
  bool have_run = false;
  try {
    main_run = reproduce_all(root / "run_1thread", cfg, true);
    have_run = true;
  } catch (const std::exception& e) {
    std::cerr << "experiment suite failed: " << e.what() << std::endl;
  }
  const double elapsed = seconds_since(t0);

  std::vector<LabeledImage> eval;
  Classifier model = Classifier::create({1, 1, 3}, {{LayerKind::Dense, 1}}, 0);
  if (have_run) {
    auto corpus = load_corpus(std::filesystem::directory_iterator(root / "run_1thread" / "cache")->path() / "corpus");
    const auto [train_set, test_set] = split(corpus, cfg.train_fraction, mix_seed(cfg.seed, 3));
    model = load_model(std::filesystem::directory_iterator(root / "run_1thread" / "cache")->path() / "model.bin");
    eval = select_evaluation_set(model, test_set, cfg.eval_images, cfg.target, 1);
  }
  auto need_run = [&](auto fn) {
    return [&, fn]() -> Verdict {
      if (!have_run) return {false, "experiment suite did not complete"};
      return fn();
    };
  };

  report(4, "closed-form step optimality", need_run([&] { return closed_form(model, eval); }));
  report(5, "constraint satisfaction", need_run([&] {
           return constraints(model, eval, find_row(main_run, AttackMethod::ColorAware, false).alpha,
                              find_row(main_run, AttackMethod::ColorEdgeAware, false).alpha);
         }));
  report(6, "misclassification rates", need_run([&] { return misclassification(main_run, elapsed); }));
  report(7, "perceptual cost at matched misclassification", need_run([&] { return matched(main_run); }));
  report(8, "run time ordering", need_run([&] { return timing(main_run); }));
  report(9, "edge filter", [&] { return edges(eval); });
  report(10, "determinism", need_run([&] {
           ExperimentConfig eight = cfg;
           eight.threads = 8;
           reproduce_all(root / "run_8threads", eight, true);
           reproduce_all(root / "run_1thread", cfg, true);  // cached corpus and model
           return determinism({root / "run_1thread", root / "run_8threads"});
         }));
  std::cout << (unexpected == 0 ? "all criteria met except known failures" : "unexpected failures: " + std::to_string(unexpected))
            << std::endl;
  return unexpected;
}
