#include "cea/attack.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace cea {

namespace {

double sign_of(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

void require_rgb_image(const Classifier& model, const ImageTensor& x) {
  const auto& s = model.input_shape();
  if (x.height() != s.height || x.width() != s.width || x.channels() != s.channels) {
    throw std::invalid_argument("image shape does not match the model input");
  }
}

void require_weights_match(const ImageTensor& x, const EdgeWeightMap& w) {
  if (w.height() != x.height() || w.width() != x.width()) {
    throw std::invalid_argument("edge weight map does not match the image size");
  }
}

AttackStep make_step(const Classifier& model, int iteration, ImageTensor image,
                     const ImageTensor& source, const ImageTensor& source_lab,
                     color::Convention convention) {
  AttackStep step;
  step.iteration = iteration;
  step.probabilities = model.forward(image);
  step.norms = perturbation_norms(source, source_lab, image, convention);
  step.image = std::move(image);
  return step;
}

void finish(AttackTrajectory& t, const ImageTensor& source_lab, color::Convention convention) {
  const ImageTensor& last = t.final_image();
  t.delta_rgb = last - t.source;
  if (t.source.channels() == 3) t.delta_lab = rgb_to_lab(last, convention) - source_lab;
}

struct LabState {
  ImageTensor rgb;
  ImageTensor lab;
};

/// Applies a LAB step. Pixels with a zero step keep their RGB and LAB values
/// bitwise; moved pixels are converted, clipped and converted back.
void apply_lab_step(LabState& state, const ImageTensor& step, color::Convention convention) {
  for (int n = 0; n < step.pixel_count(); ++n) {
    const auto d = step.pixel(n);
    if (d[0] == 0.0 && d[1] == 0.0 && d[2] == 0.0) continue;
    auto lab = state.lab.pixel(n);
    const color::LabPixel moved{lab[0] + d[0], lab[1] + d[1], lab[2] + d[2]};
    const color::RgbPixel raw = color::lab_to_rgb(moved, convention);
    const color::RgbPixel clipped{std::clamp(raw.r, 0.0, 1.0), std::clamp(raw.g, 0.0, 1.0),
                                  std::clamp(raw.b, 0.0, 1.0)};
    auto rgb = state.rgb.pixel(n);
    rgb[0] = clipped.r;
    rgb[1] = clipped.g;
    rgb[2] = clipped.b;
    const color::LabPixel back = color::rgb_to_lab(clipped, convention);
    lab[0] = back.l;
    lab[1] = back.a;
    lab[2] = back.b;
  }
}

}  // namespace

const char* to_string(AttackMethod method) {
  switch (method) {
    case AttackMethod::Lbfgs: return "lbfgs";
    case AttackMethod::Fgsm: return "fgsm";
    case AttackMethod::ColorAware: return "color";
    case AttackMethod::EdgeAwareFgsm: return "edge-fgsm";
    case AttackMethod::ColorEdgeAware: return "color-edge";
  }
  return "?";
}

AttackMethod parse_method(const std::string& name) {
  for (auto m : {AttackMethod::Lbfgs, AttackMethod::Fgsm, AttackMethod::ColorAware,
                 AttackMethod::EdgeAwareFgsm, AttackMethod::ColorEdgeAware}) {
    if (name == to_string(m)) return m;
  }
  throw std::invalid_argument("unknown attack method '" + name + "'");
}

bool works_in_lab(AttackMethod method) {
  return method == AttackMethod::ColorAware || method == AttackMethod::ColorEdgeAware;
}

bool uses_edge_weights(AttackMethod method) {
  return method == AttackMethod::EdgeAwareFgsm || method == AttackMethod::ColorEdgeAware;
}

void validate(const AttackConfig& cfg) {
  if (!(cfg.alpha >= 0.0) || !std::isfinite(cfg.alpha)) {
    throw std::invalid_argument("alpha must be a finite non-negative number");
  }
  if (cfg.iterations < 1) throw std::invalid_argument("iterations must be at least 1");
  if (cfg.stop_confidence && !(*cfg.stop_confidence >= 0.0 && *cfg.stop_confidence <= 1.0)) {
    throw std::invalid_argument("stop confidence must lie in [0,1]");
  }
}

double tracked_confidence(const std::vector<double>& probabilities, const LossMode& mode) {
  return probabilities.at(static_cast<std::size_t>(mode.label.index()));
}

bool reached_stop(const std::vector<double>& probabilities, const LossMode& mode,
                  double stop_confidence) {
  const double p = tracked_confidence(probabilities, mode);
  return mode.is_targeted() ? p > stop_confidence : p < 1.0 - stop_confidence;
}

ImageTensor linearized_minimizer(const ImageTensor& g, double alpha,
                                 const StepConstraint& constraint) {
  if (std::holds_alternative<LinfBall>(constraint)) {
    ImageTensor out = g;
    for (double& v : out.values()) v = -alpha * sign_of(v);
    out.set_tag(SpaceTag::Raw);
    return out;
  }
  PixelMap scale = reciprocal_or_zero(channel_norm(g, NormOrder::L2));
  if (const auto* weighted = std::get_if<WeightedChannelL2Ball>(&constraint)) {
    require_weights_match(g, weighted->weights);
    for (std::size_t n = 0; n < scale.size(); ++n) scale[n] *= weighted->weights[n];
  }
  for (double& v : scale.values()) v *= -alpha;
  ImageTensor out = broadcast_scale_channels(g, scale);
  out.set_tag(SpaceTag::Raw);
  return out;
}

ImageTensor lab_input_gradient(const Classifier& model, const ImageTensor& x_lab,
                               const LossMode& mode, color::Convention convention) {
  const ImageTensor rgb = lab_to_rgb(x_lab, convention);
  const ImageTensor g_rgb = model.input_gradient(rgb, mode);
  ImageTensor g_lab(x_lab.height(), x_lab.width(), 3, SpaceTag::Raw);
  for (int n = 0; n < x_lab.pixel_count(); ++n) {
    const auto lab = x_lab.pixel(n);
    const color::Mat3 jac = color::lab_to_rgb_jacobian({lab[0], lab[1], lab[2]}, convention);
    const auto g = g_rgb.pixel(n);
    auto out = g_lab.pixel(n);
    for (int col = 0; col < 3; ++col) {
      out[col] = jac(0, col) * g[0] + jac(1, col) * g[1] + jac(2, col) * g[2];
    }
  }
  return g_lab;
}

ImageTensor fgsm_step(const Classifier& model, const ImageTensor& x, const LossMode& mode,
                      double alpha) {
  require_rgb_image(model, x);
  const ImageTensor g = model.input_gradient(x, mode);
  return clip_to_unit(x + linearized_minimizer(g, alpha, LinfBall{}));
}

ImageTensor edge_aware_fgsm_step(const Classifier& model, const ImageTensor& x,
                                 const EdgeWeightMap& w, const LossMode& mode, double alpha) {
  require_rgb_image(model, x);
  require_weights_match(x, w);
  const ImageTensor g = model.input_gradient(x, mode);
  return clip_to_unit(x + broadcast_scale_channels(linearized_minimizer(g, alpha, LinfBall{}), w));
}

ImageTensor color_aware_step(const Classifier& model, const ImageTensor& x_lab,
                             const LossMode& mode, double alpha, color::Convention convention) {
  require_rgb_image(model, x_lab);
  ImageTensor out = x_lab + linearized_minimizer(lab_input_gradient(model, x_lab, mode, convention),
                                                 alpha, ChannelL2Ball{});
  out.set_tag(SpaceTag::Lab);
  return out;
}

ImageTensor color_edge_aware_step(const Classifier& model, const ImageTensor& x_lab,
                                  const EdgeWeightMap& w, const LossMode& mode, double alpha,
                                  color::Convention convention) {
  require_rgb_image(model, x_lab);
  require_weights_match(x_lab, w);
  ImageTensor out = x_lab + linearized_minimizer(lab_input_gradient(model, x_lab, mode, convention),
                                                 alpha, WeightedChannelL2Ball{w});
  out.set_tag(SpaceTag::Lab);
  return out;
}

AttackTrajectory lbfgs_attack(const Classifier& model, const ImageTensor& x, const LossMode& mode,
                              double penalty, int iterations, std::optional<double> stop_confidence,
                              color::Convention convention) {
  require_rgb_image(model, x);
  if (iterations < 1) throw std::invalid_argument("iterations must be at least 1");
  constexpr std::size_t kMemory = 10;
  constexpr double kArmijo = 1e-4;
  constexpr int kMaxTrials = 30;

  AttackTrajectory traj;
  traj.source = x;
  traj.source_probabilities = model.forward(x);
  const ImageTensor source_lab =
      x.channels() == 3 ? rgb_to_lab(x, convention) : ImageTensor(x.height(), x.width(), 1);

  struct Point {
    ImageTensor x;
    double f = 0.0;
    std::vector<double> grad;
  };
  auto evaluate = [&](ImageTensor candidate) {
    auto e = model.evaluate(candidate, mode, true);
    double dist2 = 0.0;
    std::vector<double> grad(candidate.size());
    for (std::size_t n = 0; n < candidate.size(); ++n) {
      const double d = candidate[n] - x[n];
      dist2 += d * d;
      grad[n] = e.input_gradient[n] + penalty * d;
    }
    Point p{std::move(candidate), e.loss + 0.5 * penalty * dist2, std::move(grad)};
    if (!std::isfinite(p.f)) throw std::runtime_error("L-BFGS objective is not finite");
    return p;
  };

  // Projected backtracking along `dir`; returns the accepted point if any.
  auto line_search = [&](const Point& cur, const std::vector<double>& dir) -> std::optional<Point> {
    double t = 1.0;
    for (int trial = 0; trial < kMaxTrials; ++trial, t *= 0.5) {
      ImageTensor candidate = cur.x;
      double decrease = 0.0;
      bool moved = false;
      for (std::size_t n = 0; n < candidate.size(); ++n) {
        const double v = std::clamp(cur.x[n] + t * dir[n], 0.0, 1.0);
        moved = moved || v != cur.x[n];
        decrease += cur.grad[n] * (v - cur.x[n]);
        candidate[n] = v;
      }
      if (!moved) return std::nullopt;
      if (decrease >= 0.0) continue;
      Point next = evaluate(std::move(candidate));
      if (next.f <= cur.f + kArmijo * decrease) return next;
    }
    return std::nullopt;
  };

  Point cur = evaluate(x);
  std::deque<std::pair<std::vector<double>, std::vector<double>>> memory;  // (s, y)
  for (int it = 1; it <= iterations; ++it) {
    // Two-loop recursion: dir = -H * grad.
    std::vector<double> q = cur.grad;
    std::vector<double> alphas(memory.size());
    for (std::size_t k = memory.size(); k-- > 0;) {
      const auto& [s, y] = memory[k];
      alphas[k] = dot(s, q) / dot(y, s);
      for (std::size_t n = 0; n < q.size(); ++n) q[n] -= alphas[k] * y[n];
    }
    if (!memory.empty()) {
      const auto& [s, y] = memory.back();
      const double gamma = dot(s, y) / dot(y, y);
      for (double& v : q) v *= gamma;
    } else {
      // Without curvature pairs the first trial step has unit l2 length.
      const double norm = std::sqrt(dot(q, q));
      if (norm > 0.0) {
        for (double& v : q) v /= norm;
      }
    }
    for (std::size_t k = 0; k < memory.size(); ++k) {
      const auto& [s, y] = memory[k];
      const double beta = dot(y, q) / dot(y, s);
      for (std::size_t n = 0; n < q.size(); ++n) q[n] += (alphas[k] - beta) * s[n];
    }
    for (double& v : q) v = -v;

    std::optional<Point> next;
    if (dot(q, cur.grad) < 0.0) next = line_search(cur, q);
    if (!next) {
      std::vector<double> steepest(cur.grad.size());
      const double norm = std::sqrt(dot(cur.grad, cur.grad));
      for (std::size_t n = 0; n < steepest.size(); ++n) {
        steepest[n] = norm > 0.0 ? -cur.grad[n] / norm : 0.0;
      }
      next = line_search(cur, steepest);
      memory.clear();
    }

    if (next) {
      std::vector<double> s(cur.x.size()), y(cur.x.size());
      for (std::size_t n = 0; n < s.size(); ++n) {
        s[n] = next->x[n] - cur.x[n];
        y[n] = next->grad[n] - cur.grad[n];
      }
      if (dot(s, y) > 1e-12 * std::sqrt(dot(s, s) * dot(y, y))) {
        memory.emplace_back(std::move(s), std::move(y));
        if (memory.size() > kMemory) memory.pop_front();
      }
      cur = std::move(*next);
    }

    AttackStep step = make_step(model, it, cur.x, x, source_lab, convention);
    step.objective = cur.f;
    step.image.set_tag(SpaceTag::Rgb);
    const bool stop = stop_confidence && reached_stop(step.probabilities, mode, *stop_confidence);
    traj.steps.push_back(std::move(step));
    if (stop) break;
  }
  finish(traj, source_lab, convention);
  return traj;
}

AttackTrajectory run_attack(const Classifier& model, const ImageTensor& x,
                            const AttackConfig& cfg) {
  validate(cfg);
  require_rgb_image(model, x);
  if (cfg.method == AttackMethod::Lbfgs) {
    return lbfgs_attack(model, x, cfg.mode, cfg.alpha, cfg.iterations, cfg.stop_confidence,
                        cfg.convention);
  }
  if (x.channels() != 3) throw std::invalid_argument("attacks need 3-channel RGB images");

  AttackTrajectory traj;
  traj.source = x;
  traj.source_probabilities = model.forward(x);
  const ImageTensor source_lab = rgb_to_lab(x, cfg.convention);
  EdgeWeightMap weights;
  if (uses_edge_weights(cfg.method)) weights = edge_weights(x, cfg.convention);

  LabState state{x, source_lab};
  state.rgb.set_tag(SpaceTag::Rgb);
  for (int it = 1; it <= cfg.iterations; ++it) {
    PixelMap lab_step_norm;
    switch (cfg.method) {
      case AttackMethod::Fgsm:
        state.rgb = fgsm_step(model, state.rgb, cfg.mode, cfg.alpha);
        break;
      case AttackMethod::EdgeAwareFgsm:
        state.rgb = edge_aware_fgsm_step(model, state.rgb, weights, cfg.mode, cfg.alpha);
        break;
      case AttackMethod::ColorAware:
      case AttackMethod::ColorEdgeAware: {
        const ImageTensor g = lab_input_gradient(model, state.lab, cfg.mode, cfg.convention);
        const ImageTensor step =
            cfg.method == AttackMethod::ColorAware
                ? linearized_minimizer(g, cfg.alpha, ChannelL2Ball{})
                : linearized_minimizer(g, cfg.alpha, WeightedChannelL2Ball{weights});
        lab_step_norm = channel_norm(step, NormOrder::L2);
        apply_lab_step(state, step, cfg.convention);
        break;
      }
      case AttackMethod::Lbfgs:
        break;
    }
    AttackStep step = make_step(model, it, state.rgb, x, source_lab, cfg.convention);
    step.lab_step_norm = std::move(lab_step_norm);
    const bool stop =
        cfg.stop_confidence && reached_stop(step.probabilities, cfg.mode, *cfg.stop_confidence);
    traj.steps.push_back(std::move(step));
    if (stop) break;
  }
  finish(traj, source_lab, cfg.convention);
  return traj;
}

}  // namespace cea
