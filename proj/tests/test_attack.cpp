#include <doctest.h>

#include <cmath>

#include "cea/attack.hpp"
#include "helpers.hpp"

using namespace cea;

namespace {

double inner(const ImageTensor& a, const ImageTensor& b) {
  double acc = 0.0;
  for (std::size_t n = 0; n < a.size(); ++n) acc += a[n] * b[n];
  return acc;
}

ImageTensor random_gradient(int h, int w, std::uint64_t seed) {
  ImageTensor g = test::random_image(h, w, 3, seed, -1.0, 1.0);
  g.set_tag(SpaceTag::Raw);
  // A few exact zeros: whole pixels and single entries.
  for (int k = 0; k < 3; ++k) g.at(0, 0, k) = 0.0;
  g.at(1, 1, 2) = 0.0;
  return g;
}

/// Left half flat gray, right half noise: the flat interior has zero edge weight.
ImageTensor half_flat_image(int h, int w, std::uint64_t seed) {
  ImageTensor img = test::random_image(h, w, 3, seed, 0.2, 0.8);
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w / 2; ++j)
      for (int k = 0; k < 3; ++k) img.at(i, j, k) = 0.5;
  return img;
}

Classifier zero_model(int h, int w) {
  Classifier m = Classifier::create({h, w, 3}, {{LayerKind::Dense, 3}}, 1);
  for (auto& block : m.parameters()) std::fill(block.begin(), block.end(), 0.0);
  return m;
}

}  // namespace

TEST_CASE("method names") {
  for (auto m : {AttackMethod::Lbfgs, AttackMethod::Fgsm, AttackMethod::ColorAware,
                 AttackMethod::EdgeAwareFgsm, AttackMethod::ColorEdgeAware}) {
    CHECK(parse_method(to_string(m)) == m);
  }
  CHECK_THROWS_AS(parse_method("pgd"), std::invalid_argument);
  CHECK(works_in_lab(AttackMethod::ColorEdgeAware));
  CHECK_FALSE(works_in_lab(AttackMethod::EdgeAwareFgsm));
  CHECK(uses_edge_weights(AttackMethod::EdgeAwareFgsm));
}

TEST_CASE("config validation") {
  AttackConfig cfg;
  cfg.iterations = 0;
  CHECK_THROWS_AS(validate(cfg), std::invalid_argument);
  cfg.iterations = 1;
  cfg.alpha = -1.0;
  CHECK_THROWS_AS(validate(cfg), std::invalid_argument);
  cfg.alpha = 1.0;
  cfg.stop_confidence = 1.5;
  CHECK_THROWS_AS(validate(cfg), std::invalid_argument);
}

TEST_CASE("linearized minimizer closed forms") {
  const ImageTensor g = random_gradient(4, 5, 3);
  const double alpha = 0.7;

  const ImageTensor linf = linearized_minimizer(g, alpha, LinfBall{});
  for (std::size_t n = 0; n < g.size(); ++n) {
    CHECK(linf[n] == (g[n] > 0 ? -alpha : (g[n] < 0 ? alpha : 0.0)));
  }
  CHECK(inner(g, linf) == doctest::Approx(-alpha * entrywise_norm(g, NormOrder::L1)));

  const ImageTensor l2 = linearized_minimizer(g, alpha, ChannelL2Ball{});
  const PixelMap norms = channel_norm(l2, NormOrder::L2);
  const PixelMap gnorm = channel_norm(g, NormOrder::L2);
  for (std::size_t p = 0; p < norms.size(); ++p) {
    CHECK(norms[p] == doctest::Approx(gnorm[p] > 0 ? alpha : 0.0).epsilon(1e-14));
  }

  Rng rng(4);
  PixelMap w(4, 5);
  for (double& v : w.values()) v = rng.uniform();
  w.at(2, 3) = 0.0;
  const ImageTensor weighted = linearized_minimizer(g, alpha, WeightedChannelL2Ball{w});
  const PixelMap wn = channel_norm(weighted, NormOrder::L2);
  for (std::size_t p = 0; p < wn.size(); ++p) {
    CHECK(wn[p] == doctest::Approx(gnorm[p] > 0 ? alpha * w[p] : 0.0).epsilon(1e-14));
  }
  for (int k = 0; k < 3; ++k) CHECK(weighted.at(2, 3, k) == 0.0);
  CHECK_THROWS_AS(linearized_minimizer(g, alpha, WeightedChannelL2Ball{PixelMap(2, 2)}),
                  std::invalid_argument);
}

TEST_CASE("no random feasible candidate beats the closed form") {
  const ImageTensor g = random_gradient(3, 3, 8);
  const double alpha = 1.3;
  Rng rng(9);
  PixelMap w(3, 3);
  for (double& v : w.values()) v = rng.uniform();
  const double best_linf = inner(g, linearized_minimizer(g, alpha, LinfBall{}));
  const double best_l2 = inner(g, linearized_minimizer(g, alpha, ChannelL2Ball{}));
  const double best_w = inner(g, linearized_minimizer(g, alpha, WeightedChannelL2Ball{w}));
  for (int trial = 0; trial < 10000; ++trial) {
    ImageTensor box(3, 3, 3), ball(3, 3, 3), wball(3, 3, 3);
    for (std::size_t n = 0; n < box.size(); ++n) box[n] = rng.uniform(-alpha, alpha);
    for (int p = 0; p < 9; ++p) {
      double d[3], len = 0.0;
      for (double& v : d) {
        v = rng.uniform(-1, 1);
        len += v * v;
      }
      len = std::sqrt(len);
      const double radius = rng.uniform();
      for (int k = 0; k < 3; ++k) {
        ball.pixel(p)[k] = alpha * radius * d[k] / len;
        wball.pixel(p)[k] = alpha * w[p] * radius * d[k] / len;
      }
    }
    CHECK(inner(g, box) >= best_linf);
    CHECK(inner(g, ball) >= best_l2);
    CHECK(inner(g, wball) >= best_w);
  }
}

TEST_CASE("fgsm steps") {
  const Classifier m = test::small_cnn(6, 6, 3, 2);
  const ImageTensor x = test::random_image(6, 6, 3, 3, 0.1, 0.9);
  const LossMode mode = LossMode::untargeted(ClassLabel{1});
  CHECK(fgsm_step(m, x, mode, 0.0) == clip_to_unit(x));
  const ImageTensor g = m.input_gradient(x, mode);
  CHECK(fgsm_step(m, x, mode, 0.05) == clip_to_unit(x + linearized_minimizer(g, 0.05, LinfBall{})));

  const ImageTensor zero_step = fgsm_step(zero_model(6, 6), x, mode, 0.1);
  CHECK(zero_step.data() == x.data());

  const EdgeWeightMap ones(6, 6, 1.0), zeros(6, 6, 0.0);
  CHECK(edge_aware_fgsm_step(m, x, ones, mode, 0.05) == fgsm_step(m, x, mode, 0.05));
  CHECK(edge_aware_fgsm_step(m, x, zeros, mode, 0.05).data() == x.data());
  const EdgeWeightMap w = edge_weights(x);
  const ImageTensor d = edge_aware_fgsm_step(m, x, w, mode, 0.05) - x;
  const PixelMap dn = channel_norm(d, NormOrder::Linf);
  for (std::size_t p = 0; p < dn.size(); ++p) CHECK(dn[p] <= 0.05 * w[p] + 1e-12);
}

TEST_CASE("fgsm on a linear softmax moves against the closed-form gradient") {
  Classifier m = Classifier::create({2, 2, 3}, {{LayerKind::Dense, 3}}, 5);
  const ImageTensor x = test::random_image(2, 2, 3, 6, 0.2, 0.8);
  const auto p = m.forward(x);
  const auto& params = m.parameters()[0];
  const ImageTensor stepped = fgsm_step(m, x, LossMode::untargeted(ClassLabel{2}), 0.01);
  for (std::size_t i = 0; i < x.size(); ++i) {
    double g = params[i * 3 + 1];
    for (int k = 0; k < 3; ++k) g -= p[k] * params[i * 3 + k];
    const double moved = stepped[i] - x[i];
    CHECK((g > 0 ? moved < 0 : moved > 0));
  }
}

TEST_CASE("composed lab gradient matches central differences") {
  const Classifier m = test::small_cnn(6, 6, 3, 11);
  for (auto conv : {color::Convention::Srgb, color::Convention::Linear}) {
    const ImageTensor x_lab = rgb_to_lab(test::random_image(6, 6, 3, 12, 0.1, 0.9), conv);
    const LossMode mode = LossMode::targeted(ClassLabel{2});
    const ImageTensor g = lab_input_gradient(m, x_lab, mode, conv);
    const double h = 1e-5;
    for (std::size_t n = 0; n < x_lab.size(); n += 3) {
      ImageTensor up = x_lab, dn = x_lab;
      up[n] += h;
      dn[n] -= h;
      const double fd = (m.loss(lab_to_rgb(up, conv), mode) - m.loss(lab_to_rgb(dn, conv), mode)) / (2 * h);
      CHECK(std::abs(g[n] - fd) / std::max({std::abs(g[n]), std::abs(fd), 1e-8}) < 1e-4);
    }
  }
}

TEST_CASE("color-aware steps have per-pixel Delta-E alpha") {
  const Classifier m = test::small_cnn(6, 6, 3, 13);
  const ImageTensor x_lab = rgb_to_lab(test::random_image(6, 6, 3, 14, 0.2, 0.8));
  const LossMode mode = LossMode::untargeted(ClassLabel{3});
  CHECK(color_aware_step(m, x_lab, mode, 0.0).data() == x_lab.data());
  const ImageTensor stepped = color_aware_step(m, x_lab, mode, 2.0);
  const PixelMap de = channel_norm(stepped - x_lab, NormOrder::L2);
  for (double v : de.values()) CHECK(v == doctest::Approx(2.0).epsilon(1e-9));
  const EdgeWeightMap ones(6, 6, 1.0);
  CHECK(color_edge_aware_step(m, x_lab, ones, mode, 2.0) == stepped);
  EdgeWeightMap w(6, 6, 0.5);
  w.at(1, 2) = 0.0;
  const ImageTensor ce = color_edge_aware_step(m, x_lab, w, mode, 2.0);
  for (int k = 0; k < 3; ++k) CHECK(ce.at(1, 2, k) == x_lab.at(1, 2, k));
  CHECK(channel_norm(ce - x_lab, NormOrder::L2).at(0, 0) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("steps decrease the linearized loss") {
  const Classifier m = test::small_cnn(6, 6, 3, 15);
  const ImageTensor x = test::random_image(6, 6, 3, 16, 0.2, 0.8);
  const LossMode mode = LossMode::untargeted(ClassLabel{1});
  const ImageTensor g = m.input_gradient(x, mode);
  CHECK(inner(g, fgsm_step(m, x, mode, 1e-3) - x) < 0.0);
  const ImageTensor x_lab = rgb_to_lab(x);
  const ImageTensor gl = lab_input_gradient(m, x_lab, mode);
  CHECK(inner(gl, color_aware_step(m, x_lab, mode, 1e-3) - x_lab) < 0.0);
  const double before = m.loss(x, mode);
  CHECK(m.loss(lab_to_rgb(color_aware_step(m, x_lab, mode, 1e-3)), mode) < before);
}

TEST_CASE("run_attack bookkeeping") {
  const Classifier m = test::small_cnn(8, 8, 3, 17);
  const ImageTensor x = test::random_image(8, 8, 3, 18);
  AttackConfig cfg;
  cfg.mode = LossMode::untargeted(m.predict(x));

  cfg.method = AttackMethod::Fgsm;
  cfg.alpha = 0.02;
  const auto one = run_attack(m, x, cfg);
  REQUIRE(one.steps.size() == 1);
  CHECK(one.steps[0].image == fgsm_step(m, x, cfg.mode, 0.02));
  CHECK(one.steps[0].iteration == 1);

  cfg.method = AttackMethod::ColorAware;
  cfg.alpha = 1.0;
  const auto ca = run_attack(m, x, cfg);
  const ImageTensor expect = clip_to_unit(lab_to_rgb(color_aware_step(m, rgb_to_lab(x), cfg.mode, 1.0)));
  for (std::size_t n = 0; n < x.size(); ++n) CHECK(ca.steps[0].image[n] == doctest::Approx(expect[n]).epsilon(1e-12));

  for (auto method : {AttackMethod::Fgsm, AttackMethod::EdgeAwareFgsm, AttackMethod::ColorAware,
                      AttackMethod::ColorEdgeAware, AttackMethod::Lbfgs}) {
    cfg.method = method;
    cfg.alpha = method == AttackMethod::Lbfgs ? 0.1 : (works_in_lab(method) ? 3.0 : 0.03);
    cfg.iterations = 4;
    cfg.stop_confidence.reset();
    const auto traj = run_attack(m, x, cfg);
    CHECK(traj.steps.size() == 4);
    for (const auto& s : traj.steps) CHECK_NOTHROW(validate_unit_range(s.image));
    CHECK(traj.delta_rgb == traj.final_image() - x);
    const PerturbationNorms direct = perturbation_norms(x, traj.final_image());
    CHECK(traj.steps.back().norms.lab_l1 == doctest::Approx(direct.lab_l1).epsilon(1e-9));
    CHECK(entrywise_norm(channel_norm(traj.delta_lab, NormOrder::L2), NormOrder::L1) ==
          doctest::Approx(direct.lab_l1).epsilon(1e-6));

    cfg.stop_confidence = 0.0;
    CHECK(run_attack(m, x, cfg).steps.size() == 1);
  }
}

TEST_CASE("color-edge runs respect the weighted budget and freeze flat pixels") {
  const Classifier m = test::small_cnn(8, 8, 3, 19);
  const ImageTensor x = half_flat_image(8, 8, 20);
  const EdgeWeightMap w = edge_weights(x);
  REQUIRE(w.at(4, 1) == 0.0);
  AttackConfig cfg;
  cfg.method = AttackMethod::ColorEdgeAware;
  cfg.mode = LossMode::untargeted(m.predict(x));
  cfg.alpha = 6.0;
  cfg.iterations = 6;
  const auto traj = run_attack(m, x, cfg);
  for (const auto& s : traj.steps) {
    for (std::size_t p = 0; p < w.size(); ++p) CHECK(s.lab_step_norm[p] <= cfg.alpha * w[p] + 1e-9);
    for (int i = 0; i < 8; ++i)
      for (int j = 0; j < 8; ++j)
        if (w.at(i, j) == 0.0)
          for (int k = 0; k < 3; ++k) CHECK(s.image.at(i, j, k) == x.at(i, j, k));
  }
  const PixelMap de = delta_e_map(x, traj.final_image());
  for (std::size_t p = 0; p < w.size(); ++p) CHECK(de[p] <= cfg.iterations * cfg.alpha * w[p] + 1e-6);
}

TEST_CASE("lbfgs with a huge penalty barely moves") {
  const Classifier m = test::small_cnn(6, 6, 3, 21);
  const ImageTensor x = test::random_image(6, 6, 3, 22);
  const auto traj = lbfgs_attack(m, x, LossMode::untargeted(m.predict(x)), 1e6, 10);
  CHECK(entrywise_norm(traj.final_image() - x, NormOrder::Linf) < 1e-3);
}

TEST_CASE("lbfgs objective never increases") {
  const Classifier m = test::small_cnn(6, 6, 3, 23);
  const ImageTensor x = test::random_image(6, 6, 3, 24);
  const auto traj = lbfgs_attack(m, x, LossMode::targeted(ClassLabel{2}), 0.05, 25);
  for (std::size_t k = 1; k < traj.steps.size(); ++k) {
    CHECK(traj.steps[k].objective <= traj.steps[k - 1].objective);
  }
}

TEST_CASE("lbfgs reaches the grid-search minimum of a two-pixel problem") {
  Classifier m = Classifier::create({1, 2, 1}, {{LayerKind::Dense, 2}}, 1);
  // logits: z1 = 2 x0 - x1, z2 = -x0 + 3 x1 + 0.5
  m.parameters()[0] = {2.0, -1.0, -1.0, 3.0, 0.0, 0.5};
  const ImageTensor x(1, 2, 1, std::vector<double>{0.6, 0.4}, SpaceTag::Rgb);
  const double penalty = 1.5;
  const LossMode mode = LossMode::untargeted(ClassLabel{1});
  auto objective = [&](double a, double b) {
    const ImageTensor y(1, 2, 1, std::vector<double>{a, b});
    return m.loss(y, mode) + 0.5 * penalty * ((a - 0.6) * (a - 0.6) + (b - 0.4) * (b - 0.4));
  };
  double grid_min = 1e300;
  for (int i = 0; i <= 1000; ++i)
    for (int j = 0; j <= 1000; ++j) grid_min = std::min(grid_min, objective(i * 1e-3, j * 1e-3));
  const auto traj = lbfgs_attack(m, x, mode, penalty, 50);
  const auto& end = traj.final_image();
  CHECK(objective(end[0], end[1]) <= grid_min + 1e-4);
  CHECK(traj.steps.back().objective == doctest::Approx(objective(end[0], end[1])));
}

TEST_CASE("attacks check shapes") {
  const Classifier m = test::small_cnn(6, 6, 3, 1);
  const ImageTensor wrong = test::random_image(4, 6, 3, 2);
  AttackConfig cfg;
  CHECK_THROWS_AS(run_attack(m, wrong, cfg), std::invalid_argument);
  CHECK_THROWS_AS(edge_aware_fgsm_step(m, test::random_image(6, 6, 3, 3), PixelMap(5, 5),
                                       LossMode::untargeted(ClassLabel{1}), 0.1),
                  std::invalid_argument);
}
