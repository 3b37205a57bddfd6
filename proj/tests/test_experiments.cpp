#include <doctest.h>

#include "cea/experiments.hpp"
#include "helpers.hpp"

using namespace cea;

TEST_CASE("blue patch calibration under the pinned convention") {
  const auto rows = calibrate_blue_patch(color::kDefaultConvention);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].delta_e == doctest::Approx(3.04).epsilon(0.02));
  CHECK(rows[1].delta_e == doctest::Approx(17.23).epsilon(0.02));
  CHECK(rows[0].relative_error < 0.02);
  // Linear RGB is far off on every variant.
  for (const auto& r : calibrate_blue_patch(color::Convention::Linear)) CHECK(r.relative_error > 0.5);
}

TEST_CASE("alpha grids") {
  CHECK(alpha_grid(AttackMethod::ColorAware) == std::vector<double>{0.5, 1, 2, 4, 8, 16});
  CHECK(alpha_grid(AttackMethod::Fgsm).size() == 5);
  CHECK(alpha_grid(AttackMethod::Fgsm).front() == 1.0 / 255.0);
}

TEST_CASE("alpha selection prefers the smallest budget on ties") {
  // The zero model is never fooled, so every candidate ties at 0%.
  Classifier m = Classifier::create({4, 4, 3}, {{LayerKind::Dense, 2}}, 1);
  for (auto& block : m.parameters()) std::fill(block.begin(), block.end(), 0.0);
  std::vector<LabeledImage> images{{test::random_image(4, 4, 3, 1), ClassLabel{1}}};
  AttackConfig cfg;
  cfg.method = AttackMethod::Fgsm;
  const AlphaChoice c = select_alpha(m, images, cfg, 1);
  CHECK(c.alpha == 1.0 / 255.0);
  CHECK(c.rate == 0.0);
  cfg.method = AttackMethod::Lbfgs;
  CHECK(select_alpha(m, images, cfg, 1).alpha == 10.0);
}

TEST_CASE("evaluation set keeps correct, non-target images in order") {
  const Classifier m = test::small_cnn(4, 4, 3, 2);
  std::vector<LabeledImage> pool;
  for (std::uint64_t s = 0; s < 30; ++s) {
    const ImageTensor img = test::random_image(4, 4, 3, s);
    const ClassLabel pred = m.predict(img);
    pool.push_back({img, s % 3 == 0 ? ClassLabel{pred.value % 3 + 1} : pred});
  }
  std::size_t usable = 0;
  for (std::size_t i = 0; i < pool.size(); ++i) usable += i % 3 != 0 && !(pool[i].label == ClassLabel{1});
  const auto eval = select_evaluation_set(m, pool, usable, ClassLabel{1}, 2);
  CHECK(eval.size() == usable);
  for (const auto& s : eval) {
    CHECK(m.predict(s.image) == s.label);
    CHECK_FALSE(s.label == ClassLabel{1});
  }
  CHECK_THROWS(select_evaluation_set(m, pool, usable + 1, ClassLabel{1}, 1));
}
