#pragma once

#include <filesystem>
#include <string>

#include "cea/classifier.hpp"
#include "cea/image.hpp"
#include "cea/random.hpp"

namespace cea::test {

inline ImageTensor random_image(int h, int w, int c, std::uint64_t seed, double lo = 0.0,
                                double hi = 1.0) {
  Rng rng(seed);
  ImageTensor img(h, w, c, SpaceTag::Rgb);
  for (double& v : img.values()) v = rng.uniform(lo, hi);
  return img;
}

/// Fresh scratch directory below the build tree.
inline std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::path(CEA_TEST_TMP) / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline Classifier small_cnn(int h, int w, int classes, std::uint64_t seed) {
  return Classifier::create({h, w, 3},
                            {{LayerKind::Conv3x3, 4},
                             {LayerKind::Relu, 0},
                             {LayerKind::MeanPool2, 0},
                             {LayerKind::Dense, 8},
                             {LayerKind::Relu, 0},
                             {LayerKind::Dense, classes}},
                            seed);
}

}  // namespace cea::test
