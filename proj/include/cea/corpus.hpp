#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include "cea/labels.hpp"

namespace cea {

struct CorpusSpec {
  int class_count = 10;
  int height = 32;
  int width = 32;
  int samples_per_class = 100;
  std::uint64_t seed = 1;
};

/// Procedural labeled images. Class k is a fixed (shape, hue) pair drawn over
/// a smooth gradient sky with a noisy textured ground band; position, scale,
/// hue and background colors are jittered per image. Image i has label
/// (i mod C) + 1 and is a pure function of (spec.seed, i), so the output does
/// not depend on `threads`. Pixels are quantized to 8-bit levels so PNG
/// caching is lossless.
std::vector<LabeledImage> generate_corpus(const CorpusSpec& spec, int threads = 1);

/// Stratified split; within each class round(fraction * n) images go to the
/// training side. Both sides keep corpus order.
std::pair<std::vector<LabeledImage>, std::vector<LabeledImage>> split(
    std::span<const LabeledImage> corpus, double train_fraction, std::uint64_t seed);

enum class ExternalFormat { Cifar10Binary };

/// CIFAR-10 binary layout: per record one label byte (0..9) followed by 3072
/// bytes, channel-planar (1024 R, 1024 G, 1024 B), each plane row-major 32x32.
/// Labels become 1-indexed.
std::vector<LabeledImage> ingest_external(const std::filesystem::path& path,
                                          ExternalFormat format, int class_count = 10);

/// Directory layout: NNNNN.png files plus labels.csv with "file,label" rows.
void save_corpus(std::span<const LabeledImage> corpus, const std::filesystem::path& dir);
std::vector<LabeledImage> load_corpus(const std::filesystem::path& dir);

}  // namespace cea
