#include "cea/corpus.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>

#include "cea/image_io.hpp"
#include "cea/parallel.hpp"
#include "cea/random.hpp"

namespace cea {

namespace {

using Rgb = std::array<double, 3>;

enum class Shape { Disk, Square, Triangle, HStripes, Ring, Plus, Diamond, VStripes, Checker, Saltire };
constexpr int kShapeCount = 10;

Rgb hsv_to_rgb(double hue_deg, double sat, double val) {
  const double h = std::fmod(std::fmod(hue_deg, 360.0) + 360.0, 360.0) / 60.0;
  const double c = val * sat;
  const double x = c * (1.0 - std::abs(std::fmod(h, 2.0) - 1.0));
  Rgb rgb{};
  switch (static_cast<int>(h)) {
    case 0: rgb = {c, x, 0}; break;
    case 1: rgb = {x, c, 0}; break;
    case 2: rgb = {0, c, x}; break;
    case 3: rgb = {0, x, c}; break;
    case 4: rgb = {x, 0, c}; break;
    default: rgb = {c, 0, x}; break;
  }
  const double m = val - c;
  for (double& v : rgb) v += m;
  return rgb;
}

// (dy, dx) are offsets from the shape center in units of the shape radius.
bool inside(Shape shape, double dy, double dx) {
  const double ay = std::abs(dy), ax = std::abs(dx);
  switch (shape) {
    case Shape::Disk: return dy * dy + dx * dx <= 1.0;
    case Shape::Square: return ay <= 0.8 && ax <= 0.8;
    case Shape::Triangle: return dy <= 0.8 && dy >= -1.0 && ax <= (dy + 1.0) * 0.55;
    case Shape::HStripes:
      return ay <= 0.9 && ax <= 0.9 && static_cast<int>(std::floor((dy + 1.0) * 2.5)) % 2 == 0;
    case Shape::Ring: {
      const double r2 = dy * dy + dx * dx;
      return r2 <= 1.0 && r2 >= 0.36;
    }
    case Shape::Plus: return (ay <= 0.3 && ax <= 1.0) || (ax <= 0.3 && ay <= 1.0);
    case Shape::Diamond: return ay + ax <= 1.0;
    case Shape::VStripes:
      return ay <= 0.9 && ax <= 0.9 && static_cast<int>(std::floor((dx + 1.0) * 2.5)) % 2 == 0;
    case Shape::Checker:
      return ay <= 0.9 && ax <= 0.9 &&
             (static_cast<int>(std::floor((dy + 1.0) * 2.0)) +
              static_cast<int>(std::floor((dx + 1.0) * 2.0))) % 2 == 0;
    case Shape::Saltire: return ay <= 1.0 && ax <= 1.0 && std::abs(ay - ax) <= 0.3;
  }
  return false;
}

double quantize8(double v) { return std::round(std::clamp(v, 0.0, 1.0) * 255.0) / 255.0; }

ImageTensor render(const CorpusSpec& spec, int class_index, std::uint64_t image_seed) {
  Rng rng(image_seed);
  const int h = spec.height, w = spec.width;
  ImageTensor img(h, w, 3, SpaceTag::Rgb);

  // Smooth sky: vertical blend between two muted colors.
  const Rgb sky_top = hsv_to_rgb(rng.uniform(0, 360), rng.uniform(0.05, 0.25), rng.uniform(0.55, 0.95));
  const Rgb sky_bottom = hsv_to_rgb(rng.uniform(0, 360), rng.uniform(0.05, 0.25), rng.uniform(0.55, 0.95));
  // Textured ground band with blocky noise.
  const Rgb ground = hsv_to_rgb(rng.uniform(0, 360), rng.uniform(0.05, 0.3), rng.uniform(0.25, 0.6));
  const int ground_rows = static_cast<int>(std::round(rng.uniform(0.25, 0.4) * h));
  const int horizon = h - ground_rows;
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < w; ++j) {
      for (int k = 0; k < 3; ++k) {
        double v;
        if (i < horizon) {
          const double t = horizon > 1 ? static_cast<double>(i) / (horizon - 1) : 0.0;
          v = (1.0 - t) * sky_top[k] + t * sky_bottom[k];
        } else {
          v = ground[k];
        }
        img.at(i, j, k) = v;
      }
      if (i >= horizon) {
        const double n = rng.uniform(-0.12, 0.12);
        for (int k = 0; k < 3; ++k) img.at(i, j, k) += n + rng.uniform(-0.03, 0.03);
      }
    }
  }

  // Foreground object.
  const Shape shape = static_cast<Shape>(class_index % kShapeCount);
  const double hue = 360.0 * class_index / spec.class_count + rng.uniform(-8.0, 8.0);
  const Rgb fill = hsv_to_rgb(hue, rng.uniform(0.6, 0.9), rng.uniform(0.65, 0.95));
  const double radius = rng.uniform(0.2, 0.3) * std::min(h, w);
  const double cy = rng.uniform(radius, h - radius);
  const double cx = rng.uniform(radius, w - radius);
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < w; ++j) {
      if (!inside(shape, (i + 0.5 - cy) / radius, (j + 0.5 - cx) / radius)) continue;
      for (int k = 0; k < 3; ++k) img.at(i, j, k) = fill[k] + rng.uniform(-0.02, 0.02);
    }
  }

  for (double& v : img.values()) v = quantize8(v);
  return img;
}

}  // namespace

std::vector<LabeledImage> generate_corpus(const CorpusSpec& spec, int threads) {
  if (spec.class_count <= 0 || spec.height < 3 || spec.width < 3 || spec.samples_per_class <= 0) {
    throw std::invalid_argument("corpus spec needs positive counts and at least 3x3 images");
  }
  const std::size_t total = static_cast<std::size_t>(spec.class_count) * spec.samples_per_class;
  std::vector<LabeledImage> out(total);
  parallel_for(total, threads, [&](std::size_t i) {
    const int cls = static_cast<int>(i % spec.class_count);
    out[i] = {render(spec, cls, mix_seed(spec.seed, i)), ClassLabel::from_index(cls)};
  });
  return out;
}

std::pair<std::vector<LabeledImage>, std::vector<LabeledImage>> split(
    std::span<const LabeledImage> corpus, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw std::invalid_argument("train fraction must lie strictly between 0 and 1");
  }
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < corpus.size(); ++i) by_class[corpus[i].label.value].push_back(i);

  std::vector<char> to_train(corpus.size(), 0);
  for (auto& [label, idx] : by_class) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(label)));
    for (std::size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[rng.below(i)]);
    const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * idx.size()));
    for (std::size_t i = 0; i < n_train; ++i) to_train[idx[i]] = 1;
  }
  std::pair<std::vector<LabeledImage>, std::vector<LabeledImage>> out;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    (to_train[i] ? out.first : out.second).push_back(corpus[i]);
  }
  return out;
}

std::vector<LabeledImage> ingest_external(const std::filesystem::path& path,
                                          ExternalFormat format, int class_count) {
  if (format != ExternalFormat::Cifar10Binary) throw std::invalid_argument("unknown format");
  constexpr int kSide = 32;
  constexpr std::size_t kPlane = kSide * kSide;
  constexpr std::size_t kRecord = 1 + 3 * kPlane;

  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (bytes.empty() || bytes.size() % kRecord != 0) {
    throw std::runtime_error(path.string() + ": size " + std::to_string(bytes.size()) +
                             " is not a multiple of the " + std::to_string(kRecord) +
                             "-byte record length");
  }
  std::vector<LabeledImage> out;
  out.reserve(bytes.size() / kRecord);
  for (std::size_t r = 0; r < bytes.size() / kRecord; ++r) {
    const unsigned char* rec = bytes.data() + r * kRecord;
    if (rec[0] > class_count - 1) {
      throw std::runtime_error("record " + std::to_string(r) + " has label " +
                               std::to_string(rec[0]) + " > " + std::to_string(class_count - 1));
    }
    ImageTensor img(kSide, kSide, 3, SpaceTag::Rgb);
    for (std::size_t p = 0; p < kPlane; ++p) {
      for (int k = 0; k < 3; ++k) img[p * 3 + k] = rec[1 + k * kPlane + p] / 255.0;
    }
    out.push_back({std::move(img), ClassLabel::from_index(rec[0])});
  }
  return out;
}

void save_corpus(std::span<const LabeledImage> corpus, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream manifest(dir / "labels.csv");
  if (!manifest) throw std::runtime_error("cannot write " + (dir / "labels.csv").string());
  manifest << "file,label\n";
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "%05zu.png", i);
    save_image(corpus[i].image, dir / name);
    manifest << name << ',' << corpus[i].label.value << '\n';
  }
}

std::vector<LabeledImage> load_corpus(const std::filesystem::path& dir) {
  std::ifstream manifest(dir / "labels.csv");
  if (!manifest) throw std::runtime_error("missing manifest " + (dir / "labels.csv").string());
  std::string line;
  std::getline(manifest, line);
  if (line != "file,label") throw std::runtime_error("unexpected manifest header: " + line);
  std::vector<LabeledImage> out;
  while (std::getline(manifest, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw std::runtime_error("malformed manifest line: " + line);
    const int label = std::stoi(line.substr(comma + 1));
    if (label < 1) throw std::runtime_error("labels are 1-indexed: " + line);
    ImageTensor img = load_image(dir / line.substr(0, comma));
    out.push_back({std::move(img), ClassLabel{label}});
  }
  return out;
}

}  // namespace cea
