#include "cea/classifier.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "cea/parallel.hpp"
#include "cea/random.hpp"

namespace cea {

namespace {

std::size_t parameter_size(const LayerSpec& layer, const TensorShape& in) {
  switch (layer.kind) {
    case LayerKind::Conv3x3:
      return static_cast<std::size_t>(9) * in.channels * layer.size + layer.size;
    case LayerKind::Dense:
      return in.count() * layer.size + layer.size;
    case LayerKind::Relu:
    case LayerKind::MeanPool2:
      return 0;
  }
  return 0;
}

TensorShape output_shape(const LayerSpec& layer, const TensorShape& in) {
  switch (layer.kind) {
    case LayerKind::Conv3x3:
      return {in.height, in.width, layer.size};
    case LayerKind::Relu:
      return in;
    case LayerKind::MeanPool2:
      return {in.height / 2, in.width / 2, in.channels};
    case LayerKind::Dense:
      return {1, 1, layer.size};
  }
  return in;
}

void conv_forward(const TensorShape& s, int out_channels, const double* in, const double* params,
                  double* out) {
  const int h = s.height, w = s.width, ci = s.channels, co = out_channels;
  const double* weights = params;
  const double* bias = params + static_cast<std::size_t>(9) * ci * co;
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < w; ++j) {
      double* o = out + (static_cast<std::size_t>(i) * w + j) * co;
      std::copy(bias, bias + co, o);
      for (int ky = 0; ky < 3; ++ky) {
        const int ii = i + ky - 1;
        if (ii < 0 || ii >= h) continue;
        for (int kx = 0; kx < 3; ++kx) {
          const int jj = j + kx - 1;
          if (jj < 0 || jj >= w) continue;
          const double* px = in + (static_cast<std::size_t>(ii) * w + jj) * ci;
          const double* wk = weights + static_cast<std::size_t>(ky * 3 + kx) * ci * co;
          for (int c = 0; c < ci; ++c) {
            const double v = px[c];
            if (v == 0.0) continue;
            const double* wr = wk + static_cast<std::size_t>(c) * co;
            for (int o2 = 0; o2 < co; ++o2) o[o2] += v * wr[o2];
          }
        }
      }
    }
  }
}

void conv_backward(const TensorShape& s, int out_channels, const double* in, const double* params,
                   const double* grad_out, double* grad_in, double* grad_params) {
  const int h = s.height, w = s.width, ci = s.channels, co = out_channels;
  const double* weights = params;
  double* gw = grad_params;
  double* gb = grad_params != nullptr ? grad_params + static_cast<std::size_t>(9) * ci * co : nullptr;
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < w; ++j) {
      const double* g = grad_out + (static_cast<std::size_t>(i) * w + j) * co;
      if (gb != nullptr)
        for (int o = 0; o < co; ++o) gb[o] += g[o];
      for (int ky = 0; ky < 3; ++ky) {
        const int ii = i + ky - 1;
        if (ii < 0 || ii >= h) continue;
        for (int kx = 0; kx < 3; ++kx) {
          const int jj = j + kx - 1;
          if (jj < 0 || jj >= w) continue;
          const std::size_t pix = (static_cast<std::size_t>(ii) * w + jj) * ci;
          const std::size_t tap = static_cast<std::size_t>(ky * 3 + kx) * ci * co;
          for (int c = 0; c < ci; ++c) {
            const std::size_t row = tap + static_cast<std::size_t>(c) * co;
            if (grad_in != nullptr) {
              const double* wr = weights + row;
              double acc = 0.0;
              for (int o = 0; o < co; ++o) acc += wr[o] * g[o];
              grad_in[pix + c] += acc;
            }
            if (gw != nullptr) {
              const double v = in[pix + c];
              if (v == 0.0) continue;
              double* gr = gw + row;
              for (int o = 0; o < co; ++o) gr[o] += v * g[o];
            }
          }
        }
      }
    }
  }
}

void dense_forward(std::size_t n_in, int n_out, const double* in, const double* params,
                   double* out) {
  const double* bias = params + n_in * n_out;
  std::copy(bias, bias + n_out, out);
  for (std::size_t i = 0; i < n_in; ++i) {
    const double v = in[i];
    if (v == 0.0) continue;
    const double* wr = params + i * n_out;
    for (int o = 0; o < n_out; ++o) out[o] += v * wr[o];
  }
}

void dense_backward(std::size_t n_in, int n_out, const double* in, const double* params,
                    const double* grad_out, double* grad_in, double* grad_params) {
  for (std::size_t i = 0; i < n_in; ++i) {
    const double* wr = params + i * n_out;
    if (grad_in != nullptr) {
      double acc = 0.0;
      for (int o = 0; o < n_out; ++o) acc += wr[o] * grad_out[o];
      grad_in[i] += acc;
    }
    if (grad_params != nullptr) {
      const double v = in[i];
      if (v == 0.0) continue;
      double* gr = grad_params + i * n_out;
      for (int o = 0; o < n_out; ++o) gr[o] += v * grad_out[o];
    }
  }
  if (grad_params != nullptr) {
    double* gb = grad_params + n_in * n_out;
    for (int o = 0; o < n_out; ++o) gb[o] += grad_out[o];
  }
}

void pool_forward(const TensorShape& s, const double* in, double* out) {
  const int ho = s.height / 2, wo = s.width / 2, c = s.channels;
  for (int i = 0; i < ho; ++i) {
    for (int j = 0; j < wo; ++j) {
      for (int k = 0; k < c; ++k) {
        auto at = [&](int y, int x) { return in[(static_cast<std::size_t>(y) * s.width + x) * c + k]; };
        out[(static_cast<std::size_t>(i) * wo + j) * c + k] =
            0.25 * (at(2 * i, 2 * j) + at(2 * i, 2 * j + 1) + at(2 * i + 1, 2 * j) +
                    at(2 * i + 1, 2 * j + 1));
      }
    }
  }
}

void pool_backward(const TensorShape& s, const double* grad_out, double* grad_in) {
  const int ho = s.height / 2, wo = s.width / 2, c = s.channels;
  for (int i = 0; i < ho; ++i) {
    for (int j = 0; j < wo; ++j) {
      for (int k = 0; k < c; ++k) {
        const double g = 0.25 * grad_out[(static_cast<std::size_t>(i) * wo + j) * c + k];
        for (int dy = 0; dy < 2; ++dy)
          for (int dx = 0; dx < 2; ++dx)
            grad_in[(static_cast<std::size_t>(2 * i + dy) * s.width + 2 * j + dx) * c + k] += g;
      }
    }
  }
}

void write_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 4);
}

void write_u64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t read_le(std::istream& in, int bytes, const char* what) {
  unsigned char b[8] = {};
  in.read(reinterpret_cast<char*>(b), bytes);
  if (in.gcount() != bytes) {
    throw ModelFormatError(std::string("model file truncated while reading ") + what);
  }
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

constexpr char kMagic[8] = {'C', 'E', 'A', 'M', 'O', 'D', 'E', 'L'};

}  // namespace

double log_sum_exp(std::span<const double> z) {
  const double peak = *std::max_element(z.begin(), z.end());
  double acc = 0.0;
  for (double v : z) acc += std::exp(v - peak);
  return peak + std::log(acc);
}

std::vector<double> softmax(std::span<const double> z) {
  const double lse = log_sum_exp(z);
  std::vector<double> p(z.size());
  for (std::size_t k = 0; k < z.size(); ++k) p[k] = std::exp(z[k] - lse);
  return p;
}

std::vector<LayerSpec> Classifier::reference_architecture(int classes) {
  return {{LayerKind::Conv3x3, 16}, {LayerKind::Relu, 0},   {LayerKind::MeanPool2, 0},
          {LayerKind::Conv3x3, 32}, {LayerKind::Relu, 0},   {LayerKind::MeanPool2, 0},
          {LayerKind::Dense, 128},  {LayerKind::Relu, 0},   {LayerKind::Dense, classes}};
}

void Classifier::validate_architecture() const {
  if (input_.height <= 0 || input_.width <= 0 || input_.channels <= 0) {
    throw std::invalid_argument("input shape must be positive");
  }
  if (layers_.empty() || layers_.back().kind != LayerKind::Dense) {
    throw std::invalid_argument("architecture must end with a dense layer");
  }
  TensorShape s = input_;
  for (const auto& layer : layers_) {
    if ((layer.kind == LayerKind::Conv3x3 || layer.kind == LayerKind::Dense) && layer.size <= 0) {
      throw std::invalid_argument("conv/dense layer size must be positive");
    }
    if (layer.kind == LayerKind::MeanPool2 && (s.height % 2 != 0 || s.width % 2 != 0)) {
      throw std::invalid_argument("mean pooling needs even spatial dimensions");
    }
    s = output_shape(layer, s);
  }
}

Classifier Classifier::create(TensorShape input, std::vector<LayerSpec> layers,
                              std::uint64_t seed) {
  Classifier m;
  m.input_ = input;
  m.layers_ = std::move(layers);
  m.validate_architecture();
  Rng rng(seed);
  TensorShape s = input;
  for (const auto& layer : m.layers_) {
    m.shapes_.push_back(s);
    const TensorShape out = output_shape(layer, s);
    std::vector<double> block(parameter_size(layer, s), 0.0);
    if (layer.kind == LayerKind::Conv3x3 || layer.kind == LayerKind::Dense) {
      const bool conv = layer.kind == LayerKind::Conv3x3;
      const double fan_in = conv ? 9.0 * s.channels : static_cast<double>(s.count());
      const double fan_out = conv ? 9.0 * layer.size : static_cast<double>(layer.size);
      const double limit = std::sqrt(6.0 / (fan_in + fan_out));
      const std::size_t weights = block.size() - layer.size;
      for (std::size_t n = 0; n < weights; ++n) block[n] = rng.uniform(-limit, limit);
    }
    m.params_.push_back(std::move(block));
    s = out;
  }
  m.shapes_.push_back(s);
  m.classes_ = m.layers_.back().size;
  return m;
}

std::size_t Classifier::parameter_count() const {
  std::size_t n = 0;
  for (const auto& block : params_) n += block.size();
  return n;
}

ParameterSet Classifier::zero_gradients() const {
  ParameterSet g;
  g.reserve(params_.size());
  for (const auto& block : params_) g.emplace_back(block.size(), 0.0);
  return g;
}

void Classifier::check_input(const ImageTensor& x) const {
  if (x.height() != input_.height || x.width() != input_.width ||
      x.channels() != input_.channels) {
    throw std::invalid_argument("input is " + std::to_string(x.height()) + "x" +
                                std::to_string(x.width()) + "x" + std::to_string(x.channels()) +
                                ", model expects " + std::to_string(input_.height) + "x" +
                                std::to_string(input_.width) + "x" +
                                std::to_string(input_.channels));
  }
}

std::vector<double> Classifier::logits(const ImageTensor& x) const {
  check_input(x);
  std::vector<double> cur(x.values().begin(), x.values().end());
  std::vector<double> next;
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    const auto& layer = layers_[k];
    const TensorShape& s = shapes_[k];
    next.assign(shapes_[k + 1].count(), 0.0);
    switch (layer.kind) {
      case LayerKind::Conv3x3:
        conv_forward(s, layer.size, cur.data(), params_[k].data(), next.data());
        break;
      case LayerKind::Relu:
        for (std::size_t n = 0; n < cur.size(); ++n) next[n] = cur[n] > 0.0 ? cur[n] : 0.0;
        break;
      case LayerKind::MeanPool2:
        pool_forward(s, cur.data(), next.data());
        break;
      case LayerKind::Dense:
        dense_forward(s.count(), layer.size, cur.data(), params_[k].data(), next.data());
        break;
    }
    cur.swap(next);
  }
  return cur;
}

std::vector<double> Classifier::forward(const ImageTensor& x) const { return softmax(logits(x)); }

ClassLabel Classifier::predict(const ImageTensor& x) const {
  const auto z = logits(x);
  return ClassLabel::from_index(
      static_cast<int>(std::max_element(z.begin(), z.end()) - z.begin()));
}

double Classifier::loss(const ImageTensor& x, const LossMode& mode) const {
  if (mode.label.value < 1 || mode.label.value > classes_) {
    throw std::out_of_range("label " + std::to_string(mode.label.value) + " outside 1.." +
                            std::to_string(classes_));
  }
  const auto z = logits(x);
  const double ce = log_sum_exp(z) - z[mode.label.index()];
  return mode.is_targeted() ? ce : -ce;
}

ImageTensor Classifier::input_gradient(const ImageTensor& x, const LossMode& mode) const {
  return evaluate(x, mode, true).input_gradient;
}

Classifier::Evaluation Classifier::evaluate(const ImageTensor& x, const LossMode& mode,
                                            bool want_input_gradient,
                                            ParameterSet* parameter_gradients) const {
  check_input(x);
  if (mode.label.value < 1 || mode.label.value > classes_) {
    throw std::out_of_range("label " + std::to_string(mode.label.value) + " outside 1.." +
                            std::to_string(classes_));
  }
  // acts[k] is the input of layer k.
  std::vector<std::vector<double>> acts(layers_.size() + 1);
  acts[0].assign(x.values().begin(), x.values().end());
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    const auto& layer = layers_[k];
    const TensorShape& s = shapes_[k];
    auto& out = acts[k + 1];
    out.assign(shapes_[k + 1].count(), 0.0);
    const auto& in = acts[k];
    switch (layer.kind) {
      case LayerKind::Conv3x3:
        conv_forward(s, layer.size, in.data(), params_[k].data(), out.data());
        break;
      case LayerKind::Relu:
        for (std::size_t n = 0; n < in.size(); ++n) out[n] = in[n] > 0.0 ? in[n] : 0.0;
        break;
      case LayerKind::MeanPool2:
        pool_forward(s, in.data(), out.data());
        break;
      case LayerKind::Dense:
        dense_forward(s.count(), layer.size, in.data(), params_[k].data(), out.data());
        break;
    }
  }

  const auto& z = acts.back();
  Evaluation result;
  result.probabilities = softmax(z);
  const int l = mode.label.index();
  const double ce = log_sum_exp(z) - z[l];
  result.loss = mode.is_targeted() ? ce : -ce;

  // d loss / d logits
  const double sign = mode.is_targeted() ? 1.0 : -1.0;
  std::vector<double> grad(z.size());
  for (std::size_t k = 0; k < z.size(); ++k) {
    grad[k] = sign * (result.probabilities[k] - (static_cast<int>(k) == l ? 1.0 : 0.0));
  }

  const bool want_params = parameter_gradients != nullptr;
  std::vector<double> grad_in;
  for (std::size_t k = layers_.size(); k-- > 0;) {
    const auto& layer = layers_[k];
    const TensorShape& s = shapes_[k];
    const bool need_input = want_input_gradient || k > 0;
    grad_in.assign(need_input ? s.count() : 0, 0.0);
    double* gi = need_input ? grad_in.data() : nullptr;
    switch (layer.kind) {
      case LayerKind::Conv3x3:
        conv_backward(s, layer.size, acts[k].data(), params_[k].data(), grad.data(), gi,
                      want_params ? (*parameter_gradients)[k].data() : nullptr);
        break;
      case LayerKind::Relu:
        if (gi != nullptr)
          for (std::size_t n = 0; n < grad_in.size(); ++n)
            gi[n] = acts[k][n] > 0.0 ? grad[n] : 0.0;
        break;
      case LayerKind::MeanPool2:
        if (gi != nullptr) pool_backward(s, grad.data(), gi);
        break;
      case LayerKind::Dense:
        dense_backward(s.count(), layer.size, acts[k].data(), params_[k].data(), grad.data(), gi,
                       want_params ? (*parameter_gradients)[k].data() : nullptr);
        break;
    }
    if (!need_input) break;
    grad.swap(grad_in);
  }

  if (want_input_gradient) {
    result.input_gradient = ImageTensor(input_.height, input_.width, input_.channels,
                                        std::move(grad), SpaceTag::Raw);
  }
  return result;
}

double accuracy(const Classifier& model, std::span<const LabeledImage> data, int threads) {
  if (data.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::vector<char> correct(data.size(), 0);
  parallel_for(data.size(), threads, [&](std::size_t i) {
    correct[i] = model.predict(data[i].image) == data[i].label ? 1 : 0;
  });
  return static_cast<double>(std::accumulate(correct.begin(), correct.end(), 0)) / data.size();
}

TrainResult train(std::span<const LabeledImage> train_set, const TrainConfig& cfg,
                  std::span<const LabeledImage> test_set) {
  if (train_set.empty()) throw std::invalid_argument("training set is empty");
  if (cfg.epochs <= 0 || cfg.batch_size <= 0 || cfg.learning_rate < 0.0) {
    throw std::invalid_argument("epochs and batch size must be positive, learning rate >= 0");
  }
  const ImageTensor& first = train_set.front().image;
  const TensorShape input{first.height(), first.width(), first.channels()};
  int classes = 0;
  for (const auto& s : train_set) classes = std::max(classes, s.label.value);
  auto architecture =
      cfg.architecture.empty() ? Classifier::reference_architecture(classes) : cfg.architecture;

  TrainResult result{Classifier::create(input, std::move(architecture), mix_seed(cfg.seed, 0)),
                     {}, 0.0, std::numeric_limits<double>::quiet_NaN()};
  Classifier& model = result.model;
  for (const auto& s : train_set) {
    if (s.label.value < 1 || s.label.value > model.class_count()) {
      throw std::out_of_range("training label outside the model's class range");
    }
  }

  const int workers = std::max(1, cfg.threads);
  std::vector<ParameterSet> slot_grads(static_cast<std::size_t>(workers));
  for (auto& g : slot_grads) g = model.zero_gradients();
  std::vector<double> slot_loss(static_cast<std::size_t>(workers), 0.0);
  ParameterSet batch_grad = model.zero_gradients();

  std::vector<std::size_t> order(train_set.size());
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    Rng rng(mix_seed(cfg.seed, 1000 + static_cast<std::uint64_t>(epoch)));
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);

    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      for (auto& block : batch_grad) std::fill(block.begin(), block.end(), 0.0);
      for (std::size_t chunk = start; chunk < end; chunk += workers) {
        const std::size_t n = std::min<std::size_t>(workers, end - chunk);
        parallel_for(n, workers, [&](std::size_t slot) {
          for (auto& block : slot_grads[slot]) std::fill(block.begin(), block.end(), 0.0);
          const auto& sample = train_set[order[chunk + slot]];
          slot_loss[slot] = model.evaluate(sample.image, LossMode::targeted(sample.label), false,
                                           &slot_grads[slot]).loss;
        });
        for (std::size_t slot = 0; slot < n; ++slot) {
          epoch_loss += slot_loss[slot];
          for (std::size_t b = 0; b < batch_grad.size(); ++b) {
            auto& dst = batch_grad[b];
            const auto& src = slot_grads[slot][b];
            for (std::size_t q = 0; q < dst.size(); ++q) dst[q] += src[q];
          }
        }
      }
      double scale = cfg.learning_rate / static_cast<double>(end - start);
      if (cfg.max_gradient_norm > 0.0) {
        double sq = 0.0;
        for (const auto& block : batch_grad) {
          for (double v : block) sq += v * v;
        }
        const double norm = std::sqrt(sq) / static_cast<double>(end - start);
        if (norm > cfg.max_gradient_norm) scale *= cfg.max_gradient_norm / norm;
      }
      auto& params = model.parameters();
      for (std::size_t b = 0; b < params.size(); ++b) {
        for (std::size_t q = 0; q < params[b].size(); ++q) params[b][q] -= scale * batch_grad[b][q];
      }
    }
    result.epoch_loss.push_back(epoch_loss / static_cast<double>(order.size()));
  }
  result.train_accuracy = accuracy(model, train_set, workers);
  if (!test_set.empty()) result.test_accuracy = accuracy(model, test_set, workers);
  return result;
}

void save_model(const Classifier& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out.write(kMagic, sizeof(kMagic));
  write_u32(out, kModelFormatVersion);
  const auto& in = model.input_shape();
  write_u32(out, static_cast<std::uint32_t>(in.height));
  write_u32(out, static_cast<std::uint32_t>(in.width));
  write_u32(out, static_cast<std::uint32_t>(in.channels));
  write_u32(out, static_cast<std::uint32_t>(model.class_count()));
  write_u32(out, static_cast<std::uint32_t>(model.layers().size()));
  for (const auto& layer : model.layers()) {
    write_u32(out, static_cast<std::uint32_t>(layer.kind));
    write_u32(out, static_cast<std::uint32_t>(layer.size));
  }
  for (const auto& block : model.parameters()) {
    write_u64(out, block.size());
    for (double v : block) write_u64(out, std::bit_cast<std::uint64_t>(v));
  }
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

Classifier load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ModelFormatError("cannot open " + path.string());
  char magic[8] = {};
  in.read(magic, sizeof(magic));
  if (in.gcount() != static_cast<std::streamsize>(sizeof(magic))) {
    throw ModelFormatError("model file truncated while reading magic");
  }
  if (!std::equal(std::begin(magic), std::end(magic), std::begin(kMagic))) {
    throw ModelFormatError(path.string() + " is not a model file (bad magic)");
  }
  const auto version = read_le(in, 4, "version");
  if (version != kModelFormatVersion) {
    throw ModelFormatError("unsupported model format version " + std::to_string(version));
  }
  TensorShape input;
  input.height = static_cast<int>(read_le(in, 4, "input height"));
  input.width = static_cast<int>(read_le(in, 4, "input width"));
  input.channels = static_cast<int>(read_le(in, 4, "input channels"));
  const auto classes = static_cast<int>(read_le(in, 4, "class count"));
  const auto layer_count = read_le(in, 4, "layer count");
  if (layer_count == 0 || layer_count > 1024) throw ModelFormatError("implausible layer count");
  std::vector<LayerSpec> layers;
  for (std::uint64_t k = 0; k < layer_count; ++k) {
    const auto kind = read_le(in, 4, "layer kind");
    const auto size = read_le(in, 4, "layer size");
    if (kind < 1 || kind > 4) throw ModelFormatError("unknown layer kind " + std::to_string(kind));
    layers.push_back({static_cast<LayerKind>(kind), static_cast<int>(size)});
  }

  Classifier m;
  m.input_ = input;
  m.layers_ = std::move(layers);
  try {
    m.validate_architecture();
  } catch (const std::invalid_argument& e) {
    throw ModelFormatError(std::string("architecture mismatch: ") + e.what());
  }
  TensorShape s = input;
  for (const auto& layer : m.layers_) {
    m.shapes_.push_back(s);
    const std::size_t expected = parameter_size(layer, s);
    const auto count = read_le(in, 8, "parameter count");
    if (count != expected) {
      throw ModelFormatError("architecture mismatch: layer expects " + std::to_string(expected) +
                             " parameters, file has " + std::to_string(count));
    }
    std::vector<double> block(count);
    for (auto& v : block) v = std::bit_cast<double>(read_le(in, 8, "parameters"));
    m.params_.push_back(std::move(block));
    s = output_shape(layer, s);
  }
  m.shapes_.push_back(s);
  m.classes_ = m.layers_.back().size;
  if (m.classes_ != classes) throw ModelFormatError("architecture mismatch: class count");
  if (in.peek() != std::char_traits<char>::eof()) throw ModelFormatError("trailing bytes in model file");
  return m;
}

}  // namespace cea
