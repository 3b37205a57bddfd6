#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cea/image.hpp"
#include "cea/labels.hpp"

namespace cea {

/// Which loss the attacks minimize.
///
/// Untargeted: loss = -CE(F(x), true label), so minimizing drives the true
/// class probability down. Targeted: loss = CE(F(x), target), so minimizing
/// drives the target probability up.
struct LossMode {
  enum class Kind { Untargeted, Targeted };

  Kind kind = Kind::Untargeted;
  ClassLabel label;

  static LossMode untargeted(ClassLabel true_label) { return {Kind::Untargeted, true_label}; }
  static LossMode targeted(ClassLabel target) { return {Kind::Targeted, target}; }

  bool is_targeted() const { return kind == Kind::Targeted; }
};

enum class LayerKind : std::uint32_t {
  Conv3x3 = 1,    ///< 3x3 convolution, stride 1, zero "same" padding; size = output channels
  Relu = 2,
  MeanPool2 = 3,  ///< 2x2 average pooling, stride 2
  Dense = 4,      ///< fully connected on the flattened input; size = output units
};

struct LayerSpec {
  LayerKind kind = LayerKind::Dense;
  int size = 0;

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

struct TensorShape {
  int height = 0;
  int width = 0;
  int channels = 0;

  std::size_t count() const { return static_cast<std::size_t>(height) * width * channels; }
  friend bool operator==(const TensorShape&, const TensorShape&) = default;
};

struct ModelFormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Per-layer flat parameter blocks (weights followed by biases).
using ParameterSet = std::vector<std::vector<double>>;

/// Softmax classifier F = softmax(Z(x)) with hand-written backpropagation.
///
/// Parameter layouts: Conv3x3 weights are [ky][kx][in][out] then [out] biases;
/// Dense weights are [in][out] then [out] biases. Relu and MeanPool2 have none.
class Classifier {
 public:
  struct Evaluation {
    double loss = 0.0;
    std::vector<double> probabilities;
    ImageTensor input_gradient;  ///< empty unless requested
  };

  /// Builds a model with uniform(-s, s) weights, s = sqrt(6 / (fan_in + fan_out)),
  /// and zero biases. The last layer must be Dense; its size is the class count.
  static Classifier create(TensorShape input, std::vector<LayerSpec> layers, std::uint64_t seed);

  /// conv16-relu-pool-conv32-relu-pool-dense128-relu-dense(classes).
  static std::vector<LayerSpec> reference_architecture(int classes);

  const TensorShape& input_shape() const { return input_; }
  int class_count() const { return classes_; }
  const std::vector<LayerSpec>& layers() const { return layers_; }
  const ParameterSet& parameters() const { return params_; }
  ParameterSet& parameters() { return params_; }
  std::size_t parameter_count() const;

  std::vector<double> logits(const ImageTensor& x) const;
  std::vector<double> forward(const ImageTensor& x) const;
  ClassLabel predict(const ImageTensor& x) const;
  double loss(const ImageTensor& x, const LossMode& mode) const;

  /// d loss / d x, tagged RAW.
  ImageTensor input_gradient(const ImageTensor& x, const LossMode& mode) const;

  /// One forward/backward pass. When `parameter_gradients` is non-null the
  /// parameter gradients are ADDED to it (it must match parameters() in shape).
  Evaluation evaluate(const ImageTensor& x, const LossMode& mode, bool want_input_gradient,
                      ParameterSet* parameter_gradients = nullptr) const;

  ParameterSet zero_gradients() const;

  friend bool operator==(const Classifier&, const Classifier&) = default;

 private:
  Classifier() = default;
  void check_input(const ImageTensor& x) const;
  void validate_architecture() const;

  TensorShape input_;
  std::vector<LayerSpec> layers_;
  std::vector<TensorShape> shapes_;  // shapes_[k] = input shape of layer k; back() = logits
  ParameterSet params_;
  int classes_ = 0;

  friend Classifier load_model(const std::filesystem::path& path);
};

double log_sum_exp(std::span<const double> z);
std::vector<double> softmax(std::span<const double> z);

struct TrainConfig {
  int epochs = 12;
  int batch_size = 8;
  double learning_rate = 0.03;
  /// The mean batch gradient is rescaled to at most this global l2 norm; 0 disables.
  double max_gradient_norm = 5.0;
  std::uint64_t seed = 1;
  int threads = 1;
  std::vector<LayerSpec> architecture;  ///< empty -> reference_architecture
};

struct TrainResult {
  Classifier model;
  std::vector<double> epoch_loss;  ///< mean training cross entropy per epoch
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;      ///< NaN when no test set is given
};

/// Minibatch SGD on cross entropy. Results are bitwise reproducible for a
/// given seed regardless of cfg.threads: per-sample gradients are summed in
/// sample order.
TrainResult train(std::span<const LabeledImage> train_set, const TrainConfig& cfg,
                  std::span<const LabeledImage> test_set = {});

double accuracy(const Classifier& model, std::span<const LabeledImage> data, int threads = 1);

/// File layout (all integers little-endian):
///   "CEAMODEL"  8-byte magic
///   u32 format version (1)
///   u32 input height, width, channels, u32 class count, u32 layer count
///   per layer: u32 kind, u32 size
///   per layer: u64 parameter count, then that many IEEE-754 binary64 values
inline constexpr std::uint32_t kModelFormatVersion = 1;
void save_model(const Classifier& model, const std::filesystem::path& path);
Classifier load_model(const std::filesystem::path& path);

}  // namespace cea
