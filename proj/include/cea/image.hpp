#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "cea/color_space.hpp"

namespace cea {

/// Interpretation of the values stored in an ImageTensor.
enum class SpaceTag { Rgb, Lab, Raw };

enum class NormOrder { L1, L2, Linf };

/// h x w x c array of doubles, row-major with interleaved channels:
/// element (i, j, k) lives at ((i * width) + j) * channels + k.
///
/// Holds images, perturbations and gradients alike; the tag records which.
/// Range checks for RGB data happen in `validate_unit_range` / `clip_to_unit`,
/// never at construction.
class ImageTensor {
 public:
  ImageTensor() = default;
  ImageTensor(int height, int width, int channels, SpaceTag tag = SpaceTag::Raw,
              double fill = 0.0);
  ImageTensor(int height, int width, int channels, std::vector<double> data,
              SpaceTag tag = SpaceTag::Raw);

  int height() const { return height_; }
  int width() const { return width_; }
  int channels() const { return channels_; }
  int pixel_count() const { return height_ * width_; }
  std::size_t size() const { return data_.size(); }
  SpaceTag tag() const { return tag_; }
  void set_tag(SpaceTag tag) { tag_ = tag; }

  double& at(int i, int j, int k) { return data_[index(i, j, k)]; }
  double at(int i, int j, int k) const { return data_[index(i, j, k)]; }
  double& operator[](std::size_t n) { return data_[n]; }
  double operator[](std::size_t n) const { return data_[n]; }

  std::span<double> pixel(int p) {
    return {data_.data() + static_cast<std::size_t>(p) * channels_,
            static_cast<std::size_t>(channels_)};
  }
  std::span<const double> pixel(int p) const {
    return {data_.data() + static_cast<std::size_t>(p) * channels_,
            static_cast<std::size_t>(channels_)};
  }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool same_shape(const ImageTensor& other) const {
    return height_ == other.height_ && width_ == other.width_ && channels_ == other.channels_;
  }

  friend bool operator==(const ImageTensor&, const ImageTensor&) = default;

 private:
  std::size_t index(int i, int j, int k) const {
    return (static_cast<std::size_t>(i) * width_ + j) * channels_ + k;
  }

  int height_ = 0;
  int width_ = 0;
  int channels_ = 0;
  std::vector<double> data_;
  SpaceTag tag_ = SpaceTag::Raw;
};

/// h x w scalar field, row-major.
class PixelMap {
 public:
  PixelMap() = default;
  PixelMap(int height, int width, double fill = 0.0);
  PixelMap(int height, int width, std::vector<double> data);

  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t size() const { return data_.size(); }

  double& at(int i, int j) { return data_[static_cast<std::size_t>(i) * width_ + j]; }
  double at(int i, int j) const { return data_[static_cast<std::size_t>(i) * width_ + j]; }
  double& operator[](std::size_t n) { return data_[n]; }
  double operator[](std::size_t n) const { return data_[n]; }

  std::span<const double> values() const { return data_; }
  std::span<double> values() { return data_; }

  friend bool operator==(const PixelMap&, const PixelMap&) = default;

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<double> data_;
};

/// Per-pixel lp norm across the channel dimension.
PixelMap channel_norm(const ImageTensor& t, NormOrder p);

/// lp norm of the flattened tensor.
double entrywise_norm(const ImageTensor& t, NormOrder p);
double entrywise_norm(const PixelMap& m, NormOrder p);

/// out(i,j,k) = t(i,j,k) * m(i,j). Throws std::invalid_argument on a size mismatch.
ImageTensor broadcast_scale_channels(const ImageTensor& t, const PixelMap& m);

/// 1/v with 1/0 := 0. A zero-norm pixel therefore scales to the zero vector.
PixelMap reciprocal_or_zero(const PixelMap& m);

/// Clamp every entry to [0,1]; the result is tagged RGB.
ImageTensor clip_to_unit(const ImageTensor& t);

/// Throws std::domain_error when any entry is non-finite or outside [0,1].
void validate_unit_range(const ImageTensor& t);

ImageTensor operator-(const ImageTensor& a, const ImageTensor& b);
ImageTensor operator+(const ImageTensor& a, const ImageTensor& b);

/// Whole-image color conversions (3-channel). Outputs are tagged LAB / RGB;
/// rgb conversion back from LAB is not clipped.
ImageTensor rgb_to_lab(const ImageTensor& rgb,
                       color::Convention convention = color::kDefaultConvention);
ImageTensor lab_to_rgb(const ImageTensor& lab,
                       color::Convention convention = color::kDefaultConvention);

PixelMap transpose(const PixelMap& m);

}  // namespace cea
