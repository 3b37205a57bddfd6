#include "cea/image.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace cea {

namespace {

void require_positive_shape(int height, int width, int channels) {
  if (height <= 0 || width <= 0 || channels <= 0) {
    throw std::invalid_argument("image dimensions must be positive");
  }
}

double accumulate_norm(std::span<const double> v, NormOrder p) {
  double acc = 0.0;
  switch (p) {
    case NormOrder::L1:
      for (double x : v) acc += std::abs(x);
      return acc;
    case NormOrder::L2:
      for (double x : v) acc += x * x;
      return std::sqrt(acc);
    case NormOrder::Linf:
      for (double x : v) acc = std::max(acc, std::abs(x));
      return acc;
  }
  return acc;
}

void require_same_shape(const ImageTensor& a, const ImageTensor& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("tensor shape mismatch");
}

}  // namespace

ImageTensor::ImageTensor(int height, int width, int channels, SpaceTag tag, double fill)
    : height_(height), width_(width), channels_(channels), tag_(tag) {
  require_positive_shape(height, width, channels);
  data_.assign(static_cast<std::size_t>(height) * width * channels, fill);
}

ImageTensor::ImageTensor(int height, int width, int channels, std::vector<double> data,
                         SpaceTag tag)
    : height_(height), width_(width), channels_(channels), data_(std::move(data)), tag_(tag) {
  require_positive_shape(height, width, channels);
  if (data_.size() != static_cast<std::size_t>(height) * width * channels) {
    throw std::invalid_argument("tensor data length does not match h*w*c");
  }
}

PixelMap::PixelMap(int height, int width, double fill) : height_(height), width_(width) {
  require_positive_shape(height, width, 1);
  data_.assign(static_cast<std::size_t>(height) * width, fill);
}

PixelMap::PixelMap(int height, int width, std::vector<double> data)
    : height_(height), width_(width), data_(std::move(data)) {
  require_positive_shape(height, width, 1);
  if (data_.size() != static_cast<std::size_t>(height) * width) {
    throw std::invalid_argument("pixel map data length does not match h*w");
  }
}

PixelMap channel_norm(const ImageTensor& t, NormOrder p) {
  PixelMap out(t.height(), t.width());
  for (int n = 0; n < t.pixel_count(); ++n) out[n] = accumulate_norm(t.pixel(n), p);
  return out;
}

double entrywise_norm(const ImageTensor& t, NormOrder p) { return accumulate_norm(t.values(), p); }

double entrywise_norm(const PixelMap& m, NormOrder p) { return accumulate_norm(m.values(), p); }

ImageTensor broadcast_scale_channels(const ImageTensor& t, const PixelMap& m) {
  if (t.height() != m.height() || t.width() != m.width()) {
    throw std::invalid_argument("pixel map " + std::to_string(m.height()) + "x" +
                                std::to_string(m.width()) + " does not match tensor " +
                                std::to_string(t.height()) + "x" + std::to_string(t.width()));
  }
  ImageTensor out = t;
  for (int n = 0; n < t.pixel_count(); ++n) {
    for (double& v : out.pixel(n)) v *= m[n];
  }
  return out;
}

PixelMap reciprocal_or_zero(const PixelMap& m) {
  PixelMap out = m;
  for (double& v : out.values()) v = v == 0.0 ? 0.0 : 1.0 / v;
  return out;
}

ImageTensor clip_to_unit(const ImageTensor& t) {
  ImageTensor out = t;
  for (double& v : out.values()) v = std::clamp(v, 0.0, 1.0);
  out.set_tag(SpaceTag::Rgb);
  return out;
}

void validate_unit_range(const ImageTensor& t) {
  for (double v : t.values()) {
    if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
      throw std::domain_error("image value " + std::to_string(v) + " outside [0,1]");
    }
  }
}

ImageTensor operator-(const ImageTensor& a, const ImageTensor& b) {
  require_same_shape(a, b);
  ImageTensor out = a;
  for (std::size_t n = 0; n < out.size(); ++n) out[n] -= b[n];
  out.set_tag(SpaceTag::Raw);
  return out;
}

ImageTensor operator+(const ImageTensor& a, const ImageTensor& b) {
  require_same_shape(a, b);
  ImageTensor out = a;
  for (std::size_t n = 0; n < out.size(); ++n) out[n] += b[n];
  return out;
}

ImageTensor rgb_to_lab(const ImageTensor& rgb, color::Convention convention) {
  if (rgb.channels() != 3) throw std::invalid_argument("color conversion needs 3 channels");
  ImageTensor out(rgb.height(), rgb.width(), 3, SpaceTag::Lab);
  for (int n = 0; n < rgb.pixel_count(); ++n) {
    const auto in = rgb.pixel(n);
    const auto lab = color::rgb_to_lab({in[0], in[1], in[2]}, convention);
    auto px = out.pixel(n);
    px[0] = lab.l;
    px[1] = lab.a;
    px[2] = lab.b;
  }
  return out;
}

ImageTensor lab_to_rgb(const ImageTensor& lab, color::Convention convention) {
  if (lab.channels() != 3) throw std::invalid_argument("color conversion needs 3 channels");
  ImageTensor out(lab.height(), lab.width(), 3, SpaceTag::Rgb);
  for (int n = 0; n < lab.pixel_count(); ++n) {
    const auto in = lab.pixel(n);
    const auto rgb = color::lab_to_rgb({in[0], in[1], in[2]}, convention);
    auto px = out.pixel(n);
    px[0] = rgb.r;
    px[1] = rgb.g;
    px[2] = rgb.b;
  }
  return out;
}

PixelMap transpose(const PixelMap& m) {
  PixelMap out(m.width(), m.height());
  for (int i = 0; i < m.height(); ++i)
    for (int j = 0; j < m.width(); ++j) out.at(j, i) = m.at(i, j);
  return out;
}

}  // namespace cea
