#include "cea/edge_filter.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cea {

PixelMap luminance(const ImageTensor& rgb, color::Convention convention) {
  if (rgb.channels() != 3) throw std::invalid_argument("luminance needs a 3-channel image");
  PixelMap out(rgb.height(), rgb.width());
  for (int n = 0; n < rgb.pixel_count(); ++n) {
    const auto px = rgb.pixel(n);
    out[n] = color::rgb_to_lab({px[0], px[1], px[2]}, convention).l / 100.0;
  }
  return out;
}

PixelMap sobel_magnitude(const PixelMap& m) {
  const int h = m.height();
  const int w = m.width();
  if (h < 3 || w < 3) throw std::invalid_argument("Sobel filter needs at least a 3x3 map");

  auto sample = [&](int i, int j) {
    return m.at(std::clamp(i, 0, h - 1), std::clamp(j, 0, w - 1));
  };

  PixelMap out(h, w);
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < w; ++j) {
      const double gx = (sample(i - 1, j + 1) + 2.0 * sample(i, j + 1) + sample(i + 1, j + 1)) -
                        (sample(i - 1, j - 1) + 2.0 * sample(i, j - 1) + sample(i + 1, j - 1));
      const double gy = (sample(i + 1, j - 1) + 2.0 * sample(i + 1, j) + sample(i + 1, j + 1)) -
                        (sample(i - 1, j - 1) + 2.0 * sample(i - 1, j) + sample(i - 1, j + 1));
      out.at(i, j) = std::sqrt(gx * gx + gy * gy);
    }
  }
  return out;
}

EdgeWeightMap edge_weights(const ImageTensor& rgb, color::Convention convention) {
  PixelMap magnitude = sobel_magnitude(luminance(rgb, convention));
  const double peak = entrywise_norm(magnitude, NormOrder::Linf);
  if (peak == 0.0) return PixelMap(rgb.height(), rgb.width(), 0.0);
  for (double& v : magnitude.values()) v = std::clamp(v / peak, 0.0, 1.0);
  return magnitude;
}

}  // namespace cea
