#pragma once

#include "cea/image.hpp"

namespace cea {

/// Per-pixel edge weights in [0,1]; scales the Edge-Aware budget.
using EdgeWeightMap = PixelMap;

/// L* of each pixel divided by 100.
PixelMap luminance(const ImageTensor& rgb,
                   color::Convention convention = color::kDefaultConvention);

/// sqrt(Gx^2 + Gy^2) with the 3x3 Sobel kernels and clamp-to-edge borders.
/// Throws std::invalid_argument for maps smaller than 3x3.
PixelMap sobel_magnitude(const PixelMap& m);

/// Sobel magnitude of the luminance, divided by its maximum. A constant image
/// gives all zeros, so Edge-Aware attacks leave it untouched.
EdgeWeightMap edge_weights(const ImageTensor& rgb,
                           color::Convention convention = color::kDefaultConvention);

}  // namespace cea
