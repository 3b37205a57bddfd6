#pragma once

#include "cea/image.hpp"

namespace cea {

/// Size of a perturbation x' - x, measured two ways.
struct PerturbationNorms {
  double l1_rgb = 0.0;    ///< ||x' - x||_1 over all RGB entries
  double l2_rgb = 0.0;
  double linf_rgb = 0.0;
  double lab_l1 = 0.0;    ///< l1 of the per-pixel Delta-E map
  double lab_l2 = 0.0;
  double lab_linf = 0.0;
};

/// RGB norms are entrywise on x' - x; LAB aggregates are lp norms of
/// channel_norm(lab(x') - lab(x), 2). Throws on a shape mismatch.
PerturbationNorms perturbation_norms(const ImageTensor& x, const ImageTensor& x_prime,
                                     color::Convention convention = color::kDefaultConvention);

/// Same, with lab(x) already computed.
PerturbationNorms perturbation_norms(const ImageTensor& x, const ImageTensor& x_lab,
                                     const ImageTensor& x_prime,
                                     color::Convention convention = color::kDefaultConvention);

/// Per-pixel Delta-E between two RGB images.
PixelMap delta_e_map(const ImageTensor& x, const ImageTensor& x_prime,
                     color::Convention convention = color::kDefaultConvention);

}  // namespace cea
