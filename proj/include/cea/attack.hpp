#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "cea/classifier.hpp"
#include "cea/edge_filter.hpp"
#include "cea/image.hpp"
#include "cea/norms.hpp"

namespace cea {

enum class AttackMethod { Lbfgs, Fgsm, ColorAware, EdgeAwareFgsm, ColorEdgeAware };

/// CLI spelling: lbfgs, fgsm, color, edge-fgsm, color-edge.
const char* to_string(AttackMethod method);
AttackMethod parse_method(const std::string& name);
bool works_in_lab(AttackMethod method);
bool uses_edge_weights(AttackMethod method);

struct AttackConfig {
  AttackMethod method = AttackMethod::Fgsm;
  LossMode mode;
  /// Per-iteration budget: l-inf radius in RGB units for the FGSM variants,
  /// per-pixel Delta-E radius for the LAB methods, penalty weight for L-BFGS.
  double alpha = 1.0 / 255.0;
  int iterations = 1;
  /// Untargeted runs stop once p(true) < 1 - c; targeted once p(target) > c.
  std::optional<double> stop_confidence;
  color::Convention convention = color::kDefaultConvention;
};

void validate(const AttackConfig& cfg);

struct AttackStep {
  int iteration = 0;                ///< 1-based
  ImageTensor image;                ///< perturbed RGB image after clipping
  std::vector<double> probabilities;
  PerturbationNorms norms;          ///< relative to the source image
  PixelMap lab_step_norm;           ///< pre-clip per-pixel LAB step; LAB methods only
  double objective = 0.0;           ///< L-BFGS penalized objective; 0 otherwise
};

struct AttackTrajectory {
  ImageTensor source;
  std::vector<double> source_probabilities;
  std::vector<AttackStep> steps;
  ImageTensor delta_rgb;  ///< final x' - x
  ImageTensor delta_lab;  ///< final lab(x') - lab(x)

  const ImageTensor& final_image() const { return steps.empty() ? source : steps.back().image; }
};

// Constraint sets for the linearized subproblem min <<g, delta>>.
struct LinfBall {};
struct ChannelL2Ball {};
struct WeightedChannelL2Ball {
  EdgeWeightMap weights;
};
using StepConstraint = std::variant<LinfBall, ChannelL2Ball, WeightedChannelL2Ball>;

/// Exact minimizer of <<g, delta>> over the constraint set of radius alpha:
///   l-inf:     -alpha * sign(g)
///   l2,c:      -alpha * g / ||g||_{2,c}
///   weighted:  -alpha * w * g / ||g||_{2,c}
/// Pixels whose channel gradient is zero get a zero step; sign(0) = 0.
ImageTensor linearized_minimizer(const ImageTensor& g, double alpha,
                                 const StepConstraint& constraint);

/// Gradient of loss(F(lab_to_rgb(x_lab))) with respect to x_lab.
ImageTensor lab_input_gradient(const Classifier& model, const ImageTensor& x_lab,
                               const LossMode& mode,
                               color::Convention convention = color::kDefaultConvention);

// Single closed-form steps. All move along the descent direction of the loss.
ImageTensor fgsm_step(const Classifier& model, const ImageTensor& x, const LossMode& mode,
                      double alpha);
ImageTensor edge_aware_fgsm_step(const Classifier& model, const ImageTensor& x,
                                 const EdgeWeightMap& w, const LossMode& mode, double alpha);
/// Returns x_lab + delta (no gamut clipping).
ImageTensor color_aware_step(const Classifier& model, const ImageTensor& x_lab,
                             const LossMode& mode, double alpha,
                             color::Convention convention = color::kDefaultConvention);
ImageTensor color_edge_aware_step(const Classifier& model, const ImageTensor& x_lab,
                                  const EdgeWeightMap& w, const LossMode& mode, double alpha,
                                  color::Convention convention = color::kDefaultConvention);

/// Projected limited-memory quasi-Newton descent (memory 10) on
///   loss(F(x')) + (penalty / 2) ||x' - x||_2^2   subject to 0 <= x' <= 1.
/// Accepted iterates satisfy an Armijo condition, so the objective never
/// increases. Throws std::runtime_error on a non-finite objective.
AttackTrajectory lbfgs_attack(const Classifier& model, const ImageTensor& x, const LossMode& mode,
                              double penalty, int iterations,
                              std::optional<double> stop_confidence = std::nullopt,
                              color::Convention convention = color::kDefaultConvention);

/// Iterates the configured step, re-linearizing each time and clipping to
/// [0,1] after every step. Edge weights come from the source image once.
AttackTrajectory run_attack(const Classifier& model, const ImageTensor& x,
                            const AttackConfig& cfg);

/// Probability reported as "confidence": true class for untargeted runs,
/// target class for targeted runs.
double tracked_confidence(const std::vector<double>& probabilities, const LossMode& mode);

bool reached_stop(const std::vector<double>& probabilities, const LossMode& mode,
                  double stop_confidence);

}  // namespace cea
