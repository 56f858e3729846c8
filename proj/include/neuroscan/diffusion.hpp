#pragma once

#include "neuroscan/image.hpp"

namespace neuroscan {

enum class ConductanceKind { exponential, rational };

/// Explicit 4-neighbor Perona-Malik scheme. lambda <= 0.25 is the stability
/// bound; kappa lives on the raw 8-bit scale because denoising runs before
/// normalize().
struct DiffusionParams {
  int iterations = 10;
  double lambda = 0.14;
  double kappa = 30.0;
  ConductanceKind variant = ConductanceKind::exponential;
};

/// exp(-(g/kappa)^2) or 1 / (1 + (g/kappa)^2); both are 1 at g = 0 and
/// decrease monotonically in |g|.
double conductance(double gradient, double kappa, ConductanceKind variant);

/// One explicit step with Neumann (replicate-edge) boundaries:
/// u' = u + lambda * sum_dir c(grad_dir) * grad_dir over N/S/E/W.
Image diffuse_step(const Image& img, const DiffusionParams& params);

/// Apply diffuse_step `iterations` times; 0 iterations returns the input.
Image denoise(const Image& img, const DiffusionParams& params);

}  // namespace neuroscan
