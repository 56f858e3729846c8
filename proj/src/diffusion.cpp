#include "neuroscan/diffusion.hpp"

#include <algorithm>
#include <cmath>

#include "neuroscan/error.hpp"

namespace neuroscan {

namespace {

void validate(const DiffusionParams& p) {
  if (p.kappa <= 0.0)
    raise(ErrorCode::invalid_argument, "diffusion: kappa must be > 0");
  if (p.lambda < 0.0 || p.lambda > 0.25)
    raise(ErrorCode::invalid_argument,
          "diffusion: lambda must lie in [0, 0.25]");
  if (p.iterations < 0)
    raise(ErrorCode::invalid_argument, "diffusion: iterations must be >= 0");
}

}  // namespace

double conductance(double gradient, double kappa, ConductanceKind variant) {
  if (kappa <= 0.0)
    raise(ErrorCode::invalid_argument, "conductance: kappa must be > 0");
  const double r = gradient / kappa;
  if (variant == ConductanceKind::exponential) return std::exp(-r * r);
  return 1.0 / (1.0 + r * r);
}

Image diffuse_step(const Image& img, const DiffusionParams& params) {
  validate(params);
  if (img.channels != 1)
    raise(ErrorCode::unsupported_format,
          "diffuse_step: expects a single-channel image");

  const int h = img.height;
  const int w = img.width;
  Image out(h, w, 1);
  for (int y = 0; y < h; ++y) {
    const int yn = std::max(y - 1, 0);
    const int ys = std::min(y + 1, h - 1);
    for (int x = 0; x < w; ++x) {
      const int xw = std::max(x - 1, 0);
      const int xe = std::min(x + 1, w - 1);
      const double u = img.at(y, x);
      const double dn = img.at(yn, x) - u;
      const double ds = img.at(ys, x) - u;
      const double de = img.at(y, xe) - u;
      const double dw = img.at(y, xw) - u;
      // Vertical and horizontal fluxes are paired before the final sum so
      // that image flips (which swap N/S or E/W) commute bit-exactly.
      const double flux_v =
          conductance(dn, params.kappa, params.variant) * dn +
          conductance(ds, params.kappa, params.variant) * ds;
      const double flux_h =
          conductance(de, params.kappa, params.variant) * de +
          conductance(dw, params.kappa, params.variant) * dw;
      out.at(y, x) = u + params.lambda * (flux_v + flux_h);
    }
  }
  return out;
}

Image denoise(const Image& img, const DiffusionParams& params) {
  validate(params);
  if (img.channels != 1)
    raise(ErrorCode::unsupported_format,
          "denoise: expects a single-channel image");
  Image current = img;
  for (int i = 0; i < params.iterations; ++i)
    current = diffuse_step(current, params);
  return current;
}

}  // namespace neuroscan
