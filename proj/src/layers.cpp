#include "neuroscan/layers.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>

#include "neuroscan/error.hpp"

namespace neuroscan {

Tensor conv2d_forward(const Tensor& input, const Tensor& weights,
                      const Tensor& bias, int stride, int padding) {
  require_rank(input, 4, "conv2d: input");
  require_rank(weights, 4, "conv2d: weights");
  require_rank(bias, 1, "conv2d: bias");
  if (stride < 1 || padding < 0)
    raise(ErrorCode::invalid_argument, "conv2d: bad stride/padding");
  const int n = static_cast<int>(input.dim(0));
  const int ic = static_cast<int>(input.dim(1));
  const int ih = static_cast<int>(input.dim(2));
  const int iw = static_cast<int>(input.dim(3));
  const int oc = static_cast<int>(weights.dim(0));
  const int k = static_cast<int>(weights.dim(2));
  if (static_cast<int>(weights.dim(1)) != ic)
    raise(ErrorCode::shape_error, "conv2d: channel mismatch between input " +
                                      shape_string(input.shape) +
                                      " and weights " +
                                      shape_string(weights.shape));
  if (static_cast<int>(weights.dim(3)) != k)
    raise(ErrorCode::shape_error, "conv2d: kernels must be square");
  if (static_cast<int>(bias.dim(0)) != oc)
    raise(ErrorCode::shape_error, "conv2d: bias size mismatch");
  const int oh = conv_out_dim(ih, k, stride, padding);
  const int ow = conv_out_dim(iw, k, stride, padding);
  if (oh < 1 || ow < 1)
    raise(ErrorCode::shape_error, "conv2d: output dims collapse to zero");

  Tensor out({static_cast<size_t>(n), static_cast<size_t>(oc),
              static_cast<size_t>(oh), static_cast<size_t>(ow)});
  for (int b = 0; b < n; ++b)
    for (int o = 0; o < oc; ++o)
      for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x) {
          double acc = bias[static_cast<size_t>(o)];
          for (int i = 0; i < ic; ++i)
            for (int ky = 0; ky < k; ++ky) {
              const int sy = y * stride - padding + ky;
              if (sy < 0 || sy >= ih) continue;
              for (int kx = 0; kx < k; ++kx) {
                const int sx = x * stride - padding + kx;
                if (sx < 0 || sx >= iw) continue;
                acc += input.at4(b, i, sy, sx) * weights.at4(o, i, ky, kx);
              }
            }
          out.at4(b, o, y, x) = acc;
        }
  return out;
}

Conv2dGrads conv2d_backward(const Tensor& input, const Tensor& weights,
                            const Tensor& grad_out, int stride, int padding) {
  require_rank(grad_out, 4, "conv2d backward: grad_out");
  const int n = static_cast<int>(input.dim(0));
  const int ic = static_cast<int>(input.dim(1));
  const int ih = static_cast<int>(input.dim(2));
  const int iw = static_cast<int>(input.dim(3));
  const int oc = static_cast<int>(weights.dim(0));
  const int k = static_cast<int>(weights.dim(2));
  const int oh = static_cast<int>(grad_out.dim(2));
  const int ow = static_cast<int>(grad_out.dim(3));
  if (static_cast<int>(grad_out.dim(0)) != n ||
      static_cast<int>(grad_out.dim(1)) != oc ||
      oh != conv_out_dim(ih, k, stride, padding) ||
      ow != conv_out_dim(iw, k, stride, padding))
    raise(ErrorCode::shape_error, "conv2d backward: grad_out shape " +
                                      shape_string(grad_out.shape) +
                                      " does not match forward");

  Conv2dGrads g{Tensor(input.shape), Tensor(weights.shape),
                Tensor({static_cast<size_t>(oc)})};
  for (int b = 0; b < n; ++b)
    for (int o = 0; o < oc; ++o)
      for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x) {
          const double go = grad_out.at4(b, o, y, x);
          g.bias[static_cast<size_t>(o)] += go;
          for (int i = 0; i < ic; ++i)
            for (int ky = 0; ky < k; ++ky) {
              const int sy = y * stride - padding + ky;
              if (sy < 0 || sy >= ih) continue;
              for (int kx = 0; kx < k; ++kx) {
                const int sx = x * stride - padding + kx;
                if (sx < 0 || sx >= iw) continue;
                g.weights.at4(o, i, ky, kx) += go * input.at4(b, i, sy, sx);
                g.input.at4(b, i, sy, sx) += go * weights.at4(o, i, ky, kx);
              }
            }
        }
  return g;
}

PoolResult maxpool2x2_forward(const Tensor& input) {
  require_rank(input, 4, "maxpool2x2: input");
  const size_t n = input.dim(0), c = input.dim(1);
  const size_t oh = input.dim(2) / 2, ow = input.dim(3) / 2;
  if (oh == 0 || ow == 0)
    raise(ErrorCode::shape_error, "maxpool2x2: input smaller than window");

  PoolResult r{Tensor({n, c, oh, ow}), {}};
  r.argmax.resize(r.output.size());
  size_t oi = 0;
  for (size_t b = 0; b < n; ++b)
    for (size_t ch = 0; ch < c; ++ch)
      for (size_t y = 0; y < oh; ++y)
        for (size_t x = 0; x < ow; ++x, ++oi) {
          double best = -1e308;
          size_t best_idx = 0;
          for (size_t dy = 0; dy < 2; ++dy)
            for (size_t dx = 0; dx < 2; ++dx) {
              const size_t sy = 2 * y + dy, sx = 2 * x + dx;
              const size_t flat =
                  ((b * c + ch) * input.dim(2) + sy) * input.dim(3) + sx;
              if (input[flat] > best) {
                best = input[flat];
                best_idx = flat;
              }
            }
          r.output[oi] = best;
          r.argmax[oi] = best_idx;
        }
  return r;
}

Tensor maxpool2x2_backward(const std::vector<size_t>& argmax,
                           const Tensor& grad_out,
                           const std::vector<size_t>& input_shape) {
  if (argmax.size() != grad_out.size())
    raise(ErrorCode::shape_error, "maxpool2x2 backward: argmax size mismatch");
  Tensor g(input_shape);
  for (size_t i = 0; i < grad_out.size(); ++i) g[argmax[i]] += grad_out[i];
  return g;
}

Tensor relu_forward(const Tensor& input) {
  Tensor out = input;
  for (double& v : out.data) v = std::max(v, 0.0);
  return out;
}

Tensor relu_backward(const Tensor& input, const Tensor& grad_out) {
  if (!input.same_shape(grad_out))
    raise(ErrorCode::shape_error, "relu backward: shape mismatch");
  Tensor g = grad_out;
  for (size_t i = 0; i < g.size(); ++i)
    if (input[i] <= 0.0) g[i] = 0.0;
  return g;
}

namespace {

// Rows-view of a rank-1 (one row) or rank-2 tensor.
struct Rows {
  size_t rows, cols;
};

Rows as_rows(const Tensor& t, const char* what) {
  if (t.rank() == 1) return {1, t.dim(0)};
  if (t.rank() == 2) return {t.dim(0), t.dim(1)};
  raise(ErrorCode::shape_error,
        std::string(what) + ": expected rank 1 or 2, got " +
            shape_string(t.shape));
}

}  // namespace

Tensor dense_forward(const Tensor& x, const Tensor& w, const Tensor& b) {
  require_rank(w, 2, "dense: weights");
  require_rank(b, 1, "dense: bias");
  const Rows rx = as_rows(x, "dense: input");
  const size_t out_dim = w.dim(0), in_dim = w.dim(1);
  if (rx.cols != in_dim || b.dim(0) != out_dim)
    raise(ErrorCode::shape_error,
          "dense: input " + shape_string(x.shape) + " incompatible with weights " +
              shape_string(w.shape));

  Tensor out(x.rank() == 1 ? std::vector<size_t>{out_dim}
                           : std::vector<size_t>{rx.rows, out_dim});
  if (rx.rows == 1) {
    // Four-lane dot products: independent accumulator chains pipeline where
    // a single running sum would serialize.
    const double* xi = x.data.data();
    for (size_t o = 0; o < out_dim; ++o) {
      const double* wo = w.data.data() + o * in_dim;
      double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;
      size_t i = 0;
      for (; i + 4 <= in_dim; i += 4) {
        a0 += xi[i] * wo[i];
        a1 += xi[i + 1] * wo[i + 1];
        a2 += xi[i + 2] * wo[i + 2];
        a3 += xi[i + 3] * wo[i + 3];
      }
      double acc = (a0 + a1) + (a2 + a3);
      for (; i < in_dim; ++i) acc += xi[i] * wo[i];
      out.data[o] = b[o] + acc;
    }
    return out;
  }

  // Row batches: transpose the weights once, then accumulate rank-1 updates
  // along the contiguous output axis (no reduction chains).
  Tensor wt({in_dim, out_dim});
  for (size_t o = 0; o < out_dim; ++o)
    for (size_t i = 0; i < in_dim; ++i) wt.data[i * out_dim + o] = w.data[o * in_dim + i];
  for (size_t s = 0; s < rx.rows; ++s) {
    const double* xi = x.data.data() + s * in_dim;
    double* yo = out.data.data() + s * out_dim;
    for (size_t o = 0; o < out_dim; ++o) yo[o] = b[o];
    for (size_t i = 0; i < in_dim; ++i) {
      const double xv = xi[i];
      const double* wi = wt.data.data() + i * out_dim;
      for (size_t o = 0; o < out_dim; ++o) yo[o] += xv * wi[o];
    }
  }
  return out;
}

DenseGrads dense_backward(const Tensor& x, const Tensor& w,
                          const Tensor& grad_out) {
  const Rows rx = as_rows(x, "dense backward: input");
  const Rows rg = as_rows(grad_out, "dense backward: grad_out");
  const size_t out_dim = w.dim(0), in_dim = w.dim(1);
  if (rg.rows != rx.rows || rg.cols != out_dim || rx.cols != in_dim)
    raise(ErrorCode::shape_error, "dense backward: shape mismatch");

  DenseGrads g{Tensor(x.shape), Tensor(w.shape), Tensor({out_dim})};
  for (size_t s = 0; s < rx.rows; ++s) {
    const double* xi = x.data.data() + s * in_dim;
    const double* go = grad_out.data.data() + s * out_dim;
    double* gx = g.input.data.data() + s * in_dim;
    for (size_t o = 0; o < out_dim; ++o) {
      const double goo = go[o];
      const double* wo = w.data.data() + o * in_dim;
      double* gw = g.weights.data.data() + o * in_dim;
      g.bias[o] += goo;
      for (size_t i = 0; i < in_dim; ++i) {
        gw[i] += goo * xi[i];
        gx[i] += goo * wo[i];
      }
    }
  }
  return g;
}

Tensor layernorm_forward(const Tensor& x, const Tensor& gamma,
                         const Tensor& beta, double eps) {
  const Rows rx = as_rows(x, "layernorm: input");
  if (gamma.size() != rx.cols || beta.size() != rx.cols)
    raise(ErrorCode::shape_error, "layernorm: gamma/beta size mismatch");
  Tensor out(x.shape);
  const size_t e = rx.cols;
  for (size_t s = 0; s < rx.rows; ++s) {
    const double* xi = x.data.data() + s * e;
    double* yo = out.data.data() + s * e;
    double mean = 0.0;
    for (size_t i = 0; i < e; ++i) mean += xi[i];
    mean /= static_cast<double>(e);
    double var = 0.0;
    for (size_t i = 0; i < e; ++i) var += (xi[i] - mean) * (xi[i] - mean);
    var /= static_cast<double>(e);
    const double inv = 1.0 / std::sqrt(var + eps);
    for (size_t i = 0; i < e; ++i)
      yo[i] = gamma[i] * ((xi[i] - mean) * inv) + beta[i];
  }
  return out;
}

LayerNormGrads layernorm_backward(const Tensor& x, const Tensor& gamma,
                                  const Tensor& beta, const Tensor& grad_out,
                                  double eps) {
  (void)beta;
  const Rows rx = as_rows(x, "layernorm backward: input");
  if (!x.same_shape(grad_out))
    raise(ErrorCode::shape_error, "layernorm backward: shape mismatch");
  const size_t e = rx.cols;
  LayerNormGrads g{Tensor(x.shape), Tensor(gamma.shape), Tensor(gamma.shape)};
  for (size_t s = 0; s < rx.rows; ++s) {
    const double* xi = x.data.data() + s * e;
    const double* go = grad_out.data.data() + s * e;
    double* gx = g.input.data.data() + s * e;
    double mean = 0.0;
    for (size_t i = 0; i < e; ++i) mean += xi[i];
    mean /= static_cast<double>(e);
    double var = 0.0;
    for (size_t i = 0; i < e; ++i) var += (xi[i] - mean) * (xi[i] - mean);
    var /= static_cast<double>(e);
    const double inv = 1.0 / std::sqrt(var + eps);

    // dxhat = go * gamma; dx = inv * (dxhat - mean(dxhat) - xhat * mean(dxhat * xhat))
    double sum_dxhat = 0.0, sum_dxhat_xhat = 0.0;
    for (size_t i = 0; i < e; ++i) {
      const double xhat = (xi[i] - mean) * inv;
      const double dxhat = go[i] * gamma[i];
      sum_dxhat += dxhat;
      sum_dxhat_xhat += dxhat * xhat;
      g.gamma[i] += go[i] * xhat;
      g.beta[i] += go[i];
    }
    const double inv_e = 1.0 / static_cast<double>(e);
    for (size_t i = 0; i < e; ++i) {
      const double xhat = (xi[i] - mean) * inv;
      const double dxhat = go[i] * gamma[i];
      gx[i] = inv * (dxhat - inv_e * sum_dxhat - xhat * inv_e * sum_dxhat_xhat);
    }
  }
  return g;
}

namespace {

// Straight-line exp for the softmax hot loop (libm's exp is an opaque call
// the vectorizer cannot touch). Magic-number rounding splits x into
// k*ln2 + r with |r| <= ln2/2, a degree-13 Taylor polynomial evaluates
// exp(r) to ~1 ulp, and the 2^k scale is assembled in the exponent field.
inline double fast_exp(double x) {
  constexpr double kLog2E = 1.4426950408889634074;
  constexpr double kLn2Hi = 6.93147180369123816490e-01;
  constexpr double kLn2Lo = 1.90821492927058770002e-10;
  constexpr double kShift = 6755399441055744.0;  // 1.5 * 2^52
  x = std::clamp(x, -708.0, 708.0);
  const double t = x * kLog2E + kShift;
  const double k = t - kShift;
  const double r = (x - k * kLn2Hi) - k * kLn2Lo;

  double p = 1.0 / 6227020800.0;  // 1/13!
  p = p * r + 1.0 / 479001600.0;
  p = p * r + 1.0 / 39916800.0;
  p = p * r + 1.0 / 3628800.0;
  p = p * r + 1.0 / 362880.0;
  p = p * r + 1.0 / 40320.0;
  p = p * r + 1.0 / 5040.0;
  p = p * r + 1.0 / 720.0;
  p = p * r + 1.0 / 120.0;
  p = p * r + 1.0 / 24.0;
  p = p * r + 1.0 / 6.0;
  p = p * r + 0.5;
  p = p * r + 1.0;
  p = p * r + 1.0;

  uint64_t bits;
  std::memcpy(&bits, &t, 8);
  const int64_t ki = static_cast<int32_t>(bits & 0xFFFFFFFFu);
  const uint64_t scale_bits = static_cast<uint64_t>(ki + 1023) << 52;
  double scale;
  std::memcpy(&scale, &scale_bits, 8);
  return p * scale;
}

}  // namespace

namespace {

void softmax_rows(const double* z, double* p, size_t rows, size_t cols) {
  for (size_t s = 0; s < rows; ++s) {
    const double* zi = z + s * cols;
    double* po = p + s * cols;
    double m = zi[0];
    for (size_t i = 1; i < cols; ++i) m = std::max(m, zi[i]);
    for (size_t i = 0; i < cols; ++i) po[i] = fast_exp(zi[i] - m);
    double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;
    size_t i = 0;
    for (; i + 4 <= cols; i += 4) {
      a0 += po[i];
      a1 += po[i + 1];
      a2 += po[i + 2];
      a3 += po[i + 3];
    }
    double sum = (a0 + a1) + (a2 + a3);
    for (; i < cols; ++i) sum += po[i];
    const double inv = 1.0 / sum;
    for (size_t i2 = 0; i2 < cols; ++i2) po[i2] *= inv;
  }
}

}  // namespace

Tensor softmax(const Tensor& z) {
  const Rows rz = as_rows(z, "softmax: input");
  Tensor out(z.shape);
  softmax_rows(z.data.data(), out.data.data(), rz.rows, rz.cols);
  return out;
}

void softmax_inplace(Tensor& z) {
  const Rows rz = as_rows(z, "softmax: input");
  softmax_rows(z.data.data(), z.data.data(), rz.rows, rz.cols);
}

namespace {

void softmax_backward_rows(const double* probs, const double* go, double* gz,
                           size_t rows, size_t cols) {
  for (size_t s = 0; s < rows; ++s) {
    const double* p = probs + s * cols;
    const double* g = go + s * cols;
    double* out = gz + s * cols;
    double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;
    size_t i = 0;
    for (; i + 4 <= cols; i += 4) {
      a0 += g[i] * p[i];
      a1 += g[i + 1] * p[i + 1];
      a2 += g[i + 2] * p[i + 2];
      a3 += g[i + 3] * p[i + 3];
    }
    double dot = (a0 + a1) + (a2 + a3);
    for (; i < cols; ++i) dot += g[i] * p[i];
    for (size_t i2 = 0; i2 < cols; ++i2) out[i2] = p[i2] * (g[i2] - dot);
  }
}

}  // namespace

Tensor softmax_backward(const Tensor& probs, const Tensor& grad_out) {
  if (!probs.same_shape(grad_out))
    raise(ErrorCode::shape_error, "softmax backward: shape mismatch");
  const Rows rp = as_rows(probs, "softmax backward: probs");
  Tensor g(probs.shape);
  softmax_backward_rows(probs.data.data(), grad_out.data.data(), g.data.data(),
                        rp.rows, rp.cols);
  return g;
}

void softmax_backward_inplace(const Tensor& probs, Tensor& grad_inout) {
  if (!probs.same_shape(grad_inout))
    raise(ErrorCode::shape_error, "softmax backward: shape mismatch");
  const Rows rp = as_rows(probs, "softmax backward: probs");
  softmax_backward_rows(probs.data.data(), grad_inout.data.data(),
                        grad_inout.data.data(), rp.rows, rp.cols);
}

namespace {

constexpr double kProbFloor = 1e-12;

void check_prob_rows(const Tensor& probs, const Tensor& targets) {
  if (!probs.same_shape(targets))
    raise(ErrorCode::shape_error, "cross_entropy: shape mismatch");
  const Rows rp = as_rows(probs, "cross_entropy: probs");
  for (size_t s = 0; s < rp.rows; ++s) {
    double sum = 0.0;
    for (size_t i = 0; i < rp.cols; ++i) sum += probs.data[s * rp.cols + i];
    if (std::abs(sum - 1.0) > 1e-9)
      raise(ErrorCode::invalid_argument,
            "cross_entropy: probability row does not sum to 1");
  }
}

}  // namespace

double cross_entropy(const Tensor& probs, const Tensor& targets) {
  check_prob_rows(probs, targets);
  const Rows rp = as_rows(probs, "cross_entropy: probs");
  double total = 0.0;
  for (size_t s = 0; s < rp.rows; ++s)
    for (size_t i = 0; i < rp.cols; ++i) {
      const size_t k = s * rp.cols + i;
      if (targets[k] != 0.0)
        total -= targets[k] * std::log(std::max(probs[k], kProbFloor));
    }
  return total / static_cast<double>(rp.rows);
}

Tensor cross_entropy_backward(const Tensor& probs, const Tensor& targets) {
  check_prob_rows(probs, targets);
  const Rows rp = as_rows(probs, "cross_entropy: probs");
  Tensor g(probs.shape);
  const double inv_batch = 1.0 / static_cast<double>(rp.rows);
  for (size_t k = 0; k < probs.size(); ++k) {
    if (targets[k] == 0.0) continue;
    const double p = std::max(probs[k], kProbFloor);
    // The floor clamp is active below 1e-12; the loss is flat there.
    g[k] = (probs[k] < kProbFloor) ? 0.0 : -targets[k] / p * inv_batch;
  }
  return g;
}

Tensor patchify(const Tensor& chw, int patch) {
  require_rank(chw, 3, "patchify: input");
  if (chw.dim(0) != 1)
    raise(ErrorCode::unsupported_format, "patchify: expects a single channel");
  const int h = static_cast<int>(chw.dim(1));
  const int w = static_cast<int>(chw.dim(2));
  if (h != w)
    raise(ErrorCode::invalid_argument, "patchify: image must be square");
  if (patch < 1 || h % patch != 0)
    raise(ErrorCode::invalid_argument,
          "patchify: image size must be divisible by the patch size");
  const int grid = h / patch;
  Tensor out({static_cast<size_t>(grid) * grid,
              static_cast<size_t>(patch) * patch});
  size_t row = 0;
  for (int py = 0; py < grid; ++py)
    for (int px = 0; px < grid; ++px, ++row) {
      size_t col = 0;
      for (int dy = 0; dy < patch; ++dy)
        for (int dx = 0; dx < patch; ++dx, ++col)
          out.at2(row, col) =
              chw.data[static_cast<size_t>(py * patch + dy) * w +
                       (px * patch + dx)];
    }
  return out;
}

Tensor patchify(const Image& img, int patch) {
  if (img.channels != 1)
    raise(ErrorCode::unsupported_format, "patchify: expects a single channel");
  Tensor chw({1, static_cast<size_t>(img.height), static_cast<size_t>(img.width)});
  chw.data = img.data;
  return patchify(chw, patch);
}

}  // namespace neuroscan
