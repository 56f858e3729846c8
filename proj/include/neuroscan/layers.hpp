#pragma once

#include <vector>

#include "neuroscan/image.hpp"
#include "neuroscan/tensor.hpp"

namespace neuroscan {

constexpr int conv_out_dim(int in, int kernel, int stride, int padding) {
  return (in + 2 * padding - kernel) / stride + 1;
}

/// Cross-correlation. input NCHW, weights OIKK (square kernels), bias O.
Tensor conv2d_forward(const Tensor& input, const Tensor& weights,
                      const Tensor& bias, int stride, int padding);

struct Conv2dGrads {
  Tensor input;
  Tensor weights;
  Tensor bias;
};
Conv2dGrads conv2d_backward(const Tensor& input, const Tensor& weights,
                            const Tensor& grad_out, int stride, int padding);

/// 2x2 max pooling, stride 2; odd trailing rows/columns are dropped.
/// argmax holds the flat input index that won each output cell.
struct PoolResult {
  Tensor output;
  std::vector<size_t> argmax;
};
PoolResult maxpool2x2_forward(const Tensor& input);
Tensor maxpool2x2_backward(const std::vector<size_t>& argmax,
                           const Tensor& grad_out,
                           const std::vector<size_t>& input_shape);

Tensor relu_forward(const Tensor& input);
Tensor relu_backward(const Tensor& input, const Tensor& grad_out);

/// y = x W^T + b. x is rank-1 (I) or rank-2 (S x I); w is O x I.
Tensor dense_forward(const Tensor& x, const Tensor& w, const Tensor& b);

struct DenseGrads {
  Tensor input;
  Tensor weights;
  Tensor bias;
};
DenseGrads dense_backward(const Tensor& x, const Tensor& w,
                          const Tensor& grad_out);

/// Normalization over the last axis with learned gamma/beta.
Tensor layernorm_forward(const Tensor& x, const Tensor& gamma,
                         const Tensor& beta, double eps = 1e-5);

struct LayerNormGrads {
  Tensor input;
  Tensor gamma;
  Tensor beta;
};
LayerNormGrads layernorm_backward(const Tensor& x, const Tensor& gamma,
                                  const Tensor& beta, const Tensor& grad_out,
                                  double eps = 1e-5);

/// Row softmax (max-subtracted) over the last axis of a rank-1 or rank-2
/// tensor.
Tensor softmax(const Tensor& z);
Tensor softmax_backward(const Tensor& probs, const Tensor& grad_out);

// In-place variants for hot paths that reuse large score buffers.
void softmax_inplace(Tensor& z);
void softmax_backward_inplace(const Tensor& probs, Tensor& grad_inout);

/// Mean over the batch of -sum(target * log(max(prob, 1e-12))). Rows of
/// probs must sum to 1 within 1e-9.
double cross_entropy(const Tensor& probs, const Tensor& targets);
Tensor cross_entropy_backward(const Tensor& probs, const Tensor& targets);

/// Non-overlapping patches in row-major patch-grid order, each flattened
/// row-major: (size/patch)^2 x patch^2. Input must be square, single
/// channel, and divisible by the patch size.
Tensor patchify(const Tensor& chw, int patch);
Tensor patchify(const Image& img, int patch);

}  // namespace neuroscan
