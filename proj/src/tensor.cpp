#include "neuroscan/tensor.hpp"

#include <algorithm>

#include "neuroscan/error.hpp"

namespace neuroscan {

size_t Tensor::numel(const std::vector<size_t>& dims) {
  size_t n = 1;
  for (size_t d : dims) n *= d;
  return n;
}

Tensor::Tensor(std::vector<size_t> dims) : shape(std::move(dims)) {
  if (shape.empty())
    raise(ErrorCode::shape_error, "tensor: rank must be >= 1");
  for (size_t d : shape)
    if (d == 0) raise(ErrorCode::shape_error, "tensor: zero dimension");
  data.assign(numel(shape), 0.0);
}

void Tensor::fill(double v) { std::fill(data.begin(), data.end(), v); }

std::string shape_string(const std::vector<size_t>& dims) {
  std::string s = "[";
  for (size_t i = 0; i < dims.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(dims[i]);
  }
  return s + "]";
}

void require_rank(const Tensor& t, size_t rank, const char* what) {
  if (t.rank() != rank)
    raise(ErrorCode::shape_error,
          std::string(what) + ": expected rank " + std::to_string(rank) +
              ", got shape " + shape_string(t.shape));
}

}  // namespace neuroscan
