#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace neuroscan {

/// Row-major dense value carrier for all layer math. Arithmetic stays in
/// 64-bit floating point; checkpoints quantize to 32-bit on write.
struct Tensor {
  std::vector<size_t> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<size_t> dims);

  static size_t numel(const std::vector<size_t>& dims);

  size_t size() const { return data.size(); }
  size_t rank() const { return shape.size(); }
  size_t dim(size_t i) const { return shape.at(i); }

  double& operator[](size_t i) { return data[i]; }
  double operator[](size_t i) const { return data[i]; }

  // Rank-specific accessors; indices are not bounds-checked in release paths.
  double& at2(size_t i, size_t j) { return data[i * shape[1] + j]; }
  double at2(size_t i, size_t j) const { return data[i * shape[1] + j]; }
  double& at4(size_t n, size_t c, size_t y, size_t x) {
    return data[((n * shape[1] + c) * shape[2] + y) * shape[3] + x];
  }
  double at4(size_t n, size_t c, size_t y, size_t x) const {
    return data[((n * shape[1] + c) * shape[2] + y) * shape[3] + x];
  }

  void fill(double v);
  bool same_shape(const Tensor& other) const { return shape == other.shape; }
};

std::string shape_string(const std::vector<size_t>& dims);

/// Throws shape_error unless the tensor has exactly the given rank.
void require_rank(const Tensor& t, size_t rank, const char* what);

}  // namespace neuroscan
