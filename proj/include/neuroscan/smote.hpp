#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "neuroscan/dataset.hpp"

namespace neuroscan {

struct SmoteParams {
  size_t k_neighbors = 5;
  std::optional<size_t> target_per_class;  // empty = match the largest class
  uint64_t seed = 0;
  // Diagnostic knob: when set, every interpolation factor u is replaced by
  // this value (u = 0 turns each synthetic into a copy of its parent).
  std::optional<double> interpolation_override;
};

/// Provenance of one synthetic sample, for convexity checks and manifests.
struct SyntheticRecord {
  size_t class_index;
  size_t parent;    // index into the class's original sample list
  size_t neighbor;  // likewise
  double u;
};

struct BalanceReport {
  std::vector<size_t> added_per_class;
  std::vector<size_t> removed_per_class;
  std::vector<SyntheticRecord> synthetics;
};

/// Indices of the k nearest points to points[query] by Euclidean distance,
/// excluding the query itself; ties break toward the lower index.
std::vector<size_t> knn_indices(const std::vector<std::vector<double>>& points,
                                size_t query, size_t k);

/// x + u * (neighbor - x), elementwise.
std::vector<double> synthesize(std::span<const double> x,
                               std::span<const double> neighbor, double u);

/// Bring every class to exactly the target count: minority classes gain
/// SMOTE synthetics (seeded parent/neighbor/u draws), majority classes lose
/// seeded uniformly-random samples. Surviving originals keep their input
/// order and are bit-identical; synthetics are appended, grouped by class.
LabeledSet balance(const LabeledSet& train, const SmoteParams& params,
                   BalanceReport* report = nullptr);

}  // namespace neuroscan
