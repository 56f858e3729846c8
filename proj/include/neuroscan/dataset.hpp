#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "neuroscan/image.hpp"

namespace neuroscan {

struct Sample {
  Image image;
  int label = 0;
  bool synthetic = false;
};

/// A labeled image collection. class_names are sorted lexicographically and
/// define the canonical index assignment; every sample label indexes into it.
struct LabeledSet {
  std::vector<std::string> class_names;
  std::vector<Sample> samples;

  size_t num_classes() const { return class_names.size(); }
  size_t size() const { return samples.size(); }
  std::vector<size_t> class_counts() const;
};

struct ClassDistribution {
  std::vector<std::string> class_names;
  std::vector<size_t> counts;
  std::vector<double> percentages;  // exact; round to 2 decimals for display
};

/// Load `<root>/<class_name>/<image files>`; classes are the sorted
/// subdirectory names, files visited in sorted name order. Empty class
/// directories are kept (with a stderr warning).
LabeledSet scan_dataset(const std::filesystem::path& root);

/// Per class: seeded shuffle, then floor(train_fraction * n) samples to
/// train, remainder to test. Per-class streams derive from the seed and the
/// class name, so the partition is independent of class order.
std::pair<LabeledSet, LabeledSet> split_stratified(const LabeledSet& set,
                                                   double train_fraction,
                                                   uint64_t seed);

/// Seeded Fisher-Yates permutation of the sample list.
LabeledSet shuffle(const LabeledSet& set, uint64_t seed);

std::vector<double> one_hot(size_t class_index, size_t num_classes);

/// Consecutive equally sized slices (last one may be short).
std::vector<std::span<const Sample>> batches(const LabeledSet& set,
                                             size_t batch_size);

ClassDistribution distribution(const LabeledSet& set);

/// `class,count,percent` rows; percent rounded half-even to 2 decimals.
std::string distribution_csv(const ClassDistribution& dist);

/// Round half-even to `decimals` places (display convention for reports).
double round_half_even(double value, int decimals);

}  // namespace neuroscan
