#include "neuroscan/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <numeric>

#include "neuroscan/error.hpp"
#include "neuroscan/rng.hpp"

namespace neuroscan {

namespace fs = std::filesystem;

std::vector<size_t> LabeledSet::class_counts() const {
  std::vector<size_t> counts(class_names.size(), 0);
  for (const Sample& s : samples) counts.at(static_cast<size_t>(s.label))++;
  return counts;
}

namespace {

bool has_image_extension(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

}  // namespace

LabeledSet scan_dataset(const fs::path& root) {
  if (!fs::exists(root) || !fs::is_directory(root))
    raise(ErrorCode::dataset_layout,
          "dataset root is not a directory: " + root.string());

  std::vector<std::string> class_names;
  for (const auto& entry : fs::directory_iterator(root))
    if (entry.is_directory())
      class_names.push_back(entry.path().filename().string());
  std::sort(class_names.begin(), class_names.end());
  if (class_names.empty())
    raise(ErrorCode::dataset_layout,
          "dataset root contains no class directories: " + root.string());

  LabeledSet set;
  set.class_names = class_names;
  for (size_t ci = 0; ci < class_names.size(); ++ci) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(root / class_names[ci]))
      if (entry.is_regular_file() && has_image_extension(entry.path()))
        files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    if (files.empty())
      std::cerr << "warning: class '" << class_names[ci]
                << "' has no image files\n";
    for (const fs::path& file : files) {
      Sample s;
      s.image = load_image(file);
      s.label = static_cast<int>(ci);
      set.samples.push_back(std::move(s));
    }
  }
  return set;
}

std::pair<LabeledSet, LabeledSet> split_stratified(const LabeledSet& set,
                                                   double train_fraction,
                                                   uint64_t seed) {
  if (set.samples.empty())
    raise(ErrorCode::invalid_argument, "split_stratified: empty set");
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    raise(ErrorCode::invalid_argument,
          "split_stratified: train_fraction must lie in (0, 1)");

  std::vector<std::vector<size_t>> per_class(set.num_classes());
  for (size_t i = 0; i < set.samples.size(); ++i)
    per_class.at(static_cast<size_t>(set.samples[i].label)).push_back(i);
  for (const auto& idx : per_class)
    if (idx.empty())
      raise(ErrorCode::invalid_argument,
            "split_stratified: every class needs at least one sample");

  LabeledSet train, test;
  train.class_names = set.class_names;
  test.class_names = set.class_names;
  for (size_t ci = 0; ci < per_class.size(); ++ci) {
    std::vector<size_t>& idx = per_class[ci];
    SplitMix64 rng(derive_seed(seed, "class/" + set.class_names[ci]));
    fisher_yates(idx, rng);
    const size_t n_train = static_cast<size_t>(
        std::floor(train_fraction * static_cast<double>(idx.size())));
    for (size_t k = 0; k < idx.size(); ++k) {
      (k < n_train ? train : test).samples.push_back(set.samples[idx[k]]);
    }
  }
  return {std::move(train), std::move(test)};
}

LabeledSet shuffle(const LabeledSet& set, uint64_t seed) {
  LabeledSet out = set;
  SplitMix64 rng(seed);
  fisher_yates(out.samples, rng);
  return out;
}

std::vector<double> one_hot(size_t class_index, size_t num_classes) {
  if (class_index >= num_classes)
    raise(ErrorCode::invalid_argument, "one_hot: class index out of range");
  std::vector<double> v(num_classes, 0.0);
  v[class_index] = 1.0;
  return v;
}

std::vector<std::span<const Sample>> batches(const LabeledSet& set,
                                             size_t batch_size) {
  if (batch_size == 0)
    raise(ErrorCode::invalid_argument, "batches: batch_size must be >= 1");
  std::vector<std::span<const Sample>> out;
  for (size_t start = 0; start < set.samples.size(); start += batch_size) {
    const size_t len = std::min(batch_size, set.samples.size() - start);
    out.emplace_back(set.samples.data() + start, len);
  }
  return out;
}

ClassDistribution distribution(const LabeledSet& set) {
  if (set.samples.empty())
    raise(ErrorCode::invalid_argument, "distribution: empty set");
  ClassDistribution dist;
  dist.class_names = set.class_names;
  dist.counts = set.class_counts();
  const double total = static_cast<double>(set.samples.size());
  for (size_t c : dist.counts)
    dist.percentages.push_back(100.0 * static_cast<double>(c) / total);
  return dist;
}

double round_half_even(double value, int decimals) {
  const double scale = std::pow(10.0, decimals);
  const double scaled = value * scale;
  double floor_v = std::floor(scaled);
  double diff = scaled - floor_v;
  double rounded;
  if (diff > 0.5) {
    rounded = floor_v + 1.0;
  } else if (diff < 0.5) {
    rounded = floor_v;
  } else {
    rounded = (std::fmod(floor_v, 2.0) == 0.0) ? floor_v : floor_v + 1.0;
  }
  return rounded / scale;
}

std::string distribution_csv(const ClassDistribution& dist) {
  std::string out = "class,count,percent\n";
  char line[256];
  for (size_t i = 0; i < dist.class_names.size(); ++i) {
    std::snprintf(line, sizeof(line), "%s,%zu,%.2f\n",
                  dist.class_names[i].c_str(), dist.counts[i],
                  round_half_even(dist.percentages[i], 2));
    out += line;
  }
  return out;
}

}  // namespace neuroscan
