#include "neuroscan/smote.hpp"

#include <algorithm>
#include <iostream>
#include <map>
#include <numeric>

#include "neuroscan/error.hpp"
#include "neuroscan/rng.hpp"

namespace neuroscan {

std::vector<size_t> knn_indices(const std::vector<std::vector<double>>& points,
                                size_t query, size_t k) {
  if (query >= points.size())
    raise(ErrorCode::invalid_argument, "knn_indices: query index out of range");
  if (k == 0 || k >= points.size())
    raise(ErrorCode::invalid_argument,
          "knn_indices: k must satisfy 1 <= k < number of points");
  const std::vector<double>& q = points[query];
  for (const auto& p : points)
    if (p.size() != q.size())
      raise(ErrorCode::invalid_argument, "knn_indices: dimension mismatch");

  std::vector<std::pair<double, size_t>> dist;
  dist.reserve(points.size() - 1);
  for (size_t i = 0; i < points.size(); ++i) {
    if (i == query) continue;
    double d2 = 0.0;
    for (size_t j = 0; j < q.size(); ++j) {
      const double d = points[i][j] - q[j];
      d2 += d * d;
    }
    dist.emplace_back(d2, i);
  }
  std::partial_sort(dist.begin(), dist.begin() + static_cast<long>(k),
                    dist.end());
  std::vector<size_t> out(k);
  for (size_t i = 0; i < k; ++i) out[i] = dist[i].second;
  return out;
}

std::vector<double> synthesize(std::span<const double> x,
                               std::span<const double> neighbor, double u) {
  if (x.size() != neighbor.size())
    raise(ErrorCode::invalid_argument, "synthesize: dimension mismatch");
  std::vector<double> out(x.size());
  for (size_t i = 0; i < x.size(); ++i) out[i] = x[i] + u * (neighbor[i] - x[i]);
  return out;
}

namespace {

std::vector<double> flatten(const Image& img) { return img.data; }

Image reshape_like(const Image& proto, std::vector<double> values) {
  Image out(proto.height, proto.width, proto.channels);
  out.data = std::move(values);
  return out;
}

}  // namespace

LabeledSet balance(const LabeledSet& train, const SmoteParams& params,
                   BalanceReport* report) {
  const size_t num_classes = train.num_classes();
  std::vector<std::vector<size_t>> per_class(num_classes);
  for (size_t i = 0; i < train.samples.size(); ++i)
    per_class.at(static_cast<size_t>(train.samples[i].label)).push_back(i);

  size_t target = 0;
  if (params.target_per_class) {
    target = *params.target_per_class;
    if (target < 1)
      raise(ErrorCode::invalid_argument, "balance: target must be >= 1");
  } else {
    for (const auto& idx : per_class) target = std::max(target, idx.size());
    if (target == 0)
      raise(ErrorCode::invalid_argument, "balance: empty training set");
  }

  if (report) {
    report->added_per_class.assign(num_classes, 0);
    report->removed_per_class.assign(num_classes, 0);
    report->synthetics.clear();
  }

  // Pass 1: seeded draws per class, in class order. Removal sets and
  // synthetic (parent, neighbor slot, u) triples are fixed here; the
  // geometry is applied afterwards.
  std::vector<std::vector<char>> keep(num_classes);
  struct Draw {
    size_t parent;
    size_t neighbor_slot;
    double u;
  };
  std::vector<std::vector<Draw>> draws(num_classes);
  std::vector<size_t> k_eff(num_classes, 0);

  for (size_t ci = 0; ci < num_classes; ++ci) {
    const size_t n = per_class[ci].size();
    keep[ci].assign(n, 1);
    SplitMix64 rng(derive_seed(params.seed, "class/" + train.class_names[ci]));
    if (n > target) {
      std::vector<size_t> order(n);
      std::iota(order.begin(), order.end(), 0);
      fisher_yates(order, rng);
      for (size_t r = 0; r < n - target; ++r) keep[ci][order[r]] = 0;
      if (report) report->removed_per_class[ci] = n - target;
    } else if (n < target) {
      if (n < 2)
        raise(ErrorCode::insufficient_neighbors,
              "balance: class '" + train.class_names[ci] +
                  "' has fewer than 2 samples and cannot be oversampled");
      size_t k = params.k_neighbors;
      if (k < 1)
        raise(ErrorCode::invalid_argument, "balance: k_neighbors must be >= 1");
      if (k > n - 1) {
        k = n - 1;
        std::cerr << "warning: class '" << train.class_names[ci]
                  << "' has only " << n << " samples; clamping k to " << k
                  << "\n";
      }
      k_eff[ci] = k;
      for (size_t s = 0; s < target - n; ++s) {
        Draw d;
        d.parent = static_cast<size_t>(rng.next_below(n));
        d.neighbor_slot = static_cast<size_t>(rng.next_below(k));
        d.u = rng.next_double();
        if (params.interpolation_override) d.u = *params.interpolation_override;
        draws[ci].push_back(d);
      }
      if (report) report->added_per_class[ci] = target - n;
    }
  }

  LabeledSet out;
  out.class_names = train.class_names;

  // Survivors keep their original order (a no-op balance returns the input
  // exactly).
  std::vector<size_t> pos_in_class(train.samples.size(), 0);
  {
    std::vector<size_t> seen(num_classes, 0);
    for (size_t i = 0; i < train.samples.size(); ++i) {
      const size_t ci = static_cast<size_t>(train.samples[i].label);
      pos_in_class[i] = seen[ci]++;
    }
  }
  for (size_t i = 0; i < train.samples.size(); ++i) {
    const size_t ci = static_cast<size_t>(train.samples[i].label);
    if (keep[ci][pos_in_class[i]]) out.samples.push_back(train.samples[i]);
  }

  // Synthetics, grouped by class in draw order. Neighbor searches are lazy:
  // only parents actually drawn need their k-NN list.
  for (size_t ci = 0; ci < num_classes; ++ci) {
    if (draws[ci].empty()) continue;
    const auto& idx = per_class[ci];
    std::vector<std::vector<double>> feats(idx.size());
    for (size_t j = 0; j < idx.size(); ++j)
      feats[j] = flatten(train.samples[idx[j]].image);
    for (size_t j = 1; j < feats.size(); ++j)
      if (feats[j].size() != feats[0].size())
        raise(ErrorCode::invalid_argument,
              "balance: class '" + train.class_names[ci] +
                  "' mixes feature dimensions");

    std::map<size_t, std::vector<size_t>> knn_cache;
    for (const auto& d : draws[ci]) {
      auto it = knn_cache.find(d.parent);
      if (it == knn_cache.end())
        it = knn_cache.emplace(d.parent, knn_indices(feats, d.parent, k_eff[ci]))
                 .first;
      const size_t neighbor = it->second[d.neighbor_slot];
      Sample s;
      s.image = reshape_like(train.samples[idx[d.parent]].image,
                             synthesize(feats[d.parent], feats[neighbor], d.u));
      s.label = static_cast<int>(ci);
      s.synthetic = true;
      out.samples.push_back(std::move(s));
      if (report)
        report->synthetics.push_back({ci, d.parent, neighbor, d.u});
    }
  }
  return out;
}

}  // namespace neuroscan
