#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "neuroscan/error.hpp"
#include "neuroscan/rng.hpp"
#include "neuroscan/smote.hpp"

using namespace neuroscan;

namespace {

std::vector<std::vector<double>> random_points(size_t n, size_t dim,
                                               uint64_t seed) {
  SplitMix64 rng(seed);
  std::vector<std::vector<double>> pts(n, std::vector<double>(dim));
  for (auto& p : pts)
    for (double& v : p) v = rng.next_uniform(-10.0, 10.0);
  return pts;
}

// Exhaustive oracle: all distances, stable sort by (distance, index).
std::vector<size_t> knn_bruteforce(const std::vector<std::vector<double>>& pts,
                                   size_t query, size_t k) {
  std::vector<std::pair<double, size_t>> d;
  for (size_t i = 0; i < pts.size(); ++i) {
    if (i == query) continue;
    double acc = 0.0;
    for (size_t j = 0; j < pts[query].size(); ++j)
      acc += (pts[i][j] - pts[query][j]) * (pts[i][j] - pts[query][j]);
    d.push_back({acc, i});
  }
  std::sort(d.begin(), d.end());
  std::vector<size_t> out(k);
  for (size_t i = 0; i < k; ++i) out[i] = d[i].second;
  return out;
}

LabeledSet class_set(const std::vector<std::string>& names,
                     const std::vector<size_t>& counts, int h, int w,
                     uint64_t seed) {
  LabeledSet set;
  set.class_names = names;
  SplitMix64 rng(seed);
  for (size_t ci = 0; ci < names.size(); ++ci)
    for (size_t k = 0; k < counts[ci]; ++k) {
      Sample s;
      s.image = Image(h, w, 1);
      for (double& v : s.image.data) v = rng.next_uniform(0.0, 1.0);
      s.label = static_cast<int>(ci);
      set.samples.push_back(std::move(s));
    }
  return set;
}

}  // namespace

TEST_CASE("knn_indices: points on a line") {
  std::vector<std::vector<double>> pts = {{0.0}, {1.0}, {2.0}, {10.0}};
  CHECK(knn_indices(pts, 0, 2) == std::vector<size_t>{1, 2});
}

TEST_CASE("knn_indices: duplicate of the query is a neighbor at distance 0") {
  std::vector<std::vector<double>> pts = {{3.0, 4.0}, {3.0, 4.0}, {9.0, 9.0}};
  CHECK(knn_indices(pts, 0, 1) == std::vector<size_t>{1});
}

TEST_CASE("knn_indices: ties break toward the lower index") {
  std::vector<std::vector<double>> pts = {{0.0}, {1.0}, {-1.0}, {2.0}};
  CHECK(knn_indices(pts, 0, 2) == std::vector<size_t>{1, 2});
}

TEST_CASE("knn_indices: agrees with the exhaustive oracle") {
  for (uint64_t seed = 0; seed < 40; ++seed) {
    SplitMix64 rng(9000 + seed);
    const size_t n = 5 + rng.next_below(46);
    const size_t dim = 1 + rng.next_below(8);
    const auto pts = random_points(n, dim, seed * 13 + 1);
    const size_t query = rng.next_below(n);
    const size_t k = 1 + rng.next_below(n - 1);
    CHECK(knn_indices(pts, query, k) == knn_bruteforce(pts, query, k));
  }
}

TEST_CASE("knn_indices: bad arguments rejected") {
  auto pts = random_points(4, 3, 0);
  CHECK_THROWS_AS(knn_indices(pts, 0, 4), Error);
  CHECK_THROWS_AS(knn_indices(pts, 0, 0), Error);
  pts[2].push_back(1.0);
  CHECK_THROWS_AS(knn_indices(pts, 0, 2), Error);
}

TEST_CASE("synthesize: endpoints and midpoint") {
  const std::vector<double> x = {0.0, 0.0};
  const std::vector<double> nb = {2.0, 4.0};
  CHECK(synthesize(x, nb, 0.0) == x);
  CHECK(synthesize(x, nb, 1.0) == nb);
  CHECK(synthesize(x, nb, 0.5) == std::vector<double>{1.0, 2.0});
  const std::vector<double> bad = {1.0};
  CHECK_THROWS_AS(synthesize(x, bad, 0.5), Error);
}

TEST_CASE("balance: paper-table counts reach the target exactly") {
  // Sorted order: glioma 841, meningioma 814, no 833, pituitary 849.
  LabeledSet train = class_set(
      {"glioma_tumor", "meningioma_tumor", "no_tumor", "pituitary_tumor"},
      {841, 814, 833, 849}, 4, 4, 5);
  SmoteParams params;
  params.target_per_class = 841;
  params.seed = 77;
  BalanceReport report;
  LabeledSet out = balance(train, params, &report);

  CHECK(out.class_counts() == std::vector<size_t>{841, 841, 841, 841});
  CHECK(report.added_per_class == std::vector<size_t>{0, 27, 8, 0});
  CHECK(report.removed_per_class == std::vector<size_t>{0, 0, 0, 8});

  std::vector<size_t> synthetic_counts(4, 0);
  for (const Sample& s : out.samples)
    if (s.synthetic) synthetic_counts[static_cast<size_t>(s.label)]++;
  CHECK(synthetic_counts == std::vector<size_t>{0, 27, 8, 0});
}

TEST_CASE("balance: already balanced set is returned exactly") {
  LabeledSet train = class_set({"a", "b"}, {6, 6}, 3, 3, 8);
  SmoteParams params;
  params.target_per_class = 6;
  LabeledSet out = balance(train, params);
  REQUIRE(out.samples.size() == train.samples.size());
  for (size_t i = 0; i < out.samples.size(); ++i) {
    CHECK(out.samples[i].image.data == train.samples[i].image.data);
    CHECK(out.samples[i].label == train.samples[i].label);
    CHECK_FALSE(out.samples[i].synthetic);
  }
}

TEST_CASE("balance: two-sample class, synthetic lies on the segment") {
  LabeledSet train = class_set({"solo"}, {2}, 2, 2, 3);
  SmoteParams params;
  params.k_neighbors = 1;
  params.target_per_class = 3;
  params.seed = 4;
  BalanceReport report;
  LabeledSet out = balance(train, params, &report);
  REQUIRE(out.samples.size() == 3);
  REQUIRE(report.synthetics.size() == 1);
  const auto& a = train.samples[0].image.data;
  const auto& b = train.samples[1].image.data;
  const auto& s = out.samples[2].image.data;
  for (size_t i = 0; i < s.size(); ++i) {
    CHECK(s[i] >= std::min(a[i], b[i]) - 1e-15);
    CHECK(s[i] <= std::max(a[i], b[i]) + 1e-15);
  }
}

TEST_CASE("balance: convexity of every synthetic against its parents") {
  LabeledSet train = class_set({"a", "b"}, {9, 17}, 3, 3, 12);
  SmoteParams params;
  params.k_neighbors = 3;
  params.target_per_class = 20;
  params.seed = 31;
  BalanceReport report;
  LabeledSet out = balance(train, params, &report);
  CHECK(out.class_counts() == std::vector<size_t>{20, 20});

  // Locate original samples per class to resolve parent/neighbor indices.
  std::vector<std::vector<const Sample*>> originals(2);
  for (const Sample& s : train.samples)
    originals[static_cast<size_t>(s.label)].push_back(&s);
  size_t synth_seen = 0;
  for (const Sample& s : out.samples) {
    if (!s.synthetic) continue;
    const SyntheticRecord& rec = report.synthetics.at(synth_seen++);
    const auto& parent = originals[rec.class_index][rec.parent]->image.data;
    const auto& neighbor = originals[rec.class_index][rec.neighbor]->image.data;
    for (size_t i = 0; i < s.image.data.size(); ++i) {
      CHECK(s.image.data[i] >= std::min(parent[i], neighbor[i]));
      CHECK(s.image.data[i] <= std::max(parent[i], neighbor[i]));
    }
  }
  CHECK(synth_seen == report.synthetics.size());
}

TEST_CASE("balance: u forced to 0 degenerates synthetics to originals") {
  LabeledSet train = class_set({"small", "large"}, {5, 12}, 2, 3, 21);
  SmoteParams params;
  params.k_neighbors = 2;
  params.target_per_class = 12;
  params.seed = 6;
  params.interpolation_override = 0.0;
  LabeledSet out = balance(train, params);
  for (const Sample& s : out.samples) {
    if (!s.synthetic) continue;
    bool matches_original = false;
    for (const Sample& o : train.samples)
      if (o.label == s.label && o.image.data == s.image.data)
        matches_original = true;
    CHECK(matches_original);
  }
}

TEST_CASE("balance: deterministic for identical inputs") {
  LabeledSet train = class_set({"a", "b", "c"}, {4, 9, 6}, 3, 2, 17);
  SmoteParams params;
  params.target_per_class = 9;
  params.seed = 40;
  LabeledSet out1 = balance(train, params);
  LabeledSet out2 = balance(train, params);
  REQUIRE(out1.samples.size() == out2.samples.size());
  for (size_t i = 0; i < out1.samples.size(); ++i) {
    CHECK(out1.samples[i].label == out2.samples[i].label);
    CHECK(out1.samples[i].image.data == out2.samples[i].image.data);
  }
}

TEST_CASE("balance: max-class default target") {
  LabeledSet train = class_set({"a", "b"}, {3, 7}, 2, 2, 50);
  SmoteParams params;  // no explicit target
  params.k_neighbors = 2;
  params.seed = 1;
  LabeledSet out = balance(train, params);
  CHECK(out.class_counts() == std::vector<size_t>{7, 7});
}

TEST_CASE("balance: k clamps to class size minus one") {
  LabeledSet train = class_set({"tiny", "big"}, {3, 10}, 2, 2, 60);
  SmoteParams params;  // k = 5 > 3 - 1
  params.target_per_class = 10;
  params.seed = 2;
  LabeledSet out = balance(train, params);
  CHECK(out.class_counts() == std::vector<size_t>{10, 10});
}

TEST_CASE("balance: error paths") {
  LabeledSet lonely = class_set({"one", "rich"}, {1, 5}, 2, 2, 70);
  SmoteParams params;
  params.target_per_class = 5;
  try {
    balance(lonely, params);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::insufficient_neighbors);
    CHECK(std::string(e.what()).find("one") != std::string::npos);
  }

  LabeledSet ok = class_set({"a"}, {4}, 2, 2, 71);
  SmoteParams bad;
  bad.target_per_class = 0;
  CHECK_THROWS_AS(balance(ok, bad), Error);
}
