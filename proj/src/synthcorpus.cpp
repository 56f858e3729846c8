#include "neuroscan/synthcorpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "neuroscan/error.hpp"
#include "neuroscan/rng.hpp"

namespace neuroscan {

namespace {

bool inside_shape(int class_index, double dx, double dy, double half) {
  switch (class_index) {
    case 0:  // circle
      return dx * dx + dy * dy <= half * half;
    case 1: {  // cross: two crossing bars
      const double bar = half * 0.38;
      return (std::abs(dx) <= bar && std::abs(dy) <= half) ||
             (std::abs(dy) <= bar && std::abs(dx) <= half);
    }
    case 2:  // square
      return std::abs(dx) <= half && std::abs(dy) <= half;
    case 3:  // triangle pointing up
      if (dy < -half || dy > half) return false;
      return std::abs(dx) <= (dy + half) / 2.0;
    default:
      return false;
  }
}

}  // namespace

Image make_shape_image(int class_index, const CorpusSpec& spec,
                       uint64_t image_seed) {
  const int n = spec.image_size;
  SplitMix64 rng(image_seed);

  const double background = rng.next_uniform(20.0, 50.0);
  const double foreground = rng.next_uniform(185.0, 235.0);
  const double half = rng.next_uniform(0.26, 0.36) * n;
  const double cx = n / 2.0 + rng.next_uniform(-0.08, 0.08) * n;
  const double cy = n / 2.0 + rng.next_uniform(-0.08, 0.08) * n;

  Image img(n, n, 1);
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) {
      const bool in = inside_shape(class_index, x + 0.5 - cx, y + 0.5 - cy, half);
      double v = in ? foreground : background;
      v += rng.next_uniform(-spec.noise_amplitude, spec.noise_amplitude);
      img.at(y, x) = std::clamp(v, 0.0, 255.0);
    }
  return img;
}

void generate_shape_corpus(const std::filesystem::path& root,
                           const CorpusSpec& spec) {
  if (spec.images_per_class < 1 || spec.image_size < 8)
    raise(ErrorCode::invalid_argument, "corpus: bad spec");
  namespace fs = std::filesystem;
  for (int ci = 0; ci < 4; ++ci) {
    const fs::path dir = root / kShapeClasses[ci];
    fs::create_directories(dir);
    for (int i = 0; i < spec.images_per_class; ++i) {
      Image img = make_shape_image(
          ci, spec,
          derive_seed(spec.seed, std::string("corpus/") + kShapeClasses[ci],
                      static_cast<uint64_t>(i)));
      Image unit = img;
      for (double& v : unit.data) v /= 255.0;
      char name[32];
      std::snprintf(name, sizeof(name), "img_%04d.png", i);
      save_png(unit, dir / name);
    }
  }
}

}  // namespace neuroscan
