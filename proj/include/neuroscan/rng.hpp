#pragma once

#include <cstdint>
#include <string_view>
#include <utility>
#include <vector>

namespace neuroscan {

// SplitMix64 finalizer. Together with the golden-ratio increment below this
// forms the repo's counter-based generator: value i of a stream with seed s
// is mix64(s + (i+1) * 0x9E3779B97F4A7C15). The exact construction, the
// bounded draw, the [0,1) mapping and the child-stream derivation are
// documented in README.md so golden values are portable across languages.
constexpr uint64_t kGolden = 0x9E3779B97F4A7C15ull;

constexpr uint64_t mix64(uint64_t z) {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ull;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBull;
  z ^= z >> 31;
  return z;
}

class SplitMix64 {
 public:
  explicit SplitMix64(uint64_t seed) : state_(seed) {}

  uint64_t next_u64() {
    state_ += kGolden;
    return mix64(state_);
  }

  /// Draw in [0, n). Plain modulus: portable, and the bias is immaterial for
  /// the n << 2^64 ranges used here.
  uint64_t next_below(uint64_t n) { return next_u64() % n; }

  /// Uniform double in [0, 1) from the top 53 bits.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double next_uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

 private:
  uint64_t state_;
};

uint64_t fnv1a64(std::string_view s);

/// Child stream: mix64(root ^ fnv1a64(label)). Stage and per-class seeds all
/// derive this way from the experiment's top-level seed.
uint64_t derive_seed(uint64_t root, std::string_view label);
uint64_t derive_seed(uint64_t root, std::string_view label, uint64_t index);

/// Seeded Fisher-Yates: for i = n-1 .. 1, j = rng.next_below(i + 1), swap.
template <typename T>
void fisher_yates(std::vector<T>& items, SplitMix64& rng) {
  for (size_t i = items.size(); i > 1; --i) {
    size_t j = static_cast<size_t>(rng.next_below(i));
    std::swap(items[i - 1], items[j]);
  }
}

}  // namespace neuroscan
