#include "neuroscan/rng.hpp"

namespace neuroscan {

uint64_t fnv1a64(std::string_view s) {
  uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x00000100000001B3ull;
  }
  return h;
}

uint64_t derive_seed(uint64_t root, std::string_view label) {
  return mix64(root ^ fnv1a64(label));
}

uint64_t derive_seed(uint64_t root, std::string_view label, uint64_t index) {
  return mix64(derive_seed(root, label) + (index + 1) * kGolden);
}

}  // namespace neuroscan
