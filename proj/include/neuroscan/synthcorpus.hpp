#pragma once

#include <cstdint>
#include <filesystem>

#include "neuroscan/image.hpp"

namespace neuroscan {

/// Seeded generator for a 4-class corpus of noisy geometric shapes
/// (circle, cross, square, triangle), one PNG per image under
/// `<root>/<class>/img_NNNN.png`. Shape position, size, contrast and pixel
/// noise all derive from the seed, so the corpus is reproducible.
struct CorpusSpec {
  int images_per_class = 100;
  int image_size = 64;
  double noise_amplitude = 35.0;  // uniform pixel noise on the 8-bit scale
  uint64_t seed = 7;
};

inline constexpr const char* kShapeClasses[4] = {"circle", "cross", "square",
                                                 "triangle"};

Image make_shape_image(int class_index, const CorpusSpec& spec, uint64_t image_seed);

void generate_shape_corpus(const std::filesystem::path& root,
                           const CorpusSpec& spec);

}  // namespace neuroscan
