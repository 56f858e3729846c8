#pragma once

#include <filesystem>
#include <vector>

namespace neuroscan {

/// 2-D intensity grid, row-major, channel-interleaved. Pixel values are
/// carried as doubles end-to-end; decoded files arrive on the 8-bit [0, 255]
/// scale and stay there until normalize().
struct Image {
  int height = 0;
  int width = 0;
  int channels = 1;
  std::vector<double> data;

  Image() = default;
  Image(int h, int w, int c, double fill = 0.0);

  double& at(int y, int x, int c = 0) {
    return data[(static_cast<size_t>(y) * width + x) * channels + c];
  }
  double at(int y, int x, int c = 0) const {
    return data[(static_cast<size_t>(y) * width + x) * channels + c];
  }
  size_t pixel_count() const { return static_cast<size_t>(height) * width; }
  bool empty() const { return data.empty(); }
};

/// Decode a PNG or JPEG file (sniffed by signature) to 1 or 3 channels.
Image load_image(const std::filesystem::path& path);

/// Debug dump of a normalized image: 8-bit PNG, value = round(clamp(v,0,1)*255).
void save_png(const Image& img, const std::filesystem::path& path);

/// Rec. 601 luma (0.299 R + 0.587 G + 0.114 B); 1-channel input is returned
/// unchanged, so the conversion is idempotent.
Image to_grayscale(const Image& img);

/// Repeat a single channel n times (for consumers expecting RGB input).
Image replicate_channels(const Image& img, int channels);

/// Edge-clamped bilinear resampling with pixel-center alignment:
/// src = (dst + 0.5) * (src_dim / dst_dim) - 0.5, clamped to [0, src_dim - 1].
/// Resizing to the source dimensions reproduces the input bit-for-bit.
Image resize_bilinear(const Image& img, int out_h, int out_w);

/// Divide every intensity by 255.
Image normalize(const Image& img);

}  // namespace neuroscan
