#include "neuroscan/image.hpp"

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>

#include <jpeglib.h>
#include <png.h>

#include "neuroscan/error.hpp"

namespace neuroscan {

Image::Image(int h, int w, int c, double fill)
    : height(h), width(w), channels(c),
      data(static_cast<size_t>(h) * w * c, fill) {}

namespace {

struct FileHandle {
  FILE* fp = nullptr;
  explicit FileHandle(const std::filesystem::path& path, const char* mode) {
    fp = std::fopen(path.string().c_str(), mode);
  }
  ~FileHandle() {
    if (fp) std::fclose(fp);
  }
  FileHandle(const FileHandle&) = delete;
  FileHandle& operator=(const FileHandle&) = delete;
};

void png_error_fn(png_structp png, png_const_charp msg) {
  // libpng demands a longjmp out of its call frame on error.
  (void)msg;
  longjmp(png_jmpbuf(png), 1);
}

void png_warn_fn(png_structp, png_const_charp) {}

Image decode_png(FILE* fp, const std::string& name) {
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                           png_error_fn, png_warn_fn);
  if (!png) raise(ErrorCode::decode_error, "png: allocation failed: " + name);
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    raise(ErrorCode::decode_error, "png: allocation failed: " + name);
  }

  // No C++ objects with destructors may live between here and the decode end.
  std::vector<unsigned char> buffer;
  std::vector<png_bytep> rows;
  int out_channels = 0;
  png_uint_32 w = 0, h = 0;

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    raise(ErrorCode::decode_error, "png: corrupt or truncated file: " + name);
  }

  png_init_io(png, fp);
  png_read_info(png, info);
  w = png_get_image_width(png, info);
  h = png_get_image_height(png, info);
  int color = png_get_color_type(png, info);
  int depth = png_get_bit_depth(png, info);

  if (depth == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color & PNG_COLOR_MASK_ALPHA || png_get_valid(png, info, PNG_INFO_tRNS))
    png_set_strip_alpha(png);
  png_read_update_info(png, info);

  out_channels = png_get_channels(png, info);
  if (out_channels != 1 && out_channels != 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    raise(ErrorCode::unsupported_format,
          "png: unsupported channel count after expansion: " + name);
  }

  buffer.resize(static_cast<size_t>(h) * w * out_channels);
  rows.resize(h);
  for (png_uint_32 y = 0; y < h; ++y)
    rows[y] = buffer.data() + static_cast<size_t>(y) * w * out_channels;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  Image img(static_cast<int>(h), static_cast<int>(w), out_channels);
  for (size_t i = 0; i < buffer.size(); ++i)
    img.data[i] = static_cast<double>(buffer[i]);
  return img;
}

struct JpegErrorMgr {
  jpeg_error_mgr pub;
  jmp_buf jump;
};

void jpeg_error_exit(j_common_ptr cinfo) {
  JpegErrorMgr* err = reinterpret_cast<JpegErrorMgr*>(cinfo->err);
  longjmp(err->jump, 1);
}

Image decode_jpeg(FILE* fp, const std::string& name) {
  jpeg_decompress_struct cinfo;
  JpegErrorMgr jerr;
  cinfo.err = jpeg_std_error(&jerr.pub);
  jerr.pub.error_exit = jpeg_error_exit;

  std::vector<unsigned char> buffer;
  if (setjmp(jerr.jump)) {
    jpeg_destroy_decompress(&cinfo);
    raise(ErrorCode::decode_error, "jpeg: corrupt or truncated file: " + name);
  }

  jpeg_create_decompress(&cinfo);
  jpeg_stdio_src(&cinfo, fp);
  jpeg_read_header(&cinfo, TRUE);
  if (cinfo.jpeg_color_space == JCS_GRAYSCALE)
    cinfo.out_color_space = JCS_GRAYSCALE;
  else
    cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);

  const int w = static_cast<int>(cinfo.output_width);
  const int h = static_cast<int>(cinfo.output_height);
  const int c = cinfo.output_components;
  buffer.resize(static_cast<size_t>(h) * w * c);
  while (cinfo.output_scanline < cinfo.output_height) {
    unsigned char* row = buffer.data() +
                         static_cast<size_t>(cinfo.output_scanline) * w * c;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);

  if (c != 1 && c != 3)
    raise(ErrorCode::unsupported_format,
          "jpeg: unsupported channel count: " + name);

  Image img(h, w, c);
  for (size_t i = 0; i < buffer.size(); ++i)
    img.data[i] = static_cast<double>(buffer[i]);
  return img;
}

}  // namespace

Image load_image(const std::filesystem::path& path) {
  FileHandle file(path, "rb");
  if (!file.fp)
    raise(ErrorCode::io_error, "cannot open file: " + path.string());

  unsigned char sig[8] = {0};
  size_t got = std::fread(sig, 1, sizeof(sig), file.fp);
  std::rewind(file.fp);
  if (got >= 8 && png_sig_cmp(sig, 0, 8) == 0)
    return decode_png(file.fp, path.string());
  if (got >= 2 && sig[0] == 0xFF && sig[1] == 0xD8)
    return decode_jpeg(file.fp, path.string());
  raise(ErrorCode::decode_error,
        "not a PNG or JPEG file: " + path.string());
}

void save_png(const Image& img, const std::filesystem::path& path) {
  if (img.channels != 1 && img.channels != 3)
    raise(ErrorCode::unsupported_format, "save_png: channels must be 1 or 3");
  if (img.empty())
    raise(ErrorCode::invalid_argument, "save_png: empty image");

  FileHandle file(path, "wb");
  if (!file.fp)
    raise(ErrorCode::io_error, "cannot open file for write: " + path.string());

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                            png_error_fn, png_warn_fn);
  if (!png) raise(ErrorCode::io_error, "png: allocation failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    raise(ErrorCode::io_error, "png: allocation failed");
  }

  std::vector<unsigned char> buffer(img.data.size());
  for (size_t i = 0; i < img.data.size(); ++i) {
    double v = std::clamp(img.data[i], 0.0, 1.0);
    buffer[i] = static_cast<unsigned char>(std::lround(v * 255.0));
  }
  std::vector<png_bytep> rows(img.height);
  for (int y = 0; y < img.height; ++y)
    rows[y] = buffer.data() + static_cast<size_t>(y) * img.width * img.channels;

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    raise(ErrorCode::io_error, "png: write failed: " + path.string());
  }

  png_init_io(png, file.fp);
  png_set_IHDR(png, info, img.width, img.height, 8,
               img.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

Image to_grayscale(const Image& img) {
  if (img.channels == 1) return img;
  if (img.channels != 3)
    raise(ErrorCode::unsupported_format,
          "to_grayscale: channels must be 1 or 3");
  Image out(img.height, img.width, 1);
  for (size_t p = 0; p < img.pixel_count(); ++p) {
    const double* px = &img.data[p * 3];
    out.data[p] = 0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2];
  }
  return out;
}

Image replicate_channels(const Image& img, int channels) {
  if (img.channels != 1)
    raise(ErrorCode::unsupported_format,
          "replicate_channels: input must be single-channel");
  if (channels < 1)
    raise(ErrorCode::invalid_argument, "replicate_channels: channels < 1");
  Image out(img.height, img.width, channels);
  for (size_t p = 0; p < img.pixel_count(); ++p)
    for (int c = 0; c < channels; ++c) out.data[p * channels + c] = img.data[p];
  return out;
}

Image resize_bilinear(const Image& img, int out_h, int out_w) {
  if (out_h < 1 || out_w < 1)
    raise(ErrorCode::invalid_argument, "resize_bilinear: zero target dimension");
  if (img.empty())
    raise(ErrorCode::invalid_argument, "resize_bilinear: empty input");

  Image out(out_h, out_w, img.channels);
  const double scale_y = static_cast<double>(img.height) / out_h;
  const double scale_x = static_cast<double>(img.width) / out_w;

  for (int y = 0; y < out_h; ++y) {
    double sy = std::clamp((y + 0.5) * scale_y - 0.5, 0.0,
                           static_cast<double>(img.height - 1));
    int y0 = static_cast<int>(sy);
    int y1 = std::min(y0 + 1, img.height - 1);
    double fy = sy - y0;
    for (int x = 0; x < out_w; ++x) {
      double sx = std::clamp((x + 0.5) * scale_x - 0.5, 0.0,
                             static_cast<double>(img.width - 1));
      int x0 = static_cast<int>(sx);
      int x1 = std::min(x0 + 1, img.width - 1);
      double fx = sx - x0;
      for (int c = 0; c < img.channels; ++c) {
        double v = (1 - fy) * ((1 - fx) * img.at(y0, x0, c) + fx * img.at(y0, x1, c)) +
                   fy * ((1 - fx) * img.at(y1, x0, c) + fx * img.at(y1, x1, c));
        out.at(y, x, c) = v;
      }
    }
  }
  return out;
}

Image normalize(const Image& img) {
  Image out = img;
  for (double& v : out.data) v /= 255.0;
  return out;
}

}  // namespace neuroscan
