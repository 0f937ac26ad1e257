#pragma once

// PNG reading and writing on top of libpng.

#include <png.h>

#include <csetjmp>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "suntrack/error.hpp"
#include "suntrack/image.hpp"

namespace suntrack {

/// Decoded samples, channels interleaved, gray expanded to >= 8 bits and palettes to RGB.
struct DecodedPng {
  int width = 0;
  int height = 0;
  int channels = 0;   // 1 (gray) or 3 (RGB); alpha is stripped
  int bit_depth = 8;  // 8 or 16
  std::vector<std::uint16_t> samples;
};

enum class Channel { gray, red, green, blue };

inline Channel parse_channel(std::string_view s) {
  if (s == "gray" || s == "grey") return Channel::gray;
  if (s == "red") return Channel::red;
  if (s == "green") return Channel::green;
  if (s == "blue") return Channel::blue;
  fail(ErrorCode::invalid_argument, "unknown channel '" + std::string(s) + "'");
}

namespace detail {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

// Keeps setjmp frames free of objects with destructors.
inline bool png_decode(std::FILE* fp, DecodedPng& out, std::vector<png_bytep>& rows,
                       std::vector<png_byte>& buffer) {
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) return false;
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    return false;
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    return false;
  }
  png_init_io(png, fp);
  png_read_info(png, info);
  const auto color = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  if (depth == 16) png_set_swap(png);  // native little-endian samples
  png_read_update_info(png, info);

  out.width = int(png_get_image_width(png, info));
  out.height = int(png_get_image_height(png, info));
  out.channels = png_get_channels(png, info);
  out.bit_depth = png_get_bit_depth(png, info);
  const std::size_t rowbytes = png_get_rowbytes(png, info);
  buffer.resize(rowbytes * std::size_t(out.height));
  rows.resize(std::size_t(out.height));
  for (int y = 0; y < out.height; ++y) rows[std::size_t(y)] = buffer.data() + rowbytes * std::size_t(y);
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return true;
}

inline bool png_encode(std::FILE* fp, int width, int height, int channels, int bit_depth,
                       std::vector<png_bytep>& rows) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) return false;
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    return false;
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    return false;
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, png_uint_32(width), png_uint_32(height), bit_depth,
               channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_set_compression_level(png, 3);
  png_write_info(png, info);
  if (bit_depth == 16) png_set_swap(png);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return true;
}

inline void write_png_raw(const std::filesystem::path& path, int width, int height, int channels, int bit_depth,
                          std::vector<png_byte>& buffer) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  FilePtr fp(std::fopen(path.string().c_str(), "wb"));
  if (!fp) fail(ErrorCode::io_failure, "cannot write " + path.string());
  const std::size_t rowbytes = std::size_t(width) * channels * (bit_depth / 8);
  std::vector<png_bytep> rows(static_cast<std::size_t>(height));
  for (int y = 0; y < height; ++y) rows[std::size_t(y)] = buffer.data() + rowbytes * std::size_t(y);
  if (!png_encode(fp.get(), width, height, channels, bit_depth, rows)) {
    fail(ErrorCode::io_failure, "PNG encoding failed for " + path.string());
  }
  if (std::fflush(fp.get()) != 0) fail(ErrorCode::io_failure, "short write to " + path.string());
}

}  // namespace detail

inline DecodedPng read_png(const std::filesystem::path& path) {
  detail::FilePtr fp(std::fopen(path.string().c_str(), "rb"));
  if (!fp) fail(ErrorCode::io_failure, "cannot read " + path.string());
  png_byte sig[8] = {};
  if (std::fread(sig, 1, 8, fp.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    fail(ErrorCode::corrupt_image, path.string() + " is not a PNG file");
  }
  std::rewind(fp.get());
  DecodedPng out;
  std::vector<png_bytep> rows;
  std::vector<png_byte> buffer;
  if (!detail::png_decode(fp.get(), out, rows, buffer)) {
    fail(ErrorCode::corrupt_image, "cannot decode " + path.string());
  }
  const std::size_t n = std::size_t(out.width) * out.height * out.channels;
  out.samples.resize(n);
  if (out.bit_depth == 16) {
    for (std::size_t i = 0; i < n; ++i) out.samples[i] = std::uint16_t(buffer[2 * i] | (buffer[2 * i + 1] << 8));
  } else {
    for (std::size_t i = 0; i < n; ++i) out.samples[i] = buffer[i];
  }
  return out;
}

/// Loads one channel of a PNG as a SkyImage. For gray files every channel request yields the gray plane.
inline SkyImage read_sky_image(const std::filesystem::path& path, Channel channel = Channel::blue) {
  const auto png = read_png(path);
  SkyImage img(png.width, png.height, png.bit_depth);
  int offset = 0;
  if (png.channels == 3) {
    switch (channel) {
      case Channel::red: offset = 0; break;
      case Channel::green: offset = 1; break;
      case Channel::blue: offset = 2; break;
      case Channel::gray: offset = -1; break;
    }
  }
  auto px = img.pixels();
  for (std::size_t i = 0; i < px.size(); ++i) {
    if (png.channels == 1) {
      px[i] = png.samples[i];
    } else if (offset >= 0) {
      px[i] = png.samples[3 * i + std::size_t(offset)];
    } else {
      // Rec. 601 luma, integer rounding.
      const auto* s = &png.samples[3 * i];
      px[i] = std::uint16_t((299u * s[0] + 587u * s[1] + 114u * s[2] + 500u) / 1000u);
    }
  }
  return img;
}

inline void write_png(const std::filesystem::path& path, const SkyImage& img) {
  const int depth = img.bit_depth() <= 8 ? 8 : 16;
  std::vector<png_byte> buffer(std::size_t(img.width()) * img.height() * (depth / 8));
  const auto px = img.pixels();
  // Sub-byte depths are stored in an 8-bit container without rescaling.
  for (std::size_t i = 0; i < px.size(); ++i) {
    if (depth == 8) {
      buffer[i] = png_byte(px[i]);
    } else {
      buffer[2 * i] = png_byte(px[i] & 0xff);
      buffer[2 * i + 1] = png_byte(px[i] >> 8);
    }
  }
  detail::write_png_raw(path, img.width(), img.height(), 1, depth, buffer);
}

inline void write_png(const std::filesystem::path& path, const RgbImage& img) {
  std::vector<png_byte> buffer(img.data.begin(), img.data.end());
  detail::write_png_raw(path, img.width, img.height, 3, 8, buffer);
}

}  // namespace suntrack
