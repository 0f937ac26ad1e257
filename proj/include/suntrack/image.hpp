#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "suntrack/calendar.hpp"
#include "suntrack/error.hpp"

namespace suntrack {

enum class Exposure { Short, Long };

inline std::string_view to_string(Exposure e) { return e == Exposure::Short ? "short" : "long"; }

inline Exposure parse_exposure(std::string_view s) {
  if (s == "short") return Exposure::Short;
  if (s == "long") return Exposure::Long;
  fail(ErrorCode::format_error, "unknown exposure tag '" + std::string(s) + "'");
}

/// Single-channel intensity raster. Row-major, x rightward, y downward.
class SkyImage {
 public:
  SkyImage() = default;

  SkyImage(int width, int height, int bit_depth = 8, std::uint16_t fill = 0)
      : width_(width), height_(height), bit_depth_(bit_depth) {
    require(width > 0 && height > 0, ErrorCode::invalid_argument, "image dimensions must be positive");
    require(bit_depth >= 1 && bit_depth <= 16, ErrorCode::invalid_argument, "bit depth must be in [1, 16]");
    require(fill <= max_value(), ErrorCode::invalid_argument, "fill value exceeds bit depth");
    pixels_.assign(std::size_t(width) * std::size_t(height), fill);
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int bit_depth() const noexcept { return bit_depth_; }
  bool empty() const noexcept { return pixels_.empty(); }

  /// Theoretical maximum intensity, 2^bit_depth - 1.
  std::uint16_t max_value() const noexcept { return std::uint16_t((1u << bit_depth_) - 1u); }

  std::uint16_t at(int x, int y) const { return pixels_[index(x, y)]; }
  std::uint16_t& at(int x, int y) { return pixels_[index(x, y)]; }

  void set(int x, int y, std::uint16_t v) {
    require(v <= max_value(), ErrorCode::invalid_argument, "pixel value exceeds bit depth");
    pixels_[index(x, y)] = v;
  }

  bool contains(int x, int y) const noexcept { return x >= 0 && y >= 0 && x < width_ && y < height_; }

  std::span<const std::uint16_t> pixels() const noexcept { return pixels_; }
  std::span<std::uint16_t> pixels() noexcept { return pixels_; }

  std::uint16_t max_pixel() const {
    require(!empty(), ErrorCode::empty_image, "image has no pixels");
    return *std::max_element(pixels_.begin(), pixels_.end());
  }

  const Timestamp& timestamp() const noexcept { return timestamp_; }
  void set_timestamp(const Timestamp& ts) { timestamp_ = ts; }
  Exposure exposure() const noexcept { return exposure_; }
  void set_exposure(Exposure e) { exposure_ = e; }

  bool operator==(const SkyImage& other) const = default;

 private:
  std::size_t index(int x, int y) const noexcept { return std::size_t(y) * std::size_t(width_) + std::size_t(x); }

  int width_ = 0;
  int height_ = 0;
  int bit_depth_ = 8;
  std::vector<std::uint16_t> pixels_;
  Timestamp timestamp_{};
  Exposure exposure_ = Exposure::Short;
};

/// Interleaved 8-bit RGB raster used for plots and annotated frames.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;  // 3 bytes per pixel

  RgbImage() = default;
  RgbImage(int w, int h, std::uint8_t fill = 0) : width(w), height(h), data(std::size_t(w) * h * 3, fill) {}

  bool contains(int x, int y) const noexcept { return x >= 0 && y >= 0 && x < width && y < height; }

  void put(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    if (!contains(x, y)) return;
    auto* p = &data[(std::size_t(y) * width + x) * 3];
    p[0] = r;
    p[1] = g;
    p[2] = b;
  }

  std::uint8_t channel(int x, int y, int c) const { return data[(std::size_t(y) * width + x) * 3 + c]; }
};

}  // namespace suntrack
