#pragma once

// Sun visibility classification and saturated-pixel Sun localization.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "suntrack/error.hpp"
#include "suntrack/image.hpp"

namespace suntrack {

struct DetectionConfig {
  double p = 0.99;               // fraction of the theoretical maximum
  double sigma = 20.0;           // pixels
  double cutoff_multiple = 2.0;  // retention radius = cutoff_multiple * sigma

  void validate() const {
    require(p > 0.0 && p < 1.0, ErrorCode::invalid_argument, "p must be in (0, 1)");
    require(sigma > 0.0, ErrorCode::invalid_argument, "sigma must be positive");
    require(cutoff_multiple > 0.0, ErrorCode::invalid_argument, "cutoff_multiple must be positive");
  }

  double retention_radius() const { return cutoff_multiple * sigma; }
};

enum class Visibility { VisibleSun, HiddenSun };

struct ClassificationLabel {
  Visibility label = Visibility::HiddenSun;
  std::uint16_t max_intensity = 0;

  bool visible() const { return label == Visibility::VisibleSun; }
};

struct PixelPos {
  int x = 0;
  int y = 0;

  bool operator==(const PixelPos&) const = default;
};

struct SunDetection {
  double x = 0.0;
  double y = 0.0;
  std::size_t n_saturated = 0;
  std::size_t n_retained = 0;
  bool ambiguous = false;  // retention window was empty; fell back to the largest blob
};

/// Intensity a pixel must strictly exceed to count as saturated.
inline double saturation_threshold(int bit_depth, double p) { return p * double((1u << bit_depth) - 1u); }

inline ClassificationLabel classify(const SkyImage& img, const DetectionConfig& cfg) {
  cfg.validate();
  if (img.empty()) fail(ErrorCode::empty_image, "cannot classify an empty image");
  const auto max = img.max_pixel();
  const bool visible = double(max) > saturation_threshold(img.bit_depth(), cfg.p);
  return {visible ? Visibility::VisibleSun : Visibility::HiddenSun, max};
}

/// Saturated pixel positions in row-major order.
inline std::vector<PixelPos> saturated_mask(const SkyImage& img, const DetectionConfig& cfg) {
  cfg.validate();
  const double threshold = saturation_threshold(img.bit_depth(), cfg.p);
  std::vector<PixelPos> mask;
  const auto px = img.pixels();
  for (int y = 0; y < img.height(); ++y) {
    const auto* row = px.data() + std::size_t(y) * img.width();
    for (int x = 0; x < img.width(); ++x) {
      if (double(row[x]) > threshold) mask.push_back({x, y});
    }
  }
  return mask;
}

namespace detail {

/// Lower median: element of rank (n - 1) / 2.
inline int lower_median(std::vector<int> values) {
  const auto mid = values.begin() + std::ptrdiff_t((values.size() - 1) / 2);
  std::nth_element(values.begin(), mid, values.end());
  return *mid;
}

inline PixelPos coordinate_median(std::span<const PixelPos> positions) {
  std::vector<int> xs, ys;
  xs.reserve(positions.size());
  ys.reserve(positions.size());
  for (const auto& p : positions) {
    xs.push_back(p.x);
    ys.push_back(p.y);
  }
  return {lower_median(std::move(xs)), lower_median(std::move(ys))};
}

/// Largest 8-connected component of the mask; ties go to the component met first in row-major order.
inline std::vector<PixelPos> largest_component(std::span<const PixelPos> mask, int width, int height) {
  std::vector<std::int32_t> label(std::size_t(width) * height, -1);
  std::vector<std::uint8_t> in_mask(std::size_t(width) * height, 0);
  for (const auto& p : mask) in_mask[std::size_t(p.y) * width + p.x] = 1;

  std::vector<PixelPos> best, current, stack;
  std::int32_t next = 0;
  for (const auto& seed : mask) {
    if (label[std::size_t(seed.y) * width + seed.x] >= 0) continue;
    current.clear();
    stack.assign(1, seed);
    label[std::size_t(seed.y) * width + seed.x] = next;
    while (!stack.empty()) {
      const auto p = stack.back();
      stack.pop_back();
      current.push_back(p);
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const int nx = p.x + dx, ny = p.y + dy;
          if (nx < 0 || ny < 0 || nx >= width || ny >= height) continue;
          const auto i = std::size_t(ny) * width + nx;
          if (!in_mask[i] || label[i] >= 0) continue;
          label[i] = next;
          stack.push_back({nx, ny});
        }
      }
    }
    ++next;
    if (current.size() > best.size()) best = current;
  }
  return best;
}

}  // namespace detail

/// Median of saturated positions, then a circular retention window around it,
/// then the median of what was retained.
inline SunDetection localize(const SkyImage& img, const DetectionConfig& cfg) {
  const auto mask = saturated_mask(img, cfg);
  if (mask.empty()) fail(ErrorCode::not_visible, "no saturated pixels; Sun is not visible");

  const auto first = detail::coordinate_median(mask);
  const double r2 = cfg.retention_radius() * cfg.retention_radius();

  std::vector<PixelPos> retained;
  for (const auto& p : mask) {
    const double dx = p.x - first.x, dy = p.y - first.y;
    if (dx * dx + dy * dy <= r2) retained.push_back(p);
  }

  SunDetection det;
  det.n_saturated = mask.size();
  if (retained.empty()) {
    retained = detail::largest_component(mask, img.width(), img.height());
    det.ambiguous = true;
  }
  const auto pos = detail::coordinate_median(retained);
  det.x = pos.x;
  det.y = pos.y;
  det.n_retained = retained.size();
  return det;
}

}  // namespace suntrack
