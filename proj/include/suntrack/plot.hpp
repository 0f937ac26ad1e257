#pragma once

// Raster figures: visibility map, daily trajectory overlays, per-minute
// cross-day curves, and annotated frames.

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <vector>

#include "suntrack/error.hpp"
#include "suntrack/image.hpp"
#include "suntrack/png_io.hpp"
#include "suntrack/store_io.hpp"
#include "suntrack/trajectory.hpp"

namespace suntrack {

struct Color {
  std::uint8_t r = 0, g = 0, b = 0;
};

namespace detail {

inline Color palette(std::size_t i) {
  static constexpr std::array<Color, 10> colors{{{31, 119, 180},
                                                 {255, 127, 14},
                                                 {44, 160, 44},
                                                 {214, 39, 40},
                                                 {148, 103, 189},
                                                 {140, 86, 75},
                                                 {227, 119, 194},
                                                 {127, 127, 127},
                                                 {188, 189, 34},
                                                 {23, 190, 207}}};
  return colors[i % colors.size()];
}

inline void put(RgbImage& img, double x, double y, Color c) {
  img.put(int(std::lround(x)), int(std::lround(y)), c.r, c.g, c.b);
}

inline void line(RgbImage& img, double x0, double y0, double x1, double y1, Color c) {
  const int steps = std::max(1, int(std::ceil(std::max(std::abs(x1 - x0), std::abs(y1 - y0)))));
  for (int s = 0; s <= steps; ++s) {
    const double t = double(s) / steps;
    put(img, x0 + t * (x1 - x0), y0 + t * (y1 - y0), c);
  }
}

inline void dot(RgbImage& img, double x, double y, Color c, int half = 1) {
  const int cx = int(std::lround(x)), cy = int(std::lround(y));
  for (int dy = -half; dy <= half; ++dy)
    for (int dx = -half; dx <= half; ++dx) img.put(cx + dx, cy + dy, c.r, c.g, c.b);
}

inline void crosshair(RgbImage& img, double x, double y, int arm, Color c) {
  line(img, x - arm, y, x + arm, y, c);
  line(img, x, y - arm, x, y + arm, c);
}

}  // namespace detail

/// Days along x (first_day at column 0), minutes of day along y; white where
/// the store holds an observation.
inline SkyImage visibility_map(const ObservationStore& store) {
  require(!store.empty(), ErrorCode::empty_input, "store is empty");
  const int first = *store.first_day();
  const int last = *store.last_day();
  SkyImage img(last - first + 1, kMinutesPerDay, 8, 0);
  for (const auto& obs : store.records()) img.at(obs.day_index - first, obs.minute) = 255;
  return img;
}

inline SkyImage emit_visibility_map(const ObservationStore& store, const std::filesystem::path& out) {
  auto img = visibility_map(store);
  write_png(out, img);
  return img;
}

struct PlotSummary {
  std::size_t curves = 0;
  std::size_t points = 0;
  RgbImage image;
};

/// Overlays g_d sampled per minute for each requested day, with that day's observations as dots.
inline PlotSummary trajectory_plot(const TrajectorySet& models, const ObservationStore& store,
                                   const std::vector<int>& days, int width, int height) {
  if (days.empty()) fail(ErrorCode::day_without_model, "no days requested");
  for (int d : days) {
    if (!models.contains(d)) fail(ErrorCode::day_without_model, "no trajectory for day " + std::to_string(d));
  }
  PlotSummary s;
  s.image = RgbImage(width, height, 255);
  for (std::size_t i = 0; i < days.size(); ++i) {
    const auto& t = models.at(days[i]);
    const Color c = detail::palette(i);
    auto prev = predict_position(t, t.minute_min);
    for (int m = t.minute_min + 1; m <= t.minute_max; ++m) {
      const auto p = predict_position(t, m);
      detail::line(s.image, prev.x, prev.y, p.x, p.y, c);
      prev = p;
    }
    ++s.curves;
    for (const auto id : store.on_day(days[i])) {
      const auto& obs = store[id];
      detail::dot(s.image, obs.x, obs.y, obs.outlier ? Color{0, 0, 0} : c);
      ++s.points;
    }
  }
  return s;
}

inline PlotSummary emit_trajectory_plot(const TrajectorySet& models, const ObservationStore& store,
                                        const std::vector<int>& days, const std::filesystem::path& out,
                                        int width = 512, int height = 512) {
  auto s = trajectory_plot(models, store, days, width, height);
  write_png(out, s.image);
  return s;
}

enum class Axis { x, y };

/// One curve per requested minute: the daily models evaluated at that minute
/// across days, plus every observation at that minute (outliers included).
inline PlotSummary minute_plot(const TrajectorySet& models, const ObservationStore& store,
                               const std::vector<int>& minutes, Axis axis, int value_range, int px_per_day = 4) {
  if (models.empty()) fail(ErrorCode::day_without_model, "no trajectories to plot");
  if (minutes.empty()) fail(ErrorCode::invalid_argument, "no minutes requested");
  int first = models.begin()->first, last = models.rbegin()->first;
  if (!store.empty()) {
    first = std::min(first, *store.first_day());
    last = std::max(last, *store.last_day());
  }
  PlotSummary s;
  s.image = RgbImage((last - first + 1) * px_per_day, value_range, 255);
  auto pick = [axis](double x, double y) { return axis == Axis::x ? x : y; };
  for (std::size_t i = 0; i < minutes.size(); ++i) {
    const Color c = detail::palette(i);
    const int m = minutes[i];
    for (const auto id : store.at_minute(m)) {
      const auto& obs = store[id];
      detail::dot(s.image, (obs.day_index - first + 0.5) * px_per_day, pick(obs.x, obs.y), c, 0);
      ++s.points;
    }
    bool have_prev = false;
    double px = 0, py = 0;
    for (const auto& [day, t] : models) {
      if (m < t.minute_min || m > t.minute_max) {
        have_prev = false;
        continue;
      }
      const auto p = predict_position(t, m);
      const double x = (day - first + 0.5) * px_per_day, y = pick(p.x, p.y);
      if (have_prev) detail::line(s.image, px, py, x, y, c);
      px = x;
      py = y;
      have_prev = true;
    }
    ++s.curves;
  }
  return s;
}

/// Frame rendered in gray with a red crosshair at the model's position for its minute.
inline TrajectoryPoint annotate_frame(const SkyImage& img, const DailyTrajectory& traj,
                                      const std::filesystem::path& out, RgbImage* rendered = nullptr) {
  RgbImage rgb(img.width(), img.height());
  const double shift = img.bit_depth() > 8 ? double(1u << (img.bit_depth() - 8)) : 1.0;
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const auto v = std::uint8_t(std::min(255.0, img.at(x, y) / shift));
      rgb.put(x, y, v, v, v);
    }
  }
  const auto p = predict_position(traj, img.timestamp().minute_of_day + img.timestamp().second / 60.0);
  const int arm = std::max(6, img.width() / 40);
  detail::crosshair(rgb, p.x, p.y, arm, {255, 0, 0});
  write_png(out, rgb);
  if (rendered) *rendered = std::move(rgb);
  return p;
}

/// Looks up the frame's day (from its timestamp) in a model file, then annotates.
inline TrajectoryPoint annotate_frame(const SkyImage& img, const ModelFile& models, const std::filesystem::path& out,
                                      RgbImage* rendered = nullptr) {
  const int day = days_between(models.epoch, img.timestamp().date);
  const auto it = models.trajectories.find(day);
  if (it == models.trajectories.end()) {
    fail(ErrorCode::day_without_model, "no trajectory for " + img.timestamp().date.iso());
  }
  return annotate_frame(img, it->second, out, rendered);
}

}  // namespace suntrack
