#pragma once

// Synthetic fisheye sky scenes with exact ground truth.
//
// A simple declination / hour-angle ephemeris drives the Sun; `minute` is
// local apparent solar time, so solar noon is minute 720. Frames are pure
// functions of (config, day_index, minute): every frame draws from its own
// generator seeded from (rng_seed, day_index, minute).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "suntrack/calendar.hpp"
#include "suntrack/detection.hpp"
#include "suntrack/error.hpp"
#include "suntrack/filenames.hpp"
#include "suntrack/geometry.hpp"
#include "suntrack/image.hpp"
#include "suntrack/parallel.hpp"
#include "suntrack/png_io.hpp"
#include "suntrack/store_io.hpp"

namespace suntrack {

enum class OcclusionStyle {
  near_threshold,  // hidden Sun glows just below the saturation threshold
  dim,             // hidden Sun glows well below it
};

struct SceneConfig {
  double latitude_deg = 48.7;
  int image_size = 512;
  int bit_depth = 8;
  double sun_disk_radius = 4.0;  // at the zenith; grows towards the horizon
  double cloud_probability = 0.0;
  double flare_probability = 0.0;
  double noise_sigma = 2.0;
  std::uint64_t rng_seed = 1;
  Date start_date{2017, 3, 1};  // calendar date of day_index 0
  OcclusionStyle occlusion = OcclusionStyle::near_threshold;
  double p = 0.99;  // visibility threshold the renderer must respect

  void validate() const {
    require(std::abs(latitude_deg) <= 90.0, ErrorCode::invalid_argument, "latitude must be within [-90, 90]");
    require(image_size >= 16, ErrorCode::invalid_argument, "image_size must be >= 16");
    require(bit_depth >= 8 && bit_depth <= 16, ErrorCode::invalid_argument, "bit_depth must be in [8, 16]");
    require(sun_disk_radius > 0.0, ErrorCode::invalid_argument, "sun_disk_radius must be positive");
    require(cloud_probability >= 0.0 && cloud_probability <= 1.0 && flare_probability >= 0.0 &&
                flare_probability <= 1.0,
            ErrorCode::invalid_argument, "probabilities must be in [0, 1]");
    require(noise_sigma >= 0.0, ErrorCode::invalid_argument, "noise_sigma must be >= 0");
    require(p > 0.0 && p < 1.0, ErrorCode::invalid_argument, "p must be in (0, 1)");
    require(start_date.valid(), ErrorCode::invalid_argument, "invalid start date");
  }

  FisheyeModel fisheye() const { return FisheyeModel::for_image(image_size, image_size, kHalfPi); }
};

struct GroundTruthRecord {
  int day_index = 0;
  int minute = 0;
  double sun_x = 0.0;
  double sun_y = 0.0;
  bool occluded = false;
  bool flare_present = false;
  bool sun_above_horizon = false;

  bool operator==(const GroundTruthRecord&) const = default;
};

/// Solar declination in radians for a 1-based day of year.
inline double solar_declination(int day_of_year) {
  return deg2rad(-23.44) * std::cos(kTwoPi * (day_of_year + 10) / 365.0);
}

/// Solar elevation in radians (negative below the horizon).
inline double solar_elevation(int day_of_year, double minute, double latitude_deg) {
  const double phi = deg2rad(latitude_deg);
  const double delta = solar_declination(day_of_year);
  const double h = deg2rad(15.0 * (minute / 60.0 - 12.0));
  const double s = std::sin(phi) * std::sin(delta) + std::cos(phi) * std::cos(delta) * std::cos(h);
  return std::asin(std::clamp(s, -1.0, 1.0));
}

/// Direction of the Sun in camera coordinates (east = +x, north = up in the
/// raster), or nullopt when the Sun is at or below the horizon.
inline std::optional<AngularDirection> solar_direction(int day_of_year, double minute, double latitude_deg) {
  require(day_of_year >= 1 && day_of_year <= 366, ErrorCode::invalid_argument, "day_of_year must be in [1, 366]");
  const double el = solar_elevation(day_of_year, minute, latitude_deg);
  if (el <= 0.0) return std::nullopt;
  const double phi = deg2rad(latitude_deg);
  const double delta = solar_declination(day_of_year);
  const double h = deg2rad(15.0 * (minute / 60.0 - 12.0));
  // Compass azimuth, clockwise from north.
  const double compass = std::atan2(std::sin(h), std::cos(h) * std::sin(phi) - std::tan(delta) * std::cos(phi)) + kPi;
  return AngularDirection::make(kHalfPi - el, kHalfPi - compass);
}

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

inline std::uint64_t frame_seed(std::uint64_t seed, int day_index, int minute) {
  return splitmix64(seed ^ splitmix64(std::uint64_t(std::int64_t(day_index) * kMinutesPerDay + minute)));
}

}  // namespace detail

struct RenderedFrame {
  SkyImage short_exposure;
  SkyImage long_exposure;
  GroundTruthRecord truth;
};

/// Holds per-configuration precomputation (sky background, noise table) so
/// that rendering many frames stays cheap. Rendering is const and thread-safe.
class SceneRenderer {
 public:
  explicit SceneRenderer(const SceneConfig& cfg) : SceneRenderer(cfg, cfg.fisheye()) {}

  SceneRenderer(const SceneConfig& cfg, const FisheyeModel& model) : cfg_(cfg), model_(model) {
    cfg_.validate();
    model_.validate();
    require(model_.image_width == cfg_.image_size && model_.image_height == cfg_.image_size,
            ErrorCode::dimension_mismatch, "fisheye model does not match the scene image size");
    const int n = cfg_.image_size;
    const double scale = double((1u << cfg_.bit_depth) - 1u) / 255.0;
    background_.resize(std::size_t(n) * n);
    for (int y = 0; y < n; ++y) {
      for (int x = 0; x < n; ++x) {
        const double r = std::hypot(x - model_.center.x, y - model_.center.y) / model_.rim_radius;
        // Sky brightens towards the horizon; outside the rim is black.
        background_[std::size_t(y) * n + x] = r <= 1.0 ? float(scale * (45.0 + 35.0 * r * r)) : -1.0f;
      }
    }
    std::mt19937_64 rng(cfg_.rng_seed);
    std::normal_distribution<float> normal(0.0f, 1.0f);
    noise_.resize(kNoiseTableSize);
    for (auto& v : noise_) v = normal(rng);
    max_value_ = std::uint16_t((1u << cfg_.bit_depth) - 1u);
    // Highest intensity that is never classified as saturated.
    cap_ = std::uint16_t(std::floor(saturation_threshold(cfg_.bit_depth, cfg_.p) - 1.0));
  }

  const SceneConfig& config() const { return cfg_; }
  const FisheyeModel& model() const { return model_; }
  std::uint16_t below_threshold_cap() const { return cap_; }

  /// Sun disk radius in pixels at a zenith angle.
  double disk_radius(double zenith) const {
    const double z = zenith / kHalfPi;
    return cfg_.sun_disk_radius * (1.0 + 2.75 * z * z * z * z);
  }

  GroundTruthRecord truth(int day_index, int minute) const { return plan(day_index, minute).truth; }

  RenderedFrame render(int day_index, int minute, bool with_long = true) const {
    const auto pl = plan(day_index, minute);
    RenderedFrame frame;
    frame.truth = pl.truth;
    frame.short_exposure = draw(pl, false);
    if (with_long) frame.long_exposure = draw(pl, true);
    const Timestamp ts{cfg_.start_date.plus_days(day_index), minute, 0};
    frame.short_exposure.set_timestamp(ts);
    frame.short_exposure.set_exposure(Exposure::Short);
    if (with_long) {
      frame.long_exposure.set_timestamp(ts);
      frame.long_exposure.set_exposure(Exposure::Long);
    }
    return frame;
  }

 private:
  static constexpr std::size_t kNoiseTableSize = std::size_t(1) << 20;

  struct Plan {
    GroundTruthRecord truth;
    double sun_radius = 0.0;
    PixelPoint flare{};
    double flare_radius = 0.0;
    std::size_t noise_offset = 0;
  };

  static std::size_t disk_pixel_count(PixelPoint c, double r) {
    std::size_t count = 0;
    const int x0 = int(std::floor(c.x - r)), x1 = int(std::ceil(c.x + r));
    const int y0 = int(std::floor(c.y - r)), y1 = int(std::ceil(c.y + r));
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x)
        if ((x - c.x) * (x - c.x) + (y - c.y) * (y - c.y) <= r * r) ++count;
    return count;
  }

  Plan plan(int day_index, int minute) const {
    Plan pl;
    pl.truth.day_index = day_index;
    pl.truth.minute = minute;
    std::mt19937_64 rng(detail::frame_seed(cfg_.rng_seed, day_index, minute));
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    const double u_cloud = uniform(rng);
    const double u_flare = uniform(rng);
    pl.noise_offset = std::size_t(rng() % kNoiseTableSize);

    const Date date = cfg_.start_date.plus_days(day_index);
    const auto dir = solar_direction(date.day_of_year(), minute, cfg_.latitude_deg);
    if (!dir || dir->zenith > model_.max_zenith) return pl;

    const auto sun = direction_to_fisheye(*dir, model_);
    pl.truth.sun_above_horizon = true;
    pl.truth.sun_x = sun.x;
    pl.truth.sun_y = sun.y;
    pl.truth.occluded = u_cloud < cfg_.cloud_probability;
    pl.sun_radius = disk_radius(dir->zenith);
    if (!pl.truth.occluded && u_flare < cfg_.flare_probability) place_flare(pl);
    return pl;
  }

  // Flares sit roughly opposite the Sun across the optical centre, at least
  // 100 px away and never larger than half the Sun disk.
  void place_flare(Plan& pl) const {
    const PixelPoint sun{pl.truth.sun_x, pl.truth.sun_y};
    const PixelPoint c = model_.center;
    double vx = c.x - sun.x, vy = c.y - sun.y;
    const double len = std::hypot(vx, vy);
    if (len < 1.0) {
      vx = 0.5 * model_.rim_radius;
      vy = 0.0;
    }
    double radius = 0.6 * pl.sun_radius;
    const std::size_t sun_pixels = disk_pixel_count(sun, pl.sun_radius);
    while (radius > 0.5 && 2 * disk_pixel_count({0.3, 0.3}, radius) > sun_pixels) radius *= 0.9;

    for (double s : {0.6, 1.0, 1.4, 0.3}) {
      for (double rot : {0.0, 0.5, -0.5, 1.0, -1.0, 1.5, -1.5}) {
        const double fx = c.x + s * (vx * std::cos(rot) - vy * std::sin(rot));
        const double fy = c.y + s * (vx * std::sin(rot) + vy * std::cos(rot));
        const PixelPoint f{fx, fy};
        if (distance(f, c) > model_.rim_radius - radius - 1.0) continue;
        if (distance(f, sun) < 100.0) continue;
        if (2 * disk_pixel_count(f, radius) > sun_pixels) continue;
        pl.flare = f;
        pl.flare_radius = radius;
        pl.truth.flare_present = true;
        return;
      }
    }
  }

  template <typename Fn>
  void for_disk(SkyImage& img, PixelPoint c, double r, Fn&& fn) const {
    const int n = cfg_.image_size;
    const int x0 = std::max(0, int(std::floor(c.x - r))), x1 = std::min(n - 1, int(std::ceil(c.x + r)));
    const int y0 = std::max(0, int(std::floor(c.y - r))), y1 = std::min(n - 1, int(std::ceil(c.y + r)));
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const double d2 = (x - c.x) * (x - c.x) + (y - c.y) * (y - c.y);
        if (d2 <= r * r) fn(img.at(x, y), std::sqrt(d2));
      }
    }
  }

  SkyImage draw(const Plan& pl, bool long_exposure) const {
    const int n = cfg_.image_size;
    const double gain = long_exposure ? 2.5 : 1.0;
    const double scale = double(max_value_) / 255.0;
    SkyImage img(n, n, cfg_.bit_depth, 0);
    auto px = img.pixels();

    const PixelPoint sun{pl.truth.sun_x, pl.truth.sun_y};
    const double glow_sigma = 8.0 * std::max(pl.sun_radius, 1.0);
    const double glow_amp = pl.truth.sun_above_horizon ? scale * (pl.truth.occluded ? 50.0 : 110.0) : 0.0;
    // The Gaussian glow factors into per-column and per-row terms.
    std::vector<double> gx(static_cast<std::size_t>(n)), gy(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
      gx[std::size_t(k)] = std::exp(-0.5 * (k - sun.x) * (k - sun.x) / (glow_sigma * glow_sigma));
      gy[std::size_t(k)] = std::exp(-0.5 * (k - sun.y) * (k - sun.y) / (glow_sigma * glow_sigma));
    }

    const std::size_t mask = kNoiseTableSize - 1;
    for (int y = 0; y < n; ++y) {
      for (int x = 0; x < n; ++x) {
        const std::size_t i = std::size_t(y) * n + x;
        const float base = background_[i];
        if (base < 0.0f) continue;
        double v = gain * base;
        if (glow_amp > 0.0) {
          const double d2 = (x - sun.x) * (x - sun.x) + (y - sun.y) * (y - sun.y);
          if (d2 < 16.0 * glow_sigma * glow_sigma) v += gain * glow_amp * gx[std::size_t(x)] * gy[std::size_t(y)];
        }
        v += cfg_.noise_sigma * scale * noise_[(pl.noise_offset + i) & mask];
        px[i] = std::uint16_t(std::clamp(std::lround(v), 0L, long(cap_)));
      }
    }
    if (!pl.truth.sun_above_horizon) return img;

    const double area_factor = long_exposure ? std::sqrt(3.0) : 1.0;
    if (pl.truth.occluded) {
      // Cloud lit from behind: bright, never saturated.
      const double peak = cfg_.occlusion == OcclusionStyle::near_threshold ? double(cap_) : 0.7 * max_value_;
      const double r = 3.0 * pl.sun_radius * area_factor;
      for_disk(img, sun, r, [&](std::uint16_t& p, double d) {
        const double v = peak * (1.0 - 0.3 * (d / r) * (d / r));
        p = std::max(p, std::uint16_t(std::clamp(std::lround(v), 0L, long(cap_))));
      });
      return img;
    }
    for_disk(img, sun, pl.sun_radius * area_factor, [&](std::uint16_t& p, double) { p = max_value_; });
    if (pl.truth.flare_present) {
      for_disk(img, pl.flare, pl.flare_radius * area_factor, [&](std::uint16_t& p, double) { p = max_value_; });
    }
    return img;
  }

  SceneConfig cfg_;
  FisheyeModel model_;
  std::vector<float> background_;
  std::vector<float> noise_;
  std::uint16_t max_value_ = 255;
  std::uint16_t cap_ = 251;
};

inline RenderedFrame render_frame(const SceneConfig& cfg, int day_index, int minute, const FisheyeModel& model) {
  return SceneRenderer(cfg, model).render(day_index, minute);
}

// Ground-truth file, same family as the observation store:
//   # suntrack ground truth v1 epoch=YYYY-MM-DD
//   day_index,date,minute,sun_x,sun_y,occluded,flare_present,sun_above_horizon,source_file
// sun_x / sun_y are empty when the Sun is below the horizon.
inline constexpr std::string_view kTruthTitle = "suntrack ground truth";
inline constexpr std::string_view kTruthColumns =
    "day_index,date,minute,sun_x,sun_y,occluded,flare_present,sun_above_horizon,source_file";

struct TruthEntry {
  GroundTruthRecord record;
  std::string source_file;
};

struct TruthFile {
  Date epoch;
  std::vector<TruthEntry> entries;
};

inline std::string serialize_truth(const TruthFile& tf) {
  std::string out = io::header(kTruthTitle, 1, tf.epoch);
  out += kTruthColumns;
  out += '\n';
  for (const auto& [r, src] : tf.entries) {
    out += std::to_string(r.day_index) + ',' + tf.epoch.plus_days(r.day_index).iso() + ',' +
           std::to_string(r.minute) + ',' + (r.sun_above_horizon ? io::format_real(r.sun_x) : "") + ',' +
           (r.sun_above_horizon ? io::format_real(r.sun_y) : "") + ',' + (r.occluded ? '1' : '0') + ',' +
           (r.flare_present ? '1' : '0') + ',' + (r.sun_above_horizon ? '1' : '0') + ',' + src + '\n';
  }
  return out;
}

inline TruthFile parse_truth(std::string_view text) {
  const auto ls = io::lines(text);
  if (ls.size() < 2) fail(ErrorCode::format_error, "truth file is missing its header");
  TruthFile tf{io::parse_header(ls[0], kTruthTitle, 1), {}};
  if (ls[1] != kTruthColumns) fail(ErrorCode::format_error, "unexpected truth columns");
  for (std::size_t i = 2; i < ls.size(); ++i) {
    const auto f = io::split(ls[i], ',');
    if (f.size() != 9) fail(ErrorCode::format_error, "truth line " + std::to_string(i + 1) + " has wrong arity");
    TruthEntry e;
    e.record.day_index = io::parse_int(f[0]);
    e.record.minute = io::parse_int(f[2]);
    e.record.sun_above_horizon = io::parse_flag(f[7]);
    if (e.record.sun_above_horizon) {
      e.record.sun_x = io::parse_real(f[3]);
      e.record.sun_y = io::parse_real(f[4]);
    }
    e.record.occluded = io::parse_flag(f[5]);
    e.record.flare_present = io::parse_flag(f[6]);
    e.source_file = std::string(f[8]);
    tf.entries.push_back(std::move(e));
  }
  return tf;
}

inline TruthFile load_truth(const std::filesystem::path& path) { return parse_truth(io::read_file(path)); }

inline constexpr const char* kTruthFileName = "truth.csv";

struct DatasetManifest {
  std::size_t frames = 0;  // frame pairs written (short + long)
  std::size_t visible = 0;
  std::size_t occluded = 0;
  std::size_t flares = 0;
  std::filesystem::path truth_path;
};

/// Daylight (day_index, minute) pairs on a step_minutes grid starting at minute 0.
inline std::vector<std::pair<int, int>> daylight_schedule(const SceneConfig& cfg, int days, int step_minutes) {
  std::vector<std::pair<int, int>> out;
  for (int d = 0; d < days; ++d) {
    const int doy = cfg.start_date.plus_days(d).day_of_year();
    for (int m = 0; m < kMinutesPerDay; m += step_minutes) {
      if (solar_direction(doy, m, cfg.latitude_deg)) out.emplace_back(d, m);
    }
  }
  return out;
}

/// Writes short/long PNG pairs for every daylight frame plus the truth file.
inline DatasetManifest generate_dataset(const SceneConfig& cfg, int days, int step_minutes,
                                        const std::filesystem::path& out_dir,
                                        unsigned threads = default_thread_count()) {
  cfg.validate();
  require(days >= 1, ErrorCode::invalid_argument, "days must be >= 1");
  require(step_minutes >= 1, ErrorCode::invalid_argument, "step must be >= 1");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec || !std::filesystem::is_directory(out_dir)) {
    fail(ErrorCode::io_failure, "cannot create output directory " + out_dir.string());
  }

  const SceneRenderer renderer(cfg);
  const auto schedule = daylight_schedule(cfg, days, step_minutes);
  TruthFile truth{cfg.start_date, std::vector<TruthEntry>(schedule.size())};

  parallel_for(
      schedule.size(),
      [&](std::size_t i) {
        const auto [day, minute] = schedule[i];
        const auto frame = renderer.render(day, minute);
        const Date date = cfg.start_date.plus_days(day);
        const auto short_name = frame_filename(date, minute, Exposure::Short);
        write_png(out_dir / short_name, frame.short_exposure);
        write_png(out_dir / frame_filename(date, minute, Exposure::Long), frame.long_exposure);
        truth.entries[i] = {frame.truth, short_name};
      },
      threads);

  DatasetManifest manifest;
  manifest.frames = schedule.size();
  for (const auto& e : truth.entries) {
    if (e.record.occluded) {
      ++manifest.occluded;
    } else {
      ++manifest.visible;
    }
    if (e.record.flare_present) ++manifest.flares;
  }
  manifest.truth_path = out_dir / kTruthFileName;
  io::write_file(manifest.truth_path, serialize_truth(truth));
  return manifest;
}

}  // namespace suntrack
