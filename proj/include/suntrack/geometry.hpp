#pragma once

// Equidistant fisheye lens model and its undistortion onto a horizontal
// (gnomonic) plane.
//
// Conventions, used everywhere in the library:
//   * rasters: x rightward, y downward, pixel centres at integer coordinates;
//   * azimuth: measured from +x counterclockwise as seen on the raster
//     (i.e. towards -y), in [0, 2pi);
//   * zenith: angle from the camera axis, which points at the sky zenith.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <optional>
#include <vector>

#include "suntrack/error.hpp"
#include "suntrack/image.hpp"

namespace suntrack {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr double kHalfPi = 0.5 * std::numbers::pi;

constexpr double deg2rad(double deg) { return deg * (kPi / 180.0); }
constexpr double rad2deg(double rad) { return rad * (180.0 / kPi); }

struct PixelPoint {
  double x = 0.0;
  double y = 0.0;

  bool operator==(const PixelPoint&) const = default;
};

inline double distance(PixelPoint a, PixelPoint b) { return std::hypot(a.x - b.x, a.y - b.y); }

inline double wrap_two_pi(double a) {
  a = std::fmod(a, kTwoPi);
  if (a < 0.0) a += kTwoPi;
  return a >= kTwoPi ? 0.0 : a;
}

/// A direction on the upper hemisphere.
struct AngularDirection {
  double zenith = 0.0;   // [0, pi/2]
  double azimuth = 0.0;  // [0, 2pi), 0 when zenith == 0

  static AngularDirection make(double zenith, double azimuth) {
    require(zenith >= 0.0 && zenith <= kHalfPi, ErrorCode::invalid_argument, "zenith outside [0, pi/2]");
    return {zenith, zenith == 0.0 ? 0.0 : wrap_two_pi(azimuth)};
  }

  double elevation() const { return kHalfPi - zenith; }
};

/// Equidistant lens: radial distance from the centre is linear in zenith.
struct FisheyeModel {
  PixelPoint center{};
  double rim_radius = 0.0;        // pixels at max_zenith
  double max_zenith = kHalfPi;    // radians
  int image_width = 0;
  int image_height = 0;

  /// Centre at the raster centre, rim touching the shorter side.
  static FisheyeModel for_image(int width, int height, double max_zenith = kHalfPi) {
    FisheyeModel m;
    m.center = {(width - 1) / 2.0, (height - 1) / 2.0};
    m.rim_radius = std::min(width, height) / 2.0;
    m.max_zenith = max_zenith;
    m.image_width = width;
    m.image_height = height;
    m.validate();
    return m;
  }

  void validate() const {
    require(rim_radius > 0.0, ErrorCode::invalid_argument, "rim_radius must be positive");
    require(max_zenith > 0.0 && max_zenith <= kHalfPi, ErrorCode::invalid_argument,
            "max_zenith must be in (0, pi/2]");
    require(image_width > 0 && image_height > 0, ErrorCode::invalid_argument, "image size must be positive");
    require(center.x >= 0.0 && center.y >= 0.0 && center.x <= image_width - 1.0 && center.y <= image_height - 1.0,
            ErrorCode::invalid_argument, "fisheye centre outside the image");
  }

  /// Pixels per radian of zenith.
  double scale() const { return rim_radius / max_zenith; }

  bool operator==(const FisheyeModel&) const = default;
};

/// Square horizontal plane onto which the hemisphere is projected.
struct PlaneProjection {
  int size = 512;
  double fov_zenith = deg2rad(70.0);  // zenith reached at the plane's edge midpoints

  void validate() const {
    require(size >= 2, ErrorCode::invalid_argument, "plane size must be >= 2");
    require(fov_zenith > 0.0 && fov_zenith < kHalfPi, ErrorCode::invalid_argument,
            "fov_zenith must be in (0, pi/2)");
  }

  double half_width() const { return (size - 1) / 2.0; }
  PixelPoint center() const { return {half_width(), half_width()}; }
  /// Distance from the projection centre to the plane, in output pixels.
  double plane_height() const { return half_width() / std::tan(fov_zenith); }

  bool operator==(const PlaneProjection&) const = default;
};

inline PixelPoint direction_to_fisheye(const AngularDirection& dir, const FisheyeModel& model) {
  if (dir.zenith > model.max_zenith) {
    fail(ErrorCode::zenith_out_of_range, "zenith exceeds the lens field of view");
  }
  const double rho = model.scale() * dir.zenith;
  return {model.center.x + rho * std::cos(dir.azimuth), model.center.y - rho * std::sin(dir.azimuth)};
}

inline AngularDirection fisheye_to_direction(PixelPoint px, const FisheyeModel& model) {
  const double dx = px.x - model.center.x;
  const double dy = model.center.y - px.y;
  const double rho = std::hypot(dx, dy);
  if (rho > model.rim_radius * (1.0 + 1e-12)) fail(ErrorCode::outside_rim, "point outside the fisheye rim");
  const double zenith = std::min(rho / model.scale(), model.max_zenith);
  if (rho == 0.0) return {0.0, 0.0};
  return {zenith, wrap_two_pi(std::atan2(dy, dx))};
}

inline AngularDirection plane_to_direction(PixelPoint p, const PlaneProjection& proj) {
  const auto c = proj.center();
  const double dx = p.x - c.x;
  const double dy = c.y - p.y;
  const double r = std::hypot(dx, dy);
  if (r == 0.0) return {0.0, 0.0};
  return {std::atan(r / proj.plane_height()), wrap_two_pi(std::atan2(dy, dx))};
}

inline PixelPoint direction_to_plane(const AngularDirection& dir, const PlaneProjection& proj) {
  require(dir.zenith < kHalfPi, ErrorCode::zenith_out_of_range, "horizon has no gnomonic image");
  const auto c = proj.center();
  const double r = proj.plane_height() * std::tan(dir.zenith);
  return {c.x + r * std::cos(dir.azimuth), c.y - r * std::sin(dir.azimuth)};
}

enum class Sampling { bilinear, nearest };

/// Output pixel -> fractional fisheye source, NaN marking out-of-domain.
class RemapTable {
 public:
  RemapTable() = default;
  RemapTable(const FisheyeModel& model, const PlaneProjection& proj)
      : model_(model), proj_(proj),
        src_x_(std::size_t(proj.size) * proj.size, kOutside),
        src_y_(std::size_t(proj.size) * proj.size, kOutside) {}

  int size() const noexcept { return proj_.size; }
  const FisheyeModel& model() const noexcept { return model_; }
  const PlaneProjection& projection() const noexcept { return proj_; }

  std::optional<PixelPoint> source(int u, int v) const {
    const auto i = index(u, v);
    if (std::isnan(src_x_[i])) return std::nullopt;
    return PixelPoint{src_x_[i], src_y_[i]};
  }

  void set_source(int u, int v, PixelPoint p) {
    const auto i = index(u, v);
    src_x_[i] = p.x;
    src_y_[i] = p.y;
  }

  void mark_outside(int u, int v) {
    const auto i = index(u, v);
    src_x_[i] = kOutside;
    src_y_[i] = kOutside;
  }

  std::size_t in_domain_count() const {
    return std::size_t(std::count_if(src_x_.begin(), src_x_.end(), [](double x) { return !std::isnan(x); }));
  }

  bool operator==(const RemapTable& o) const {
    auto same = [](const std::vector<double>& a, const std::vector<double>& b) {
      return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
    };
    return model_ == o.model_ && proj_ == o.proj_ && same(src_x_, o.src_x_) && same(src_y_, o.src_y_);
  }

  // Raw access for serialization.
  std::vector<double>& raw_x() { return src_x_; }
  std::vector<double>& raw_y() { return src_y_; }
  const std::vector<double>& raw_x() const { return src_x_; }
  const std::vector<double>& raw_y() const { return src_y_; }

 private:
  static constexpr double kOutside = std::numeric_limits<double>::quiet_NaN();

  std::size_t index(int u, int v) const { return std::size_t(v) * proj_.size + std::size_t(u); }

  FisheyeModel model_{};
  PlaneProjection proj_{};
  std::vector<double> src_x_;
  std::vector<double> src_y_;
};

inline RemapTable build_remap(const FisheyeModel& model, const PlaneProjection& proj) {
  model.validate();
  proj.validate();
  RemapTable table(model, proj);
  for (int v = 0; v < proj.size; ++v) {
    for (int u = 0; u < proj.size; ++u) {
      const auto dir = plane_to_direction({double(u), double(v)}, proj);
      // Tolerance keeps the edge midpoints in domain when fov_zenith == max_zenith.
      if (dir.zenith > model.max_zenith * (1.0 + 1e-12)) {
        table.mark_outside(u, v);
        continue;
      }
      table.set_source(u, v, direction_to_fisheye({std::min(dir.zenith, model.max_zenith), dir.azimuth}, model));
    }
  }
  return table;
}

inline SkyImage apply_remap(const SkyImage& img, const RemapTable& table, Sampling sampling = Sampling::bilinear) {
  const auto& model = table.model();
  if (img.width() != model.image_width || img.height() != model.image_height) {
    fail(ErrorCode::dimension_mismatch, "image is " + std::to_string(img.width()) + "x" +
                                            std::to_string(img.height()) + ", remap expects " +
                                            std::to_string(model.image_width) + "x" +
                                            std::to_string(model.image_height));
  }
  SkyImage out(table.size(), table.size(), img.bit_depth(), 0);
  out.set_timestamp(img.timestamp());
  out.set_exposure(img.exposure());

  const int w = img.width();
  const int h = img.height();
  auto clamp_x = [w](int x) { return std::clamp(x, 0, w - 1); };
  auto clamp_y = [h](int y) { return std::clamp(y, 0, h - 1); };

  for (int v = 0; v < table.size(); ++v) {
    for (int u = 0; u < table.size(); ++u) {
      const auto src = table.source(u, v);
      if (!src) continue;
      if (sampling == Sampling::nearest) {
        out.at(u, v) = img.at(clamp_x(int(std::lround(src->x))), clamp_y(int(std::lround(src->y))));
        continue;
      }
      const double fx0 = std::floor(src->x);
      const double fy0 = std::floor(src->y);
      const double ax = src->x - fx0;
      const double ay = src->y - fy0;
      const int x0 = clamp_x(int(fx0)), x1 = clamp_x(int(fx0) + 1);
      const int y0 = clamp_y(int(fy0)), y1 = clamp_y(int(fy0) + 1);
      const double top = (1.0 - ax) * img.at(x0, y0) + ax * img.at(x1, y0);
      const double bottom = (1.0 - ax) * img.at(x0, y1) + ax * img.at(x1, y1);
      const double value = (1.0 - ay) * top + ay * bottom;
      out.at(u, v) = std::uint16_t(std::clamp(std::lround(value), 0L, long(img.max_value())));
    }
  }
  return out;
}

// Remap cache file, native little-endian:
//   char[8]  magic "SUNRMAP1"
//   uint32   format version (1)
//   int32    image_width, image_height, plane size
//   double   center.x, center.y, rim_radius, max_zenith, fov_zenith
//   double   size*size source x values, then size*size source y values (NaN = outside)
namespace detail {
inline constexpr char kRemapMagic[8] = {'S', 'U', 'N', 'R', 'M', 'A', 'P', '1'};
inline constexpr std::uint32_t kRemapVersion = 1;

template <typename T>
void write_pod(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) fail(ErrorCode::format_error, "truncated remap cache");
  return v;
}
}  // namespace detail

inline void save_remap(const RemapTable& table, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::io_failure, "cannot write " + path.string());
  const auto& m = table.model();
  const auto& p = table.projection();
  out.write(detail::kRemapMagic, sizeof detail::kRemapMagic);
  detail::write_pod(out, detail::kRemapVersion);
  detail::write_pod(out, std::int32_t(m.image_width));
  detail::write_pod(out, std::int32_t(m.image_height));
  detail::write_pod(out, std::int32_t(p.size));
  for (double v : {m.center.x, m.center.y, m.rim_radius, m.max_zenith, p.fov_zenith}) detail::write_pod(out, v);
  out.write(reinterpret_cast<const char*>(table.raw_x().data()), std::streamsize(table.raw_x().size() * sizeof(double)));
  out.write(reinterpret_cast<const char*>(table.raw_y().data()), std::streamsize(table.raw_y().size() * sizeof(double)));
  if (!out) fail(ErrorCode::io_failure, "short write to " + path.string());
}

inline RemapTable load_remap(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::io_failure, "cannot read " + path.string());
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, detail::kRemapMagic, sizeof magic) != 0) {
    fail(ErrorCode::format_error, path.string() + " is not a remap cache");
  }
  if (detail::read_pod<std::uint32_t>(in) != detail::kRemapVersion) {
    fail(ErrorCode::format_error, "unsupported remap cache version");
  }
  FisheyeModel m;
  PlaneProjection p;
  m.image_width = detail::read_pod<std::int32_t>(in);
  m.image_height = detail::read_pod<std::int32_t>(in);
  p.size = detail::read_pod<std::int32_t>(in);
  m.center.x = detail::read_pod<double>(in);
  m.center.y = detail::read_pod<double>(in);
  m.rim_radius = detail::read_pod<double>(in);
  m.max_zenith = detail::read_pod<double>(in);
  p.fov_zenith = detail::read_pod<double>(in);
  m.validate();
  p.validate();
  RemapTable table(m, p);
  in.read(reinterpret_cast<char*>(table.raw_x().data()), std::streamsize(table.raw_x().size() * sizeof(double)));
  in.read(reinterpret_cast<char*>(table.raw_y().data()), std::streamsize(table.raw_y().size() * sizeof(double)));
  if (!in) fail(ErrorCode::format_error, "truncated remap cache");
  return table;
}

/// Loads the cache when it matches the requested geometry, otherwise builds and rewrites it.
inline RemapTable cached_remap(const FisheyeModel& model, const PlaneProjection& proj,
                               const std::filesystem::path& cache) {
  if (std::filesystem::exists(cache)) {
    try {
      auto table = load_remap(cache);
      if (table.model() == model && table.projection() == proj) return table;
    } catch (const Error&) {
      // stale or foreign file; rebuilt below
    }
  }
  auto table = build_remap(model, proj);
  save_remap(table, cache);
  return table;
}

}  // namespace suntrack
