#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

#include "suntrack/detection.hpp"
#include "suntrack/png_io.hpp"
#include "suntrack/synth.hpp"
#include "test_support.hpp"

namespace suntrack {
namespace {

// Independent daylight count: the Sun is up while |h| < h0 with cos h0 = -tan(phi) tan(delta).
int oracle_daylight_frames(double latitude_deg, const Date& start, int days, int step) {
  int count = 0;
  for (int d = 0; d < days; ++d) {
    const int doy = start.plus_days(d).day_of_year();
    const double delta_deg = -23.44 * std::cos(2.0 * std::numbers::pi * (doy + 10) / 365.0);
    const double c = -std::tan(latitude_deg * std::numbers::pi / 180.0) * std::tan(delta_deg * std::numbers::pi / 180.0);
    const double h0_deg = std::acos(std::clamp(c, -1.0, 1.0)) * 180.0 / std::numbers::pi;
    for (int m = 0; m < 1440; m += step)
      if (std::abs(15.0 * (m / 60.0 - 12.0)) < h0_deg) ++count;
  }
  return count;
}

TEST(SolarDirection, EquinoxNoonElevation) {
  const auto dir = solar_direction(81, 720, 48.7);
  ASSERT_TRUE(dir);
  EXPECT_NEAR(rad2deg(dir->elevation()), 41.3, 0.5);
}

TEST(SolarDirection, SolsticeNoonElevation) {
  const auto dir = solar_direction(172, 720, 48.7);
  ASSERT_TRUE(dir);
  EXPECT_NEAR(rad2deg(dir->elevation()), 64.7, 0.5);
}

TEST(SolarDirection, WinterMidnightIsBelowHorizon) {
  for (double lat : {-60.0, -30.0, 0.0, 30.0, 48.7, 60.0}) {
    const int winter_doy = lat >= 0 ? 355 : 172;
    EXPECT_FALSE(solar_direction(winter_doy, 0, lat)) << lat;
  }
}

TEST(SolarDirection, NoonSunIsDueSouthAtNorthernLatitude) {
  // Camera frame: east = +x, north = up, so due south is azimuth 270 degrees.
  const auto dir = solar_direction(100, 720, 48.7);
  ASSERT_TRUE(dir);
  EXPECT_NEAR(rad2deg(dir->azimuth), 270.0, 1e-6);
  const auto morning = solar_direction(100, 540, 48.7);
  ASSERT_TRUE(morning);
  EXPECT_GT(std::cos(morning->azimuth), 0.0);  // eastern half of the image
}

TEST(SolarDirection, DayOfYearValidated) {
  EXPECT_THROW(solar_direction(0, 720, 48.7), Error);
  EXPECT_THROW(solar_direction(367, 720, 48.7), Error);
}

TEST(SynthProperty, GroundTruthIsSmooth) {
  SceneConfig cfg;
  const auto model = cfg.fisheye();
  double worst = 0.0;
  for (int doy = 1; doy <= 365; doy += 4) {
    std::optional<PixelPoint> prev;
    for (int m = 0; m < 1440; ++m) {
      const auto dir = solar_direction(doy, m, cfg.latitude_deg);
      if (!dir) {
        prev.reset();
        continue;
      }
      const auto p = direction_to_fisheye(*dir, model);
      if (prev) worst = std::max(worst, distance(p, *prev));
      prev = p;
    }
  }
  EXPECT_LT(worst, 2.0);
}

TEST(RenderFrame, ClearNoonFrameIsDetectedWithinOnePixel) {
  SceneConfig cfg;
  const auto f = render_frame(cfg, 30, 720, cfg.fisheye());
  EXPECT_TRUE(f.truth.sun_above_horizon);
  EXPECT_FALSE(f.truth.occluded);
  ASSERT_EQ(classify(f.short_exposure, DetectionConfig{}).label, Visibility::VisibleSun);
  const auto d = localize(f.short_exposure, DetectionConfig{});
  EXPECT_LT(std::hypot(d.x - f.truth.sun_x, d.y - f.truth.sun_y), 1.0);
}

TEST(RenderFrame, OccludedFramesAreHidden) {
  for (auto style : {OcclusionStyle::near_threshold, OcclusionStyle::dim}) {
    SceneConfig cfg;
    cfg.cloud_probability = 1.0;
    cfg.occlusion = style;
    const SceneRenderer r(cfg);
    for (int m = 420; m <= 1020; m += 60) {
      const auto f = r.render(10, m);
      ASSERT_TRUE(f.truth.occluded);
      EXPECT_EQ(classify(f.short_exposure, DetectionConfig{}).label, Visibility::HiddenSun);
      EXPECT_EQ(classify(f.long_exposure, DetectionConfig{}).label, Visibility::HiddenSun);
      EXPECT_LE(f.short_exposure.max_pixel(), std::floor(0.99 * 255 - 1));
      if (style == OcclusionStyle::dim) {
        EXPECT_LE(f.short_exposure.max_pixel(), 0.7 * 255 + 0.5);
      }
    }
  }
}

TEST(RenderFrame, NearThresholdOcclusionPeaksJustBelowThreshold) {
  SceneConfig cfg;
  cfg.cloud_probability = 1.0;
  const auto f = render_frame(cfg, 10, 720, cfg.fisheye());
  EXPECT_EQ(f.short_exposure.max_pixel(), SceneRenderer(cfg).below_threshold_cap());
}

TEST(RenderFrame, VisibilityMatchesTruthOverADay) {
  SceneConfig cfg;
  cfg.cloud_probability = 0.4;
  cfg.flare_probability = 0.2;
  const SceneRenderer r(cfg);
  for (const auto& [day, minute] : daylight_schedule(cfg, 1, 10)) {
    const auto f = r.render(day, minute);
    const bool visible = classify(f.short_exposure, DetectionConfig{}).visible();
    EXPECT_EQ(visible, !f.truth.occluded) << minute;
  }
}

TEST(RenderFrame, NightFrameHasNoSun) {
  SceneConfig cfg;
  const auto f = render_frame(cfg, 0, 0, cfg.fisheye());
  EXPECT_FALSE(f.truth.sun_above_horizon);
  EXPECT_EQ(classify(f.short_exposure, DetectionConfig{}).label, Visibility::HiddenSun);
}

TEST(RenderFrame, FlareIsSmallAndFarFromSun) {
  SceneConfig cfg;
  cfg.flare_probability = 1.0;
  const SceneRenderer r(cfg);
  int with_flare = 0;
  for (int m = 480; m <= 960; m += 30) {
    const auto f = r.render(40, m, false);
    if (!f.truth.flare_present) continue;
    ++with_flare;
    const auto mask = saturated_mask(f.short_exposure, DetectionConfig{});
    const auto sun = detail::largest_component(mask, cfg.image_size, cfg.image_size);
    const std::size_t flare_pixels = mask.size() - sun.size();
    ASSERT_GT(flare_pixels, 0u);
    EXPECT_LE(2 * flare_pixels, sun.size());
    std::vector<bool> in_sun(std::size_t(cfg.image_size) * cfg.image_size, false);
    for (const auto& p : sun) in_sun[std::size_t(p.y) * cfg.image_size + p.x] = true;
    for (const auto& p : mask) {
      if (in_sun[std::size_t(p.y) * cfg.image_size + p.x]) continue;
      EXPECT_GE(std::hypot(p.x - f.truth.sun_x, p.y - f.truth.sun_y), 100.0 - 2 * cfg.sun_disk_radius);
    }
    const auto d = localize(f.short_exposure, DetectionConfig{});
    EXPECT_LT(std::hypot(d.x - f.truth.sun_x, d.y - f.truth.sun_y), 1.0);
  }
  EXPECT_GT(with_flare, 10);
}

TEST(RenderFrame, LongExposureSaturatesAboutThreeTimesTheArea) {
  SceneConfig cfg;
  const SceneRenderer r(cfg);
  for (int m : {600, 720, 900}) {
    const auto f = r.render(50, m);
    const double s = double(saturated_mask(f.short_exposure, DetectionConfig{}).size());
    const double l = double(saturated_mask(f.long_exposure, DetectionConfig{}).size());
    EXPECT_GT(l / s, 2.3);
    EXPECT_LT(l / s, 3.7);
  }
}

TEST(RenderFrame, DiskGrowsTowardsHorizon) {
  SceneConfig cfg;
  const SceneRenderer r(cfg);
  EXPECT_DOUBLE_EQ(r.disk_radius(0.0), cfg.sun_disk_radius);
  double prev = 0.0;
  for (double z = 0.0; z <= kHalfPi; z += 0.1) {
    EXPECT_GE(r.disk_radius(z), prev);
    prev = r.disk_radius(z);
  }
}

TEST(RenderFrame, DeterministicUnderFixedSeed) {
  SceneConfig cfg;
  cfg.cloud_probability = 0.3;
  cfg.flare_probability = 0.3;
  cfg.rng_seed = 99;
  const auto a = render_frame(cfg, 12, 600, cfg.fisheye());
  const auto b = SceneRenderer(cfg).render(12, 600);
  EXPECT_EQ(a.short_exposure, b.short_exposure);
  EXPECT_EQ(a.long_exposure, b.long_exposure);
  EXPECT_EQ(a.truth, b.truth);
  cfg.rng_seed = 100;
  EXPECT_NE(render_frame(cfg, 12, 600, cfg.fisheye()).short_exposure, a.short_exposure);
}

TEST(RenderFrame, SixteenBitScene) {
  SceneConfig cfg;
  cfg.bit_depth = 16;
  const auto f = render_frame(cfg, 5, 700, cfg.fisheye());
  EXPECT_EQ(f.short_exposure.bit_depth(), 16);
  EXPECT_EQ(f.short_exposure.max_pixel(), 65535);
  const auto d = localize(f.short_exposure, DetectionConfig{});
  EXPECT_LT(std::hypot(d.x - f.truth.sun_x, d.y - f.truth.sun_y), 1.0);
}

TEST(GenerateDataset, OneDayEveryTwoHours) {
  testing::ScratchDir dir;
  SceneConfig cfg;
  const auto manifest = generate_dataset(cfg, 1, 120, dir.path(), 1);
  EXPECT_LE(manifest.frames, 12u);
  EXPECT_GT(manifest.frames, 0u);
  const auto truth = load_truth(manifest.truth_path);
  ASSERT_EQ(truth.entries.size(), manifest.frames);
  EXPECT_EQ(truth.epoch, cfg.start_date);
  for (const auto& e : truth.entries) {
    EXPECT_TRUE(e.record.sun_above_horizon);
    EXPECT_EQ(e.record.minute % 120, 0);
    const auto short_path = dir / e.source_file;
    ASSERT_TRUE(std::filesystem::exists(short_path));
    auto long_name = e.source_file;
    long_name.replace(long_name.find("_short"), 6, "_long");
    EXPECT_TRUE(std::filesystem::exists(dir / long_name));
    const auto img = read_sky_image(short_path, Channel::gray);
    EXPECT_EQ(img.width(), cfg.image_size);
    const auto name = parse_frame_filename(e.source_file);
    ASSERT_TRUE(name);
    EXPECT_EQ(name->timestamp.minute_of_day, e.record.minute);
    EXPECT_EQ(name->timestamp.date, cfg.start_date);
    EXPECT_EQ(name->exposure, Exposure::Short);
  }
}

TEST(GenerateDataset, ManifestCountMatchesDaylightOracle) {
  SceneConfig cfg;
  const auto schedule = daylight_schedule(cfg, 90, 5);
  EXPECT_EQ(int(schedule.size()), oracle_daylight_frames(cfg.latitude_deg, cfg.start_date, 90, 5));
  testing::ScratchDir dir;
  const auto manifest = generate_dataset(cfg, 2, 5, dir.path(), 1);
  EXPECT_EQ(int(manifest.frames), oracle_daylight_frames(cfg.latitude_deg, cfg.start_date, 2, 5));
  EXPECT_EQ(manifest.visible + manifest.occluded, manifest.frames);
}

TEST(GenerateDataset, UnwritableDirectoryIsIoFailure) {
  testing::ScratchDir dir;
  {
    std::ofstream(dir / "plain_file") << "x";
  }
  try {
    generate_dataset(SceneConfig{}, 1, 120, dir / "plain_file" / "sub", 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::io_failure);
  }
}

TEST(TruthFile, RoundTrip) {
  TruthFile tf{Date{2018, 6, 1}, {}};
  GroundTruthRecord a{3, 600, 123.25, 77.5, false, true, true};
  GroundTruthRecord b{3, 10, 0.0, 0.0, false, false, false};
  tf.entries.push_back({a, "x_short.png"});
  tf.entries.push_back({b, "y_short.png"});
  const auto back = parse_truth(serialize_truth(tf));
  EXPECT_EQ(back.epoch, tf.epoch);
  ASSERT_EQ(back.entries.size(), 2u);
  EXPECT_EQ(back.entries[0].record, a);
  EXPECT_EQ(back.entries[1].record, b);
  EXPECT_EQ(back.entries[0].source_file, "x_short.png");
}

TEST(SceneConfig, Validation) {
  SceneConfig cfg;
  cfg.latitude_deg = 91;
  EXPECT_THROW(SceneRenderer{cfg}, Error);
  cfg = {};
  cfg.cloud_probability = 1.5;
  EXPECT_THROW(SceneRenderer{cfg}, Error);
}

}  // namespace
}  // namespace suntrack
