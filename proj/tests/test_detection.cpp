#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "suntrack/detection.hpp"
#include "suntrack/synth.hpp"

namespace suntrack {
namespace {

void fill_block(SkyImage& img, int cx, int cy, int half, std::uint16_t v = 255) {
  for (int y = cy - half; y <= cy + half; ++y)
    for (int x = cx - half; x <= cx + half; ++x) img.at(x, y) = v;
}

std::size_t fill_disk(SkyImage& img, double cx, double cy, double r, std::uint16_t v = 255) {
  std::size_t n = 0;
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      if ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r) {
        img.at(x, y) = v;
        ++n;
      }
  return n;
}

TEST(Classify, ThresholdArithmetic) {
  const DetectionConfig cfg;
  SkyImage img(16, 16, 8, 10);
  img.at(3, 4) = 255;
  EXPECT_EQ(classify(img, cfg).label, Visibility::VisibleSun);
  img.at(3, 4) = 252;
  EXPECT_EQ(classify(img, cfg).label, Visibility::HiddenSun);
  img.at(3, 4) = 253;
  EXPECT_EQ(classify(img, cfg).label, Visibility::VisibleSun);
  EXPECT_DOUBLE_EQ(saturation_threshold(8, 0.99), 252.45);
}

TEST(Classify, ZeroImageIsHidden) {
  EXPECT_EQ(classify(SkyImage(8, 8), DetectionConfig{}).label, Visibility::HiddenSun);
}

TEST(Classify, SixteenBitThreshold) {
  SkyImage img(4, 4, 16, 0);
  img.at(0, 0) = 64880;  // 0.99 * 65535 = 64879.65
  EXPECT_EQ(classify(img, DetectionConfig{}).label, Visibility::VisibleSun);
  img.at(0, 0) = 64879;
  EXPECT_EQ(classify(img, DetectionConfig{}).label, Visibility::HiddenSun);
}

TEST(Classify, EmptyImageThrows) {
  try {
    classify(SkyImage{}, DetectionConfig{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::empty_image);
  }
}

TEST(DetectionConfig, RejectsBadParameters) {
  DetectionConfig cfg;
  cfg.p = 1.5;
  EXPECT_THROW(classify(SkyImage(2, 2), cfg), Error);
  cfg = {};
  cfg.sigma = 0.0;
  EXPECT_THROW(classify(SkyImage(2, 2), cfg), Error);
}

TEST(SaturatedMask, SingletonAndFull) {
  SkyImage img(20, 10, 8, 0);
  img.at(7, 3) = 255;
  const auto one = saturated_mask(img, DetectionConfig{});
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one[0], (PixelPos{7, 3}));
  const auto all = saturated_mask(SkyImage(20, 10, 8, 255), DetectionConfig{});
  EXPECT_EQ(all.size(), 200u);
}

TEST(SaturatedMask, DiskAndFlareFormTwoClusters) {
  SkyImage img(256, 256, 8, 40);
  const auto sun = fill_disk(img, 80.3, 90.6, 4.0);
  const auto flare = fill_disk(img, 200.0, 190.0, 2.0);
  const auto mask = saturated_mask(img, DetectionConfig{});
  EXPECT_EQ(mask.size(), sun + flare);
  const auto big = detail::largest_component(mask, 256, 256);
  EXPECT_EQ(big.size(), sun);
  for (const auto& p : big) EXPECT_LT(std::hypot(p.x - 80.3, p.y - 90.6), 4.01);
}

TEST(Localize, SymmetricBlock) {
  SkyImage img(512, 512);
  fill_block(img, 100, 200, 2);
  const auto d = localize(img, DetectionConfig{});
  EXPECT_EQ(d.x, 100.0);
  EXPECT_EQ(d.y, 200.0);
  EXPECT_EQ(d.n_saturated, 25u);
  EXPECT_EQ(d.n_retained, 25u);
  EXPECT_FALSE(d.ambiguous);
}

TEST(Localize, FlareOutsideCutoffIsDropped) {
  SkyImage img(512, 512);
  fill_block(img, 100, 200, 4);
  for (int y = 50; y < 52; ++y)
    for (int x = 400; x < 402; ++x) img.at(x, y) = 255;
  const auto d = localize(img, DetectionConfig{});
  EXPECT_EQ(d.x, 100.0);
  EXPECT_EQ(d.y, 200.0);
  EXPECT_EQ(d.n_saturated, 85u);
  EXPECT_EQ(d.n_retained, 81u);
  EXPECT_FALSE(d.ambiguous);
}

TEST(Localize, TwoEqualBlobsFarApartAreAmbiguous) {
  // First median is (102, 102): nearer neither blob than the 40 px cutoff.
  SkyImage img(512, 512);
  fill_block(img, 100, 280, 2);
  fill_block(img, 340, 100, 2);
  ASSERT_DOUBLE_EQ(std::hypot(240.0, 180.0), 300.0);
  const auto d = localize(img, DetectionConfig{});
  EXPECT_TRUE(d.ambiguous);
  EXPECT_EQ(d.n_retained, 25u);
  const bool at_a = d.x == 100.0 && d.y == 280.0;
  const bool at_b = d.x == 340.0 && d.y == 100.0;
  EXPECT_TRUE(at_a || at_b);
}

TEST(Localize, EvenCountUsesLowerMedian) {
  SkyImage img(32, 32);
  img.at(10, 5) = 255;
  img.at(11, 5) = 255;
  const auto d = localize(img, DetectionConfig{});
  EXPECT_EQ(d.x, 10.0);
  EXPECT_EQ(d.y, 5.0);
}

TEST(Localize, NoSaturationThrowsNotVisible) {
  try {
    localize(SkyImage(32, 32, 8, 200), DetectionConfig{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::not_visible);
  }
}

SkyImage random_sparse(std::mt19937_64& rng, int w, int h) {
  SkyImage img(w, h);
  std::uniform_int_distribution<int> v(0, 250), xs(0, w - 1), ys(0, h - 1), n(1, 40);
  for (auto& p : img.pixels()) p = std::uint16_t(v(rng));
  const int cx = xs(rng), cy = ys(rng);
  std::normal_distribution<double> spread(0.0, 6.0);
  for (int k = n(rng); k > 0; --k) {
    const int x = std::clamp(int(cx + spread(rng)), 0, w - 1);
    const int y = std::clamp(int(cy + spread(rng)), 0, h - 1);
    img.at(x, y) = 255;
  }
  return img;
}

TEST(DetectionProperty, ClassifyIsMonotone) {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> xs(0, 63), add(1, 255);
  for (int trial = 0; trial < 200; ++trial) {
    auto img = random_sparse(rng, 64, 64);
    const bool before = classify(img, DetectionConfig{}).visible();
    auto& p = img.at(xs(rng), xs(rng));
    p = std::uint16_t(std::min(255, p + add(rng)));
    if (before) {
      EXPECT_TRUE(classify(img, DetectionConfig{}).visible());
    }
  }
}

TEST(DetectionProperty, LocalizeIsTranslationEquivariant) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    SkyImage img(200, 200);
    std::uniform_int_distribution<int> pos(60, 140), n(1, 60);
    std::normal_distribution<double> spread(0.0, 15.0);
    const int cx = pos(rng), cy = pos(rng);
    for (int k = n(rng); k > 0; --k)
      img.at(std::clamp(int(cx + spread(rng)), 40, 159), std::clamp(int(cy + spread(rng)), 40, 159)) = 255;
    std::uniform_int_distribution<int> shift(-40, 40);
    const int dx = shift(rng), dy = shift(rng);
    SkyImage moved(200, 200);
    for (int y = 0; y < 200; ++y)
      for (int x = 0; x < 200; ++x)
        if (img.at(x, y) == 255) moved.at(x + dx, y + dy) = 255;
    const auto a = localize(img, DetectionConfig{});
    const auto b = localize(moved, DetectionConfig{});
    EXPECT_EQ(b.x, a.x + dx);
    EXPECT_EQ(b.y, a.y + dy);
    EXPECT_EQ(a.ambiguous, b.ambiguous);
  }
}

TEST(DetectionProperty, LocalizeInsideMaskBoundingBox) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const auto img = random_sparse(rng, 96, 96);
    const auto mask = saturated_mask(img, DetectionConfig{});
    if (mask.empty()) continue;
    int x0 = 1 << 30, x1 = -1, y0 = 1 << 30, y1 = -1;
    for (const auto& p : mask) {
      x0 = std::min(x0, p.x);
      x1 = std::max(x1, p.x);
      y0 = std::min(y0, p.y);
      y1 = std::max(y1, p.y);
    }
    const auto d = localize(img, DetectionConfig{});
    EXPECT_GE(d.x, x0);
    EXPECT_LE(d.x, x1);
    EXPECT_GE(d.y, y0);
    EXPECT_LE(d.y, y1);
  }
}

TEST(DetectionProperty, SmallDistantFlareBarelyMovesEstimate) {
  SceneConfig cfg;
  cfg.cloud_probability = 0.0;
  cfg.flare_probability = 0.0;
  const SceneRenderer renderer(cfg);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> ang(0.0, kTwoPi);
  for (int minute = 480; minute <= 960; minute += 40) {
    auto img = renderer.render(60, minute, false).short_exposure;
    const auto clean = localize(img, DetectionConfig{});
    const auto mask = saturated_mask(img, DetectionConfig{});
    double diameter = 0;
    for (const auto& a : mask)
      for (const auto& b : mask) diameter = std::max(diameter, std::hypot(a.x - b.x, a.y - b.y));
    const double min_gap = DetectionConfig{}.retention_radius() + diameter;
    const double r_flare = 0.5 * std::sqrt(double(mask.size()) / kPi);
    for (int k = 0; k < 5; ++k) {
      SkyImage with = img;
      double fx, fy;
      do {
        const double a = ang(rng);
        fx = 256 + 180 * std::cos(a);
        fy = 256 + 180 * std::sin(a);
      } while (std::hypot(fx - clean.x, fy - clean.y) <= min_gap + r_flare);
      const auto added = fill_disk(with, fx, fy, r_flare);
      ASSERT_LT(added, mask.size());
      const auto d = localize(with, DetectionConfig{});
      EXPECT_LT(std::hypot(d.x - clean.x, d.y - clean.y), 3.0) << "minute " << minute;
    }
  }
}

TEST(DetectionProperty, Deterministic) {
  std::mt19937_64 rng(9);
  const auto img = random_sparse(rng, 128, 128);
  const auto a = localize(img, DetectionConfig{});
  const auto b = localize(img, DetectionConfig{});
  EXPECT_EQ(a.x, b.x);
  EXPECT_EQ(a.y, b.y);
  EXPECT_EQ(a.n_retained, b.n_retained);
  EXPECT_EQ(saturated_mask(img, DetectionConfig{}), saturated_mask(img, DetectionConfig{}));
}

TEST(Localize, SyntheticNoonFrameWithinOnePixel) {
  SceneConfig cfg;
  cfg.cloud_probability = 0.0;
  cfg.flare_probability = 0.0;
  const auto frame = render_frame(cfg, 20, 720, cfg.fisheye());
  ASSERT_EQ(classify(frame.short_exposure, DetectionConfig{}).label, Visibility::VisibleSun);
  const auto d = localize(frame.short_exposure, DetectionConfig{});
  EXPECT_LT(std::hypot(d.x - frame.truth.sun_x, d.y - frame.truth.sun_y), 1.0);
}

}  // namespace
}  // namespace suntrack
