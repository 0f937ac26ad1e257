#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "suntrack/regression.hpp"

namespace suntrack {
namespace {

std::vector<Sample> samples(const std::vector<double>& t, const std::vector<double>& v) {
  std::vector<Sample> out;
  for (std::size_t i = 0; i < t.size(); ++i) out.push_back({t[i], v[i]});
  return out;
}

TEST(FitRidge, CollinearPointsInterpolatedExactly) {
  const auto pts = samples({0, 1, 2}, {1, 3, 5});
  const auto m = fit_ridge(pts, {.degree = 1, .alpha = 0.0});
  for (const auto& s : pts) EXPECT_NEAR(m(s.t), s.v, 1e-12);
  EXPECT_NEAR(predict(m, 10.0), 21.0, 1e-9);
}

TEST(FitRidge, TwoPointHandSolve) {
  const auto pts = samples({-1, 1}, {-1, 1});
  const auto m = fit_ridge(pts, {.degree = 1, .alpha = 1.0});
  ASSERT_EQ(m.coefficients().size(), 2u);
  EXPECT_NEAR(m.coefficients()[0], 0.0, 1e-15);
  EXPECT_NEAR(m.coefficients()[1], 2.0 / 3.0, 1e-15);
  EXPECT_EQ(m.input_shift(), 0.0);
  EXPECT_EQ(m.input_scale(), 1.0);
  EXPECT_NEAR(predict(m, 1.0), 2.0 / 3.0, 1e-15);
}

TEST(FitRidge, QuarticOnWideRange) {
  std::vector<double> t, v;
  for (int i = 0; i <= 60; ++i) {
    t.push_back(i);
    v.push_back(std::pow(double(i), 4));
  }
  const auto m = fit_ridge(samples(t, v), {.degree = 4, .alpha = 1e-8});
  const auto want = oracle::ridge_coefficients({t, v, 4, 1e-8, true});
  const double peak = v.back();
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double u = (t[i] - 30.0) / 30.0;
    double ref = 0;
    for (int j = 4; j >= 0; --j) ref = ref * u + want[std::size_t(j)];
    EXPECT_LT(std::abs(m(t[i]) - ref) / std::max(std::abs(ref), 1.0), 1e-6) << t[i];
    EXPECT_LT(std::abs(m(t[i]) - v[i]) / peak, 1e-6) << t[i];
  }
}

TEST(Predict, ConstantModel) {
  const PolynomialModel m({4.5, 0.0, 0.0, 0.0}, 17.0, 3.0);
  for (double t : {-1e6, 0.0, 3.3, 1e6}) EXPECT_EQ(predict(m, t), 4.5);
}

TEST(FitRidge, EmptyInputThrows) {
  try {
    fit_ridge(std::vector<Sample>{}, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::empty_input);
  }
}

TEST(FitRidge, UnderdeterminedWithoutRidgeIsNumericalFailure) {
  const auto pts = samples({1, 2, 3}, {1, 4, 9});
  try {
    fit_ridge(pts, {.degree = 4, .alpha = 0.0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::numerical_failure);
  }
  EXPECT_NO_THROW(fit_ridge(pts, {.degree = 4, .alpha = 0.01}));
}

TEST(FitRidge, NegativeAlphaRejected) {
  const auto pts = samples({1, 2}, {1, 2});
  EXPECT_THROW(fit_ridge(pts, {.degree = 1, .alpha = -1.0}), Error);
}

TEST(FitRidge, ExplicitInputRangeSetsNormalization) {
  const auto pts = samples({2, 3, 4}, {1, 1, 1});
  RidgeConfig cfg{.degree = 2, .alpha = 0.0};
  cfg.input_range = std::pair<double, double>(0.0, 10.0);
  const auto m = fit_ridge(pts, cfg);
  EXPECT_EQ(m.input_shift(), 5.0);
  EXPECT_EQ(m.input_scale(), 5.0);
  EXPECT_NEAR(m(10.0), 1.0, 1e-12);
}

TEST(FitRidge, RawFeaturesKeepIdentityBasis) {
  const auto pts = samples({10, 20, 30}, {1, 2, 3});
  const auto m = fit_ridge(pts, {.degree = 1, .alpha = 0.0, .penalize_intercept = true, .normalize_inputs = false});
  EXPECT_EQ(m.input_shift(), 0.0);
  EXPECT_EQ(m.input_scale(), 1.0);
  EXPECT_NEAR(m.coefficients()[1], 0.1, 1e-12);
}

TEST(RegressionProperty, ExactRecovery) {
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<int> deg(0, 6), extra(0, 40);
  std::uniform_real_distribution<double> coef(-3, 3), lo(-100, 100), width(0.5, 500);
  for (int trial = 0; trial < 200; ++trial) {
    const int d = deg(rng);
    std::vector<double> c(std::size_t(d) + 1);
    for (auto& x : c) x = coef(rng);
    const double a = lo(rng), w = width(rng);
    const int n = d + 1 + extra(rng);
    std::vector<Sample> pts;
    std::uniform_real_distribution<double> ts(a, a + w);
    for (int i = 0; i < n; ++i) {
      const double t = i < 2 ? a + i * w : ts(rng);
      const double u = (t - (a + w / 2)) / (w / 2);
      double v = 0;
      for (int j = d; j >= 0; --j) v = v * u + c[std::size_t(j)];
      pts.push_back({t, v});
    }
    const auto m = fit_ridge(pts, {.degree = d, .alpha = 0.0});
    double scale = 0;
    for (const auto& s : pts) scale = std::max(scale, std::abs(s.v));
    for (const auto& s : pts) EXPECT_LE(std::abs(m(s.t) - s.v), 1e-9 * std::max(scale, 1.0));
  }
}

TEST(RegressionProperty, MatchesEliminationOracle) {
  std::mt19937_64 rng(22);
  std::uniform_int_distribution<int> deg(0, 6), n_pts(1, 100);
  std::uniform_real_distribution<double> alpha(0, 10), val(-500, 500), t0(-1000, 1000), width(1, 2000);
  for (int trial = 0; trial < 200; ++trial) {
    oracle::RidgeProblem p;
    p.degree = deg(rng);
    p.alpha = trial % 5 == 0 ? 0.0 : alpha(rng);
    p.penalize_intercept = trial % 2 == 0;
    const int n = p.alpha == 0.0 ? std::max(n_pts(rng), p.degree + 1 + 5) : n_pts(rng);
    const double a = t0(rng), w = width(rng);
    std::uniform_real_distribution<double> ts(a, a + w);
    std::vector<Sample> pts;
    for (int i = 0; i < n; ++i) {
      p.t.push_back(ts(rng));
      p.v.push_back(val(rng));
      pts.push_back({p.t.back(), p.v.back()});
    }
    const auto want = oracle::ridge_coefficients(p);
    const auto got =
        fit_ridge(pts, {.degree = p.degree, .alpha = p.alpha, .penalize_intercept = p.penalize_intercept})
            .coefficients();
    EXPECT_LE(oracle::relative_difference(got, want), 1e-8) << "trial " << trial;
  }
}

TEST(RegressionProperty, ShrinkageIsMonotone) {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> ts(0, 100), vs(-10, 10);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Sample> pts;
    for (int i = 0; i < 30; ++i) pts.push_back({ts(rng), vs(rng)});
    double prev = INFINITY;
    for (double alpha : {0.0, 1e-6, 1e-3, 0.01, 0.1, 1.0, 10.0, 100.0, 1e4}) {
      const auto c = fit_ridge(pts, {.degree = 4, .alpha = alpha}).coefficients();
      double norm = 0;
      for (double x : c) norm += x * x;
      norm = std::sqrt(norm);
      EXPECT_LE(norm, prev * (1 + 1e-12)) << "alpha " << alpha;
      prev = norm;
    }
  }
}

TEST(RegressionProperty, RawBasisGivesSamePredictions) {
  std::mt19937_64 rng(24);
  std::uniform_real_distribution<double> ts(300, 1100), vs(0, 512);
  std::vector<Sample> pts;
  for (int i = 0; i < 80; ++i) pts.push_back({ts(rng), vs(rng)});
  const auto m = fit_ridge(pts, {.degree = 4, .alpha = 1e-7});
  const auto raw = m.to_raw_basis();
  EXPECT_EQ(raw.input_shift(), 0.0);
  EXPECT_EQ(raw.input_scale(), 1.0);
  for (double t = 300; t <= 1100; t += 7) EXPECT_NEAR(raw(t), m(t), 1e-6 * std::max(1.0, std::abs(m(t))));
}

TEST(RegressionProperty, InterceptExemptionFitsConstantsExactly) {
  std::vector<Sample> pts;
  for (int d = 0; d < 10; ++d) pts.push_back({double(d), 300.0});
  const auto exempt = fit_ridge(pts, {.degree = 4, .alpha = 0.01, .penalize_intercept = false});
  EXPECT_NEAR(exempt(10.0), 300.0, 1e-9);
  const auto penalized = fit_ridge(pts, {.degree = 4, .alpha = 0.01, .penalize_intercept = true});
  EXPECT_LT(penalized(5.0), 300.0);
}

}  // namespace
}  // namespace suntrack
