#pragma once

// Ridge polynomial regression in one scalar input.
//
// Inputs are mapped to t_norm = (t - shift) / scale, with the observed input
// range landing on [-1, 1], before powers are formed. The regularized normal
// equations (Phi^T Phi + alpha D) beta = Phi^T v are solved by Cholesky, with D
// the identity (or the identity with the intercept entry zeroed).

#include <cmath>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "suntrack/error.hpp"

namespace suntrack {

struct RidgeConfig {
  int degree = 4;
  double alpha = 0.0;
  bool penalize_intercept = true;
  bool normalize_inputs = true;  // false reproduces fits on raw input powers
  // Range mapped onto [-1, 1] when normalizing; the observed input range when unset.
  std::optional<std::pair<double, double>> input_range = std::nullopt;

  void validate() const {
    require(degree >= 0, ErrorCode::invalid_argument, "degree must be >= 0");
    require(alpha >= 0.0 && std::isfinite(alpha), ErrorCode::invalid_argument, "alpha must be >= 0");
    require(!input_range || input_range->second >= input_range->first, ErrorCode::invalid_argument,
            "input range is reversed");
  }
};

struct Sample {
  double t = 0.0;
  double v = 0.0;
};

class PolynomialModel {
 public:
  PolynomialModel() : coefficients_{0.0} {}
  PolynomialModel(std::vector<double> coefficients, double input_shift = 0.0, double input_scale = 1.0)
      : coefficients_(std::move(coefficients)), shift_(input_shift), scale_(input_scale) {
    require(!coefficients_.empty(), ErrorCode::invalid_argument, "polynomial needs at least one coefficient");
    require(scale_ > 0.0 && std::isfinite(scale_) && std::isfinite(shift_), ErrorCode::invalid_argument,
            "input scale must be positive and finite");
    for (double c : coefficients_) require(std::isfinite(c), ErrorCode::invalid_argument, "non-finite coefficient");
  }

  int degree() const { return int(coefficients_.size()) - 1; }
  const std::vector<double>& coefficients() const { return coefficients_; }
  double input_shift() const { return shift_; }
  double input_scale() const { return scale_; }

  double normalize(double t) const { return (t - shift_) / scale_; }

  /// Horner evaluation at the normalized input.
  double operator()(double t) const {
    const double u = normalize(t);
    double acc = 0.0;
    for (auto it = coefficients_.rbegin(); it != coefficients_.rend(); ++it) acc = acc * u + *it;
    return acc;
  }

  /// Same polynomial expressed over raw powers of t (shift 0, scale 1).
  PolynomialModel to_raw_basis() const {
    const int n = int(coefficients_.size());
    std::vector<double> raw(std::size_t(n), 0.0);
    // sum_i c_i ((t - s)/k)^i, expanded binomially.
    for (int i = 0; i < n; ++i) {
      const double ci = coefficients_[std::size_t(i)] / std::pow(scale_, i);
      double binom = 1.0;
      for (int j = 0; j <= i; ++j) {
        raw[std::size_t(j)] += ci * binom * std::pow(-shift_, i - j);
        binom = binom * double(i - j) / double(j + 1);
      }
    }
    return PolynomialModel(std::move(raw));
  }

  bool operator==(const PolynomialModel&) const = default;

 private:
  std::vector<double> coefficients_;
  double shift_ = 0.0;
  double scale_ = 1.0;
};

inline double predict(const PolynomialModel& model, double t) { return model(t); }

namespace detail {

/// In-place Cholesky of a symmetric positive definite k x k matrix (row-major);
/// returns false when a pivot is not safely positive.
inline bool cholesky(std::vector<double>& a, int k) {
  double max_diag = 0.0;
  for (int i = 0; i < k; ++i) max_diag = std::max(max_diag, std::abs(a[std::size_t(i * k + i)]));
  const double tiny = max_diag * 1e-14 * k;
  for (int j = 0; j < k; ++j) {
    double d = a[std::size_t(j * k + j)];
    for (int p = 0; p < j; ++p) d -= a[std::size_t(j * k + p)] * a[std::size_t(j * k + p)];
    if (!(d > tiny)) return false;
    const double l = std::sqrt(d);
    a[std::size_t(j * k + j)] = l;
    for (int i = j + 1; i < k; ++i) {
      double s = a[std::size_t(i * k + j)];
      for (int p = 0; p < j; ++p) s -= a[std::size_t(i * k + p)] * a[std::size_t(j * k + p)];
      a[std::size_t(i * k + j)] = s / l;
    }
  }
  return true;
}

inline std::vector<double> cholesky_solve(const std::vector<double>& l, int k, std::vector<double> b) {
  for (int i = 0; i < k; ++i) {
    double s = b[std::size_t(i)];
    for (int p = 0; p < i; ++p) s -= l[std::size_t(i * k + p)] * b[std::size_t(p)];
    b[std::size_t(i)] = s / l[std::size_t(i * k + i)];
  }
  for (int i = k - 1; i >= 0; --i) {
    double s = b[std::size_t(i)];
    for (int p = i + 1; p < k; ++p) s -= l[std::size_t(p * k + i)] * b[std::size_t(p)];
    b[std::size_t(i)] = s / l[std::size_t(i * k + i)];
  }
  return b;
}

}  // namespace detail

inline PolynomialModel fit_ridge(std::span<const Sample> points, const RidgeConfig& cfg) {
  cfg.validate();
  if (points.empty()) fail(ErrorCode::empty_input, "ridge fit needs at least one point");

  double tmin = points.front().t, tmax = points.front().t;
  for (const auto& s : points) {
    require(std::isfinite(s.t) && std::isfinite(s.v), ErrorCode::invalid_argument, "non-finite sample");
    tmin = std::min(tmin, s.t);
    tmax = std::max(tmax, s.t);
  }
  double shift = 0.0, scale = 1.0;
  if (cfg.normalize_inputs) {
    const double lo = cfg.input_range ? cfg.input_range->first : tmin;
    const double hi = cfg.input_range ? cfg.input_range->second : tmax;
    if (hi > lo) {
      shift = 0.5 * (lo + hi);
      scale = 0.5 * (hi - lo);
    } else {
      shift = lo;
    }
  }

  // With a free intercept, fitting v - mean(v) and adding the mean back is the
  // same problem; it keeps constant data exact.
  double offset = 0.0;
  if (!cfg.penalize_intercept) {
    for (const auto& s : points) offset += s.v;
    offset /= double(points.size());
  }

  const int k = cfg.degree + 1;
  const auto kk = std::size_t(k);
  std::vector<double> gram(kk * kk, 0.0), rhs(kk, 0.0), powers(2 * kk - 1);
  for (const auto& s : points) {
    const double u = (s.t - shift) / scale;
    powers[0] = 1.0;
    for (std::size_t i = 1; i < powers.size(); ++i) powers[i] = powers[i - 1] * u;
    for (std::size_t i = 0; i < kk; ++i) {
      rhs[i] += powers[i] * (s.v - offset);
      for (std::size_t j = 0; j < kk; ++j) gram[i * kk + j] += powers[i + j];
    }
  }
  for (std::size_t i = cfg.penalize_intercept ? 0 : 1; i < kk; ++i) gram[i * kk + i] += cfg.alpha;

  auto factor = gram;
  if (!detail::cholesky(factor, k)) {
    fail(ErrorCode::numerical_failure, "regularized normal matrix is singular");
  }
  auto beta = detail::cholesky_solve(factor, k, rhs);

  // One step of iterative refinement on the normal equations.
  std::vector<double> residual(kk);
  for (std::size_t i = 0; i < kk; ++i) {
    double s = rhs[i];
    for (std::size_t j = 0; j < kk; ++j) s -= gram[i * kk + j] * beta[j];
    residual[i] = s;
  }
  const auto correction = detail::cholesky_solve(factor, k, residual);
  for (std::size_t i = 0; i < kk; ++i) beta[i] += correction[i];

  beta[0] += offset;
  for (double b : beta) {
    if (!std::isfinite(b)) fail(ErrorCode::numerical_failure, "ridge solution is not finite");
  }
  return PolynomialModel(std::move(beta), shift, scale);
}

}  // namespace suntrack
