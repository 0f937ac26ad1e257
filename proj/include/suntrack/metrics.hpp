#pragma once

#include <optional>
#include <span>

#include "suntrack/detection.hpp"
#include "suntrack/error.hpp"

namespace suntrack {

/// Positive class is VisibleSun.
struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;

  std::size_t total() const { return tp + fp + tn + fn; }
  bool operator==(const ConfusionCounts&) const = default;
};

/// Ratios are nullopt where the denominator is zero.
struct ClassificationMetrics {
  ConfusionCounts counts;
  std::optional<double> accuracy;
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> f1;
};

inline ClassificationMetrics metrics_from_counts(const ConfusionCounts& c) {
  auto ratio = [](std::size_t num, std::size_t den) -> std::optional<double> {
    if (den == 0) return std::nullopt;
    return double(num) / double(den);
  };
  ClassificationMetrics m;
  m.counts = c;
  m.accuracy = ratio(c.tp + c.tn, c.total());
  m.precision = ratio(c.tp, c.tp + c.fp);
  m.recall = ratio(c.tp, c.tp + c.fn);
  if (m.precision && m.recall) m.f1 = ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn);
  return m;
}

inline ClassificationMetrics classify_metrics(std::span<const Visibility> predictions,
                                              std::span<const Visibility> truths) {
  if (predictions.size() != truths.size()) {
    fail(ErrorCode::length_mismatch, "predictions and truths differ in length");
  }
  if (predictions.empty()) fail(ErrorCode::empty_input, "no samples to score");
  ConfusionCounts c;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const bool pred = predictions[i] == Visibility::VisibleSun;
    const bool truth = truths[i] == Visibility::VisibleSun;
    if (pred && truth) ++c.tp;
    else if (pred) ++c.fp;
    else if (truth) ++c.fn;
    else ++c.tn;
  }
  return metrics_from_counts(c);
}

}  // namespace suntrack
