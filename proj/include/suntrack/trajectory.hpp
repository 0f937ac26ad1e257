#pragma once

// Observation store and the two-stage trajectory model:
//   stage 1: for a (day, minute), ridge-fit each coordinate against day index
//            over the previous window_days days and evaluate at `day`;
//   stage 2: ridge-fit the day's stage-1 estimates against minute of day.

#include <algorithm>
#include <array>
#include <climits>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "suntrack/calendar.hpp"
#include "suntrack/error.hpp"
#include "suntrack/parallel.hpp"
#include "suntrack/regression.hpp"

namespace suntrack {

struct SunObservation {
  int day_index = 0;
  int minute = 0;
  double x = 0.0;
  double y = 0.0;
  bool outlier = false;
  bool ambiguous = false;
  std::string source_file;

  bool operator==(const SunObservation&) const = default;
};

/// Append-only observation collection. Record ids are stable insertion indices.
class ObservationStore {
 public:
  using Id = std::uint32_t;

  explicit ObservationStore(Date epoch = {}) : epoch_(epoch) {}

  const Date& epoch() const noexcept { return epoch_; }
  bool empty() const noexcept { return records_.empty(); }
  std::size_t size() const noexcept { return records_.size(); }

  void set_epoch(const Date& epoch) {
    require(empty(), ErrorCode::invalid_argument, "epoch can only be set on an empty store");
    epoch_ = epoch;
  }

  /// Moves the epoch earlier, shifting every day index so dates are unchanged.
  void rebase(const Date& new_epoch) {
    const int shift = days_between(new_epoch, epoch_);
    require(shift >= 0, ErrorCode::invalid_argument, "rebase only moves the epoch earlier");
    epoch_ = new_epoch;
    if (shift == 0) return;
    for (auto& r : records_) r.day_index += shift;
    std::map<int, std::vector<Id>> shifted;
    for (auto& [day, ids] : by_day_) shifted.emplace(day + shift, std::move(ids));
    by_day_ = std::move(shifted);
  }

  /// Returns false when an identical observation is already stored.
  /// Throws StoreConflict when a different non-outlier observation holds the key.
  bool add(SunObservation obs) {
    require(obs.minute >= 0 && obs.minute < kMinutesPerDay, ErrorCode::invalid_argument, "minute out of range");
    require(std::isfinite(obs.x) && std::isfinite(obs.y), ErrorCode::invalid_argument, "non-finite position");
    auto& column = by_minute_[std::size_t(obs.minute)];
    auto pos = std::lower_bound(column.begin(), column.end(), obs.day_index,
                                [this](Id id, int day) { return records_[id].day_index < day; });
    for (auto it = pos; it != column.end() && records_[*it].day_index == obs.day_index; ++it) {
      const auto& existing = records_[*it];
      if (existing.x == obs.x && existing.y == obs.y) return false;
      if (!existing.outlier && !obs.outlier) {
        fail(ErrorCode::store_conflict, "day " + std::to_string(obs.day_index) + " minute " +
                                            std::to_string(obs.minute) + " already holds a different observation");
      }
    }
    const Id id = Id(records_.size());
    if (!obs.source_file.empty()) sources_.insert(obs.source_file);
    auto upper = std::upper_bound(column.begin(), column.end(), obs.day_index,
                                  [this](int day, Id other) { return day < records_[other].day_index; });
    by_day_[obs.day_index].push_back(id);
    records_.push_back(std::move(obs));
    column.insert(upper, id);
    return true;
  }

  bool has_source(const std::string& file) const { return sources_.contains(file); }

  const SunObservation& operator[](Id id) const { return records_[id]; }
  std::span<const SunObservation> records() const noexcept { return records_; }

  void set_outlier(Id id, bool flag) { records_[id].outlier = flag; }

  /// Ids at a minute, ascending by day.
  std::span<const Id> at_minute(int minute) const { return by_minute_[std::size_t(minute)]; }

  std::span<const Id> on_day(int day) const {
    const auto it = by_day_.find(day);
    if (it == by_day_.end()) return {};
    return it->second;
  }

  std::optional<int> first_day() const {
    if (by_day_.empty()) return std::nullopt;
    return by_day_.begin()->first;
  }
  std::optional<int> last_day() const {
    if (by_day_.empty()) return std::nullopt;
    return by_day_.rbegin()->first;
  }

  /// Ids ordered by (day, minute, insertion).
  std::vector<Id> sorted_ids() const {
    std::vector<Id> ids(records_.size());
    for (Id i = 0; i < ids.size(); ++i) ids[i] = i;
    std::stable_sort(ids.begin(), ids.end(), [this](Id a, Id b) {
      const auto& ra = records_[a];
      const auto& rb = records_[b];
      return std::tie(ra.day_index, ra.minute) < std::tie(rb.day_index, rb.minute);
    });
    return ids;
  }

 private:
  Date epoch_;
  std::vector<SunObservation> records_;
  std::array<std::vector<Id>, kMinutesPerDay> by_minute_{};
  std::map<int, std::vector<Id>> by_day_;
  std::set<std::string> sources_;
};

struct TrajectoryConfig {
  int window_days = 60;
  int degree = 4;
  double alpha1 = 0.01;
  double alpha2 = 1e-7;
  double outlier_px = 20.0;
  int min_obs = 4;
  int max_gap_days = 10;
  bool raw_features = false;
  bool penalize_intercept = false;  // the intercept is exempt from the penalty by default
  // Observations without a stage-1 prediction are checked against the day's
  // trajectory (fitted from prior days) when one exists, otherwise against a
  // trimmed fit of the day's own observations.
  bool daily_fallback = true;

  void validate() const {
    require(window_days > 0 && degree >= 0 && min_obs > 0 && max_gap_days > 0, ErrorCode::invalid_argument,
            "trajectory window, degree, min_obs and max_gap_days must be positive");
    require(alpha1 >= 0.0 && alpha2 >= 0.0 && outlier_px > 0.0, ErrorCode::invalid_argument,
            "alphas must be >= 0 and outlier_px > 0");
  }

  RidgeConfig stage1() const { return {degree, alpha1, penalize_intercept, !raw_features, std::nullopt}; }
  RidgeConfig stage2() const { return {degree, alpha2, penalize_intercept, !raw_features, std::nullopt}; }
};

struct PerMinuteEstimate {
  int minute = 0;
  double x_hat = 0.0;
  double y_hat = 0.0;
  int n_support = 0;
};

struct DailyTrajectory {
  int day_index = 0;
  PolynomialModel model_x;
  PolynomialModel model_y;
  int minute_min = 0;
  int minute_max = 0;
  int n_estimates = 0;

  bool operator==(const DailyTrajectory&) const = default;
};

using TrajectorySet = std::map<int, DailyTrajectory>;

struct TrajectoryPoint {
  double x = 0.0;
  double y = 0.0;
  bool extrapolated = false;
};

inline TrajectoryPoint predict_position(const DailyTrajectory& traj, double minute) {
  return {traj.model_x(minute), traj.model_y(minute), minute < traj.minute_min || minute > traj.minute_max};
}

/// Cross-day estimate for one minute from strictly earlier days, or nullopt
/// when fewer than min_obs usable observations exist or the newest is too old.
inline std::optional<PerMinuteEstimate> stage1_estimate(const ObservationStore& store, int day, int minute,
                                                        const TrajectoryConfig& cfg) {
  if (minute < 0 || minute >= kMinutesPerDay) return std::nullopt;
  const auto ids = store.at_minute(minute);
  const int first = day - cfg.window_days;
  auto lo = std::lower_bound(ids.begin(), ids.end(), first,
                             [&](ObservationStore::Id id, int d) { return store[id].day_index < d; });
  std::vector<Sample> xs, ys;
  int newest = INT_MIN;
  for (auto it = lo; it != ids.end() && store[*it].day_index < day; ++it) {
    const auto& obs = store[*it];
    if (obs.outlier) continue;
    xs.push_back({double(obs.day_index), obs.x});
    ys.push_back({double(obs.day_index), obs.y});
    newest = std::max(newest, obs.day_index);
  }
  if (int(xs.size()) < cfg.min_obs || newest < day - cfg.max_gap_days) return std::nullopt;

  // The window [day - N, day] maps onto [-1, 1], so the prediction day sits at the edge of the fitted domain.
  auto ridge = cfg.stage1();
  ridge.input_range = std::pair<double, double>(first, day);
  const auto fx = fit_ridge(xs, ridge);
  const auto fy = fit_ridge(ys, ridge);
  return PerMinuteEstimate{minute, fx(day), fy(day), int(xs.size())};
}

/// All available stage-1 estimates for a day, ascending by minute.
inline std::vector<PerMinuteEstimate> stage1_estimates(const ObservationStore& store, int day,
                                                       const TrajectoryConfig& cfg, unsigned threads = 1) {
  std::vector<std::optional<PerMinuteEstimate>> slots(kMinutesPerDay);
  parallel_for(
      slots.size(),
      [&](std::size_t m) {
        if (int(store.at_minute(int(m)).size()) >= cfg.min_obs) slots[m] = stage1_estimate(store, day, int(m), cfg);
      },
      threads);
  std::vector<PerMinuteEstimate> out;
  for (auto& e : slots) {
    if (e) out.push_back(*e);
  }
  return out;
}

/// Flags observations on `day` lying farther than outlier_px from their
/// stage-1 prediction. With `day_model`, observations lacking a stage-1
/// prediction are tested against it instead.
inline int flag_outliers(ObservationStore& store, int day, const TrajectoryConfig& cfg,
                         const DailyTrajectory* day_model = nullptr) {
  cfg.validate();
  const auto ids = store.on_day(day);
  const std::vector<ObservationStore::Id> todo(ids.begin(), ids.end());
  int flagged = 0;
  for (const auto id : todo) {
    const auto& obs = store[id];
    if (obs.outlier) continue;
    double px = 0.0, py = 0.0;
    if (const auto est = stage1_estimate(store, day, obs.minute, cfg)) {
      px = est->x_hat;
      py = est->y_hat;
    } else if (day_model) {
      const auto p = predict_position(*day_model, obs.minute);
      px = p.x;
      py = p.y;
    } else {
      continue;
    }
    if (std::hypot(obs.x - px, obs.y - py) > cfg.outlier_px) {
      store.set_outlier(id, true);
      ++flagged;
    }
  }
  return flagged;
}

inline DailyTrajectory fit_daily(std::span<const PerMinuteEstimate> estimates, int day,
                                 const TrajectoryConfig& cfg) {
  cfg.validate();
  if (int(estimates.size()) < cfg.degree + 1) {
    fail(ErrorCode::insufficient_estimates, "day " + std::to_string(day) + " has " +
                                                std::to_string(estimates.size()) + " estimates, needs " +
                                                std::to_string(cfg.degree + 1));
  }
  std::vector<Sample> xs, ys;
  xs.reserve(estimates.size());
  ys.reserve(estimates.size());
  int lo = INT_MAX, hi = INT_MIN;
  for (const auto& e : estimates) {
    xs.push_back({double(e.minute), e.x_hat});
    ys.push_back({double(e.minute), e.y_hat});
    lo = std::min(lo, e.minute);
    hi = std::max(hi, e.minute);
  }
  const auto ridge = cfg.stage2();
  return {day, fit_ridge(xs, ridge), fit_ridge(ys, ridge), lo, hi, int(estimates.size())};
}

inline DailyTrajectory fit_daily(const ObservationStore& store, int day, const TrajectoryConfig& cfg) {
  const auto estimates = stage1_estimates(store, day, cfg);
  return fit_daily(std::span<const PerMinuteEstimate>(estimates), day, cfg);
}

/// Stage-2 fit of a day's own observations, dropping the worst one while it lies
/// beyond outlier_px. Nullopt when fewer than 2 (degree + 1) observations remain.
inline std::optional<DailyTrajectory> trimmed_daily_fit(const ObservationStore& store, int day,
                                                        const TrajectoryConfig& cfg) {
  const std::size_t min_points = 2 * std::size_t(cfg.degree + 1);
  std::vector<PerMinuteEstimate> points;
  for (const auto id : store.on_day(day)) {
    const auto& obs = store[id];
    if (!obs.outlier) points.push_back({obs.minute, obs.x, obs.y, 1});
  }
  while (points.size() >= min_points) {
    auto model = fit_daily(std::span<const PerMinuteEstimate>(points), day, cfg);
    std::size_t worst = 0;
    double worst_dist = -1.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      const auto p = predict_position(model, points[i].minute);
      const double dist = std::hypot(points[i].x_hat - p.x, points[i].y_hat - p.y);
      if (dist > worst_dist) {
        worst_dist = dist;
        worst = i;
      }
    }
    if (worst_dist <= cfg.outlier_px) return model;
    points.erase(points.begin() + std::ptrdiff_t(worst));
  }
  return std::nullopt;
}

struct FitSummary {
  TrajectorySet trajectories;
  std::map<int, int> flagged_per_day;
  int total_flagged = 0;
};

/// Walks days in order: fits the day from strictly earlier data, then flags
/// that day's observations. Stage-1 estimates run in parallel across minutes.
inline FitSummary fit_all(ObservationStore& store, const TrajectoryConfig& cfg, int first_day, int last_day,
                          unsigned threads = default_thread_count()) {
  cfg.validate();
  FitSummary summary;
  for (int d = first_day; d <= last_day; ++d) {
    const auto estimates = stage1_estimates(store, d, cfg, threads);
    const DailyTrajectory* model = nullptr;
    if (int(estimates.size()) >= cfg.degree + 1) {
      auto [it, inserted] = summary.trajectories.emplace(d, fit_daily(estimates, d, cfg));
      model = &it->second;
    }
    std::optional<DailyTrajectory> own;
    if (!model && cfg.daily_fallback) {
      own = trimmed_daily_fit(store, d, cfg);
      if (own) model = &*own;
    }
    const int n = flag_outliers(store, d, cfg, cfg.daily_fallback ? model : nullptr);
    summary.flagged_per_day[d] = n;
    summary.total_flagged += n;
  }
  return summary;
}

inline FitSummary fit_all(ObservationStore& store, const TrajectoryConfig& cfg,
                          unsigned threads = default_thread_count()) {
  if (store.empty()) return {};
  return fit_all(store, cfg, *store.first_day(), *store.last_day(), threads);
}

struct DayError {
  double mae_px = 0.0;
  std::size_t count = 0;
};

struct MaeReport {
  double mae_px = 0.0;
  double mae_percent = 0.0;  // of image width
  std::size_t count = 0;
  double mae_px_with_outliers = 0.0;
  std::size_t count_with_outliers = 0;
  std::map<int, DayError> per_day;
};

/// Mean Euclidean distance between non-outlier observations and their day's trajectory.
inline MaeReport evaluate_mae(const ObservationStore& store, const TrajectorySet& trajectories, double image_width,
                              int first_day = INT_MIN, int last_day = INT_MAX) {
  require(image_width > 0.0, ErrorCode::invalid_argument, "image width must be positive");
  MaeReport report;
  double sum = 0.0, sum_all = 0.0;
  for (const auto& obs : store.records()) {
    if (obs.day_index < first_day || obs.day_index > last_day) continue;
    const auto it = trajectories.find(obs.day_index);
    if (it == trajectories.end()) continue;
    const auto p = predict_position(it->second, obs.minute);
    const double err = std::hypot(obs.x - p.x, obs.y - p.y);
    sum_all += err;
    ++report.count_with_outliers;
    if (obs.outlier) continue;
    sum += err;
    ++report.count;
    auto& day = report.per_day[obs.day_index];
    day.mae_px += err;
    ++day.count;
  }
  if (report.count == 0) fail(ErrorCode::no_coverage, "no observation is covered by a trajectory");
  for (auto& [d, e] : report.per_day) e.mae_px /= double(e.count);
  report.mae_px = sum / double(report.count);
  report.mae_percent = 100.0 * report.mae_px / image_width;
  report.mae_px_with_outliers = sum_all / double(report.count_with_outliers);
  return report;
}

}  // namespace suntrack
