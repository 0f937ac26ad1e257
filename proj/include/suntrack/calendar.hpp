#pragma once

#include <chrono>
#include <compare>
#include <cstdio>
#include <string>
#include <string_view>

#include "suntrack/error.hpp"

namespace suntrack {

inline constexpr int kMinutesPerDay = 1440;

/// Civil calendar date (proleptic Gregorian).
struct Date {
  int year = 1970;
  int month = 1;
  int day = 1;

  auto operator<=>(const Date&) const = default;

  std::chrono::sys_days to_sys_days() const {
    return std::chrono::sys_days{std::chrono::year{year} / std::chrono::month{unsigned(month)} /
                                 std::chrono::day{unsigned(day)}};
  }

  static Date from_sys_days(std::chrono::sys_days days) {
    const std::chrono::year_month_day ymd{days};
    return {int(ymd.year()), int(unsigned(ymd.month())), int(unsigned(ymd.day()))};
  }

  bool valid() const {
    const std::chrono::year_month_day ymd{std::chrono::year{year}, std::chrono::month{unsigned(month)},
                                          std::chrono::day{unsigned(day)}};
    return month >= 1 && day >= 1 && ymd.ok();
  }

  /// 1-based ordinal day within the year.
  int day_of_year() const {
    const Date jan1{year, 1, 1};
    return int((to_sys_days() - jan1.to_sys_days()).count()) + 1;
  }

  Date plus_days(int n) const { return from_sys_days(to_sys_days() + std::chrono::days{n}); }

  /// ISO form, YYYY-MM-DD.
  std::string iso() const {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", year, month, day);
    return buf;
  }

  /// Compact form used in frame filenames, YYYYMMDD.
  std::string compact() const {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d%02d%02d", year, month, day);
    return buf;
  }

  static Date parse_iso(std::string_view text) {
    Date d;
    const std::string s(text);
    if (std::sscanf(s.c_str(), "%4d-%2d-%2d", &d.year, &d.month, &d.day) != 3 || s.size() != 10 ||
        !d.valid()) {
      fail(ErrorCode::format_error, "bad date '" + s + "'");
    }
    return d;
  }
};

/// Signed whole days from `from` to `to`.
inline int days_between(const Date& from, const Date& to) {
  return int((to.to_sys_days() - from.to_sys_days()).count());
}

struct Timestamp {
  Date date;
  int minute_of_day = 0;  // [0, 1439]
  int second = 0;

  auto operator<=>(const Timestamp&) const = default;
};

}  // namespace suntrack
