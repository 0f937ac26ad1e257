#pragma once

// Frame naming: YYYYMMDDhhmmss_<exposure>.png, e.g. 20170301120400_short.png.

#include <cstdio>
#include <optional>
#include <regex>
#include <string>

#include "suntrack/calendar.hpp"
#include "suntrack/image.hpp"

namespace suntrack {

inline constexpr const char* kDefaultFramePattern = R"(^(\d{4})(\d{2})(\d{2})(\d{2})(\d{2})(\d{2})_(short|long)\.png$)";

inline std::string frame_filename(const Date& date, int minute_of_day, Exposure exposure, int second = 0) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s%02d%02d%02d_%s.png", date.compact().c_str(), minute_of_day / 60,
                minute_of_day % 60, second, exposure == Exposure::Short ? "short" : "long");
  return buf;
}

struct FrameName {
  Timestamp timestamp;
  Exposure exposure = Exposure::Short;
};

/// Parses a frame filename. The pattern must capture year, month, day, hour,
/// minute, second and exposure tag as groups 1..7.
inline std::optional<FrameName> parse_frame_filename(const std::string& name, const std::regex& pattern) {
  std::smatch m;
  if (!std::regex_match(name, m, pattern) || m.size() < 8) return std::nullopt;
  try {
    FrameName f;
    f.timestamp.date = {std::stoi(m[1]), std::stoi(m[2]), std::stoi(m[3])};
    const int hh = std::stoi(m[4]), mm = std::stoi(m[5]), ss = std::stoi(m[6]);
    if (!f.timestamp.date.valid() || hh > 23 || mm > 59 || ss > 59) return std::nullopt;
    f.timestamp.minute_of_day = hh * 60 + mm;
    f.timestamp.second = ss;
    const std::string tag = m[7];
    if (tag != "short" && tag != "long") return std::nullopt;
    f.exposure = parse_exposure(tag);
    return f;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

inline std::optional<FrameName> parse_frame_filename(const std::string& name) {
  static const std::regex pattern(kDefaultFramePattern);
  return parse_frame_filename(name, pattern);
}

}  // namespace suntrack
