#pragma once

// Text persistence for the observation store and the trajectory models.
//
// Observation store (UTF-8, LF, comma-separated):
//   # suntrack observation store v1 epoch=YYYY-MM-DD
//   day_index,date,minute,x,y,outlier,ambiguous,source_file
//   <one record per line, ordered by (day_index, minute)>
//
// Trajectory models:
//   # suntrack trajectory models v1 epoch=YYYY-MM-DD
//   day_index,minute_min,minute_max,n_estimates,x_model,y_model
//   <one record per day; each model is degree;shift;scale;c0;...;c_degree>
//
// Reals are written in shortest round-trip form, so a load/save cycle is exact.

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "suntrack/calendar.hpp"
#include "suntrack/error.hpp"
#include "suntrack/trajectory.hpp"

namespace suntrack {

namespace io {

inline std::string format_real(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline double parse_real(std::string_view s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    fail(ErrorCode::format_error, "bad number '" + std::string(s) + "'");
  }
  return v;
}

inline int parse_int(std::string_view s) {
  int v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    fail(ErrorCode::format_error, "bad integer '" + std::string(s) + "'");
  }
  return v;
}

inline bool parse_flag(std::string_view s) {
  if (s == "0") return false;
  if (s == "1") return true;
  fail(ErrorCode::format_error, "bad flag '" + std::string(s) + "'");
}

inline std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::io_failure, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::io_failure, "cannot write " + path.string());
  out.write(content.data(), std::streamsize(content.size()));
  if (!out) fail(ErrorCode::io_failure, "short write to " + path.string());
}

inline std::vector<std::string_view> lines(std::string_view text) {
  std::vector<std::string_view> out;
  for (auto l : split(text, '\n')) {
    if (!l.empty() && l.back() == '\r') l.remove_suffix(1);
    if (!l.empty()) out.push_back(l);
  }
  return out;
}

/// Parses "# <title> v<version> epoch=YYYY-MM-DD".
inline Date parse_header(std::string_view line, std::string_view title, int version) {
  const std::string prefix = "# " + std::string(title) + " v" + std::to_string(version) + " epoch=";
  if (line.substr(0, prefix.size()) != prefix) {
    fail(ErrorCode::format_error, "expected header '" + prefix + "...', got '" + std::string(line) + "'");
  }
  return Date::parse_iso(line.substr(prefix.size()));
}

inline std::string header(std::string_view title, int version, const Date& epoch) {
  return "# " + std::string(title) + " v" + std::to_string(version) + " epoch=" + epoch.iso() + "\n";
}

}  // namespace io

inline constexpr std::string_view kStoreTitle = "suntrack observation store";
inline constexpr std::string_view kStoreColumns = "day_index,date,minute,x,y,outlier,ambiguous,source_file";
inline constexpr std::string_view kModelTitle = "suntrack trajectory models";
inline constexpr std::string_view kModelColumns = "day_index,minute_min,minute_max,n_estimates,x_model,y_model";

inline std::string serialize_store(const ObservationStore& store) {
  std::string out = io::header(kStoreTitle, 1, store.epoch());
  out += kStoreColumns;
  out += '\n';
  for (const auto id : store.sorted_ids()) {
    const auto& r = store[id];
    if (r.source_file.find_first_of(",\n\r") != std::string::npos) {
      fail(ErrorCode::format_error, "source filename contains a separator: " + r.source_file);
    }
    out += std::to_string(r.day_index) + ',' + store.epoch().plus_days(r.day_index).iso() + ',' +
           std::to_string(r.minute) + ',' + io::format_real(r.x) + ',' + io::format_real(r.y) + ',' +
           (r.outlier ? '1' : '0') + ',' + (r.ambiguous ? '1' : '0') + ',' + r.source_file + '\n';
  }
  return out;
}

inline ObservationStore parse_store(std::string_view text) {
  const auto ls = io::lines(text);
  if (ls.size() < 2) fail(ErrorCode::format_error, "observation store is missing its header");
  ObservationStore store(io::parse_header(ls[0], kStoreTitle, 1));
  if (ls[1] != kStoreColumns) fail(ErrorCode::format_error, "unexpected store columns");
  for (std::size_t i = 2; i < ls.size(); ++i) {
    const auto f = io::split(ls[i], ',');
    if (f.size() != 8) fail(ErrorCode::format_error, "store line " + std::to_string(i + 1) + " has wrong arity");
    SunObservation obs;
    obs.day_index = io::parse_int(f[0]);
    if (store.epoch().plus_days(obs.day_index) != Date::parse_iso(f[1])) {
      fail(ErrorCode::format_error, "store line " + std::to_string(i + 1) + ": date disagrees with day_index");
    }
    obs.minute = io::parse_int(f[2]);
    obs.x = io::parse_real(f[3]);
    obs.y = io::parse_real(f[4]);
    obs.outlier = io::parse_flag(f[5]);
    obs.ambiguous = io::parse_flag(f[6]);
    obs.source_file = std::string(f[7]);
    store.add(std::move(obs));
  }
  return store;
}

inline void save_store(const ObservationStore& store, const std::filesystem::path& path) {
  io::write_file(path, serialize_store(store));
}

inline ObservationStore load_store(const std::filesystem::path& path) { return parse_store(io::read_file(path)); }

namespace io {

inline std::string format_model(const PolynomialModel& m) {
  std::string s = std::to_string(m.degree()) + ';' + format_real(m.input_shift()) + ';' + format_real(m.input_scale());
  for (double c : m.coefficients()) s += ';' + format_real(c);
  return s;
}

inline PolynomialModel parse_model(std::string_view field) {
  const auto parts = split(field, ';');
  if (parts.size() < 4) fail(ErrorCode::format_error, "truncated polynomial record");
  const int degree = parse_int(parts[0]);
  if (degree < 0 || parts.size() != std::size_t(degree) + 4) {
    fail(ErrorCode::format_error, "polynomial record does not match its degree");
  }
  std::vector<double> coeffs;
  for (std::size_t i = 3; i < parts.size(); ++i) coeffs.push_back(parse_real(parts[i]));
  return PolynomialModel(std::move(coeffs), parse_real(parts[1]), parse_real(parts[2]));
}

}  // namespace io

struct ModelFile {
  Date epoch;
  TrajectorySet trajectories;
};

inline std::string serialize_models(const TrajectorySet& set, const Date& epoch) {
  std::string out = io::header(kModelTitle, 1, epoch);
  out += kModelColumns;
  out += '\n';
  for (const auto& [day, t] : set) {
    out += std::to_string(day) + ',' + std::to_string(t.minute_min) + ',' + std::to_string(t.minute_max) + ',' +
           std::to_string(t.n_estimates) + ',' + io::format_model(t.model_x) + ',' + io::format_model(t.model_y) +
           '\n';
  }
  return out;
}

inline ModelFile parse_models(std::string_view text) {
  const auto ls = io::lines(text);
  if (ls.size() < 2) fail(ErrorCode::format_error, "model file is missing its header");
  ModelFile mf{io::parse_header(ls[0], kModelTitle, 1), {}};
  if (ls[1] != kModelColumns) fail(ErrorCode::format_error, "unexpected model columns");
  for (std::size_t i = 2; i < ls.size(); ++i) {
    const auto f = io::split(ls[i], ',');
    if (f.size() != 6) fail(ErrorCode::format_error, "model line " + std::to_string(i + 1) + " has wrong arity");
    DailyTrajectory t;
    t.day_index = io::parse_int(f[0]);
    t.minute_min = io::parse_int(f[1]);
    t.minute_max = io::parse_int(f[2]);
    t.n_estimates = io::parse_int(f[3]);
    t.model_x = io::parse_model(f[4]);
    t.model_y = io::parse_model(f[5]);
    mf.trajectories.emplace(t.day_index, std::move(t));
  }
  return mf;
}

inline void save_models(const TrajectorySet& set, const Date& epoch, const std::filesystem::path& path) {
  io::write_file(path, serialize_models(set, epoch));
}

inline ModelFile load_models(const std::filesystem::path& path) { return parse_models(io::read_file(path)); }

}  // namespace suntrack
