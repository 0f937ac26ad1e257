#pragma once

// Pipeline wiring: configuration, ingestion of frame directories into the
// observation store, fitting, and report formatting.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <regex>
#include <string>
#include <vector>

#include <json.hpp>

#include "suntrack/detection.hpp"
#include "suntrack/error.hpp"
#include "suntrack/filenames.hpp"
#include "suntrack/geometry.hpp"
#include "suntrack/metrics.hpp"
#include "suntrack/parallel.hpp"
#include "suntrack/png_io.hpp"
#include "suntrack/store_io.hpp"
#include "suntrack/synth.hpp"
#include "suntrack/trajectory.hpp"

namespace suntrack {

struct PipelineConfig {
  DetectionConfig detection;
  TrajectoryConfig trajectory;

  // Fisheye intrinsics; unset fields default to the image centre and half the shorter side.
  std::optional<double> center_x;
  std::optional<double> center_y;
  std::optional<double> rim_radius;
  double max_zenith_deg = 90.0;

  PlaneProjection plane;
  bool undistort = false;
  Sampling sampling = Sampling::bilinear;

  std::filesystem::path input_dir;
  std::filesystem::path store_file = "observations.csv";
  std::filesystem::path model_file = "models.csv";
  std::filesystem::path out_dir = "out";
  std::filesystem::path remap_cache;

  std::string filename_pattern = kDefaultFramePattern;
  Exposure exposure = Exposure::Short;
  Channel channel = Channel::blue;
  double max_skip_fraction = 0.5;

  int image_width = 512;  // denominator of the relative MAE

  SceneConfig scene;
  int synth_days = 90;
  int synth_step_minutes = 5;

  unsigned threads = 0;  // 0 = hardware concurrency

  unsigned thread_count() const { return threads == 0 ? default_thread_count() : threads; }

  FisheyeModel fisheye_for(int width, int height) const {
    FisheyeModel m = FisheyeModel::for_image(width, height, deg2rad(max_zenith_deg));
    if (center_x) m.center.x = *center_x;
    if (center_y) m.center.y = *center_y;
    if (rim_radius) m.rim_radius = *rim_radius;
    m.validate();
    return m;
  }

  /// Width of the rasters the store's coordinates refer to.
  int coordinate_width() const { return undistort ? plane.size : image_width; }

  void validate() const {
    detection.validate();
    trajectory.validate();
    plane.validate();
    scene.validate();
    require(max_zenith_deg > 0.0 && max_zenith_deg <= 90.0, ErrorCode::invalid_argument,
            "max_zenith_deg must be in (0, 90]");
    require(max_skip_fraction >= 0.0 && max_skip_fraction <= 1.0, ErrorCode::invalid_argument,
            "max_skip_fraction must be in [0, 1]");
    require(image_width > 0, ErrorCode::invalid_argument, "image_width must be positive");
  }
};

namespace detail {

template <typename T>
void read_key(const nlohmann::json& obj, const char* key, T& target) {
  if (obj.contains(key)) target = obj.at(key).get<T>();
}

inline void check_keys(const nlohmann::json& obj, std::initializer_list<const char*> allowed, const char* where) {
  if (!obj.is_object()) fail(ErrorCode::format_error, std::string(where) + " must be an object");
  for (const auto& [k, v] : obj.items()) {
    if (std::find_if(allowed.begin(), allowed.end(), [&](const char* a) { return k == a; }) == allowed.end()) {
      fail(ErrorCode::format_error, "unknown key '" + k + "' in " + where);
    }
  }
}

}  // namespace detail

/// Applies a JSON document on top of `cfg`. Keys absent from the document keep their values.
inline void apply_config_json(const nlohmann::json& doc, PipelineConfig& cfg) {
  using detail::check_keys;
  using detail::read_key;
  try {
    check_keys(doc, {"detection", "trajectory", "fisheye", "plane", "undistort", "sampling", "paths", "ingest",
                     "evaluate", "synth", "threads"},
               "config");
    if (doc.contains("detection")) {
      const auto& d = doc["detection"];
      check_keys(d, {"p", "sigma", "cutoff_multiple"}, "detection");
      read_key(d, "p", cfg.detection.p);
      read_key(d, "sigma", cfg.detection.sigma);
      read_key(d, "cutoff_multiple", cfg.detection.cutoff_multiple);
    }
    if (doc.contains("trajectory")) {
      const auto& t = doc["trajectory"];
      check_keys(t, {"window_days", "degree", "alpha1", "alpha2", "outlier_px", "min_obs", "max_gap_days",
                     "raw_features", "penalize_intercept", "daily_fallback"},
                 "trajectory");
      auto& c = cfg.trajectory;
      read_key(t, "window_days", c.window_days);
      read_key(t, "degree", c.degree);
      read_key(t, "alpha1", c.alpha1);
      read_key(t, "alpha2", c.alpha2);
      read_key(t, "outlier_px", c.outlier_px);
      read_key(t, "min_obs", c.min_obs);
      read_key(t, "max_gap_days", c.max_gap_days);
      read_key(t, "raw_features", c.raw_features);
      read_key(t, "penalize_intercept", c.penalize_intercept);
      read_key(t, "daily_fallback", c.daily_fallback);
    }
    if (doc.contains("fisheye")) {
      const auto& f = doc["fisheye"];
      check_keys(f, {"center_x", "center_y", "rim_radius", "max_zenith_deg"}, "fisheye");
      if (f.contains("center_x")) cfg.center_x = f["center_x"].get<double>();
      if (f.contains("center_y")) cfg.center_y = f["center_y"].get<double>();
      if (f.contains("rim_radius")) cfg.rim_radius = f["rim_radius"].get<double>();
      read_key(f, "max_zenith_deg", cfg.max_zenith_deg);
    }
    if (doc.contains("plane")) {
      const auto& p = doc["plane"];
      check_keys(p, {"size", "fov_zenith_deg"}, "plane");
      read_key(p, "size", cfg.plane.size);
      if (p.contains("fov_zenith_deg")) cfg.plane.fov_zenith = deg2rad(p["fov_zenith_deg"].get<double>());
    }
    read_key(doc, "undistort", cfg.undistort);
    if (doc.contains("sampling")) {
      const auto s = doc["sampling"].get<std::string>();
      if (s == "bilinear") cfg.sampling = Sampling::bilinear;
      else if (s == "nearest") cfg.sampling = Sampling::nearest;
      else fail(ErrorCode::format_error, "sampling must be 'bilinear' or 'nearest'");
    }
    if (doc.contains("paths")) {
      const auto& p = doc["paths"];
      check_keys(p, {"input", "store", "models", "out", "remap_cache"}, "paths");
      auto path_key = [&](const char* key, std::filesystem::path& target) {
        if (p.contains(key)) target = p[key].get<std::string>();
      };
      path_key("input", cfg.input_dir);
      path_key("store", cfg.store_file);
      path_key("models", cfg.model_file);
      path_key("out", cfg.out_dir);
      path_key("remap_cache", cfg.remap_cache);
    }
    if (doc.contains("ingest")) {
      const auto& i = doc["ingest"];
      check_keys(i, {"pattern", "exposure", "channel", "max_skip_fraction"}, "ingest");
      read_key(i, "pattern", cfg.filename_pattern);
      if (i.contains("exposure")) cfg.exposure = parse_exposure(i["exposure"].get<std::string>());
      if (i.contains("channel")) cfg.channel = parse_channel(i["channel"].get<std::string>());
      read_key(i, "max_skip_fraction", cfg.max_skip_fraction);
    }
    if (doc.contains("evaluate")) {
      const auto& e = doc["evaluate"];
      check_keys(e, {"image_width"}, "evaluate");
      read_key(e, "image_width", cfg.image_width);
    }
    if (doc.contains("synth")) {
      const auto& s = doc["synth"];
      check_keys(s, {"latitude_deg", "image_size", "bit_depth", "sun_disk_radius", "cloud_probability",
                     "flare_probability", "noise_sigma", "seed", "start_date", "occlusion", "days", "step_minutes"},
                 "synth");
      auto& sc = cfg.scene;
      read_key(s, "latitude_deg", sc.latitude_deg);
      read_key(s, "image_size", sc.image_size);
      read_key(s, "bit_depth", sc.bit_depth);
      read_key(s, "sun_disk_radius", sc.sun_disk_radius);
      read_key(s, "cloud_probability", sc.cloud_probability);
      read_key(s, "flare_probability", sc.flare_probability);
      read_key(s, "noise_sigma", sc.noise_sigma);
      read_key(s, "seed", sc.rng_seed);
      if (s.contains("start_date")) sc.start_date = Date::parse_iso(s["start_date"].get<std::string>());
      if (s.contains("occlusion")) {
        const auto o = s["occlusion"].get<std::string>();
        if (o == "near_threshold") sc.occlusion = OcclusionStyle::near_threshold;
        else if (o == "dim") sc.occlusion = OcclusionStyle::dim;
        else fail(ErrorCode::format_error, "occlusion must be 'near_threshold' or 'dim'");
      }
      read_key(s, "days", cfg.synth_days);
      read_key(s, "step_minutes", cfg.synth_step_minutes);
    }
    read_key(doc, "threads", cfg.threads);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::format_error, std::string("config: ") + e.what());
  }
}

inline PipelineConfig load_config(const std::filesystem::path& path, PipelineConfig base = {}) {
  const auto text = io::read_file(path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::format_error, path.string() + ": " + e.what());
  }
  apply_config_json(doc, base);
  return base;
}

/// Detection result for one frame, independent of any store.
struct FrameResult {
  ClassificationLabel label;
  std::optional<SunDetection> detection;
};

/// Runs classification and, when visible, localization. The remap is applied first when given.
inline FrameResult process_frame(const SkyImage& img, const DetectionConfig& cfg, const RemapTable* remap = nullptr,
                                 Sampling sampling = Sampling::bilinear) {
  const SkyImage* source = &img;
  SkyImage undistorted;
  if (remap) {
    undistorted = apply_remap(img, *remap, sampling);
    source = &undistorted;
  }
  FrameResult r;
  r.label = classify(*source, cfg);
  if (r.label.visible()) r.detection = localize(*source, cfg);
  return r;
}

struct IngestReport {
  std::size_t png_files = 0;
  std::size_t processed = 0;
  std::size_t appended = 0;
  std::size_t hidden = 0;
  std::size_t already_present = 0;
  std::size_t other_exposure = 0;
  std::size_t unparsable = 0;
  std::size_t corrupt = 0;
  std::vector<std::string> warnings;

  double skip_fraction() const {
    return png_files == 0 ? 0.0 : double(unparsable + corrupt) / double(png_files);
  }
};

/// Classifies and localizes every selected frame of `dir` and appends visible
/// Sun observations to `store`. Frames already recorded are skipped.
inline IngestReport ingest(const std::filesystem::path& dir, const PipelineConfig& cfg, ObservationStore& store) {
  cfg.validate();
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) fail(ErrorCode::io_failure, dir.string() + " is not a directory");

  std::regex pattern;
  try {
    pattern = std::regex(cfg.filename_pattern);
  } catch (const std::regex_error& e) {
    fail(ErrorCode::invalid_argument, std::string("bad filename pattern: ") + e.what());
  }

  std::vector<std::string> names;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".png") names.push_back(entry.path().filename().string());
  }
  std::sort(names.begin(), names.end());

  IngestReport report;
  report.png_files = names.size();
  struct Job {
    std::string name;
    Timestamp ts;
  };
  std::vector<Job> jobs;
  for (const auto& name : names) {
    const auto parsed = parse_frame_filename(name, pattern);
    if (!parsed) {
      ++report.unparsable;
      report.warnings.push_back("unparsable filename: " + name);
      continue;
    }
    if (parsed->exposure != cfg.exposure) {
      ++report.other_exposure;
      continue;
    }
    if (store.has_source(name)) {
      ++report.already_present;
      continue;
    }
    jobs.push_back({name, parsed->timestamp});
  }
  if (jobs.empty()) return report;

  const Date earliest =
      std::min_element(jobs.begin(), jobs.end(), [](const Job& a, const Job& b) { return a.ts < b.ts; })->ts.date;
  if (store.empty()) {
    if (store.epoch() != earliest) store.set_epoch(earliest);
  } else if (earliest < store.epoch()) {
    store.rebase(earliest);
  }

  std::optional<RemapTable> remap;
  std::mutex remap_mutex;
  auto remap_for = [&](const SkyImage& img) -> const RemapTable* {
    if (!cfg.undistort) return nullptr;
    std::lock_guard lock(remap_mutex);
    if (!remap) {
      const auto model = cfg.fisheye_for(img.width(), img.height());
      remap = cfg.remap_cache.empty() ? build_remap(model, cfg.plane) : cached_remap(model, cfg.plane, cfg.remap_cache);
    }
    return &*remap;
  };

  struct Outcome {
    std::optional<FrameResult> result;
    std::string error;
  };
  std::vector<Outcome> outcomes(jobs.size());
  parallel_for(
      jobs.size(),
      [&](std::size_t i) {
        try {
          auto img = read_sky_image(dir / jobs[i].name, cfg.channel);
          img.set_timestamp(jobs[i].ts);
          img.set_exposure(cfg.exposure);
          outcomes[i].result = process_frame(img, cfg.detection, remap_for(img), cfg.sampling);
        } catch (const Error& e) {
          if (e.code() != ErrorCode::corrupt_image && e.code() != ErrorCode::io_failure &&
              e.code() != ErrorCode::dimension_mismatch && e.code() != ErrorCode::empty_image) {
            throw;
          }
          outcomes[i].error = e.what();
        }
      },
      cfg.thread_count());

  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const auto& out = outcomes[i];
    if (!out.result) {
      ++report.corrupt;
      report.warnings.push_back("skipped " + jobs[i].name + ": " + out.error);
      continue;
    }
    ++report.processed;
    if (!out.result->detection) {
      ++report.hidden;
      continue;
    }
    SunObservation obs;
    obs.day_index = days_between(store.epoch(), jobs[i].ts.date);
    obs.minute = jobs[i].ts.minute_of_day;
    obs.x = out.result->detection->x;
    obs.y = out.result->detection->y;
    obs.ambiguous = out.result->detection->ambiguous;
    obs.source_file = jobs[i].name;
    if (store.add(std::move(obs))) ++report.appended;
  }
  return report;
}

/// Per-day fit summary: day,date,n_estimates,minute_min,minute_max,n_obs,flagged,mae_px
inline std::string fit_report_text(const FitSummary& summary, const ObservationStore& store) {
  std::string out = "day_index,date,n_estimates,minute_min,minute_max,n_obs,flagged,mae_px\n";
  for (const auto& [day, flagged] : summary.flagged_per_day) {
    const auto it = summary.trajectories.find(day);
    std::size_t n_obs = 0;
    double err = 0.0;
    if (it != summary.trajectories.end()) {
      for (const auto id : store.on_day(day)) {
        const auto& obs = store[id];
        if (obs.outlier) continue;
        const auto p = predict_position(it->second, obs.minute);
        err += std::hypot(obs.x - p.x, obs.y - p.y);
        ++n_obs;
      }
    }
    char buf[160];
    if (it == summary.trajectories.end()) {
      std::snprintf(buf, sizeof buf, "%d,%s,0,,,%zu,%d,\n", day, store.epoch().plus_days(day).iso().c_str(),
                    store.on_day(day).size(), flagged);
    } else if (n_obs == 0) {
      std::snprintf(buf, sizeof buf, "%d,%s,%d,%d,%d,0,%d,\n", day, store.epoch().plus_days(day).iso().c_str(),
                    it->second.n_estimates, it->second.minute_min, it->second.minute_max, flagged);
    } else {
      std::snprintf(buf, sizeof buf, "%d,%s,%d,%d,%d,%zu,%d,%.4f\n", day, store.epoch().plus_days(day).iso().c_str(),
                    it->second.n_estimates, it->second.minute_min, it->second.minute_max, n_obs, flagged,
                    err / double(n_obs));
    }
    out += buf;
  }
  return out;
}

inline std::string mae_report_text(const MaeReport& r, int image_width) {
  std::string out;
  char buf[200];
  std::snprintf(buf, sizeof buf,
                "mae_px=%.6f\nmae_percent_of_width=%.6f\nobservations=%zu\nmae_px_with_outliers=%.6f\n"
                "observations_with_outliers=%zu\nimage_width=%d\n",
                r.mae_px, r.mae_percent, r.count, r.mae_px_with_outliers, r.count_with_outliers, image_width);
  out += buf;
  out += "day_index,mae_px,observations\n";
  for (const auto& [day, e] : r.per_day) {
    std::snprintf(buf, sizeof buf, "%d,%.6f,%zu\n", day, e.mae_px, e.count);
    out += buf;
  }
  return out;
}

inline std::string metrics_text(const ClassificationMetrics& m) {
  auto fmt = [](const std::optional<double>& v) -> std::string {
    if (!v) return "undefined";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", *v);
    return buf;
  };
  const auto& c = m.counts;
  char buf[128];
  std::snprintf(buf, sizeof buf, "tp=%zu\nfp=%zu\ntn=%zu\nfn=%zu\n", c.tp, c.fp, c.tn, c.fn);
  return std::string(buf) + "accuracy=" + fmt(m.accuracy) + "\nprecision=" + fmt(m.precision) +
         "\nrecall=" + fmt(m.recall) + "\nf1=" + fmt(m.f1) + "\n";
}

/// Scores the classifier on a synthetic dataset directory against its truth file.
inline ClassificationMetrics evaluate_classification(const std::filesystem::path& dir, const TruthFile& truth,
                                                     const PipelineConfig& cfg) {
  std::vector<Visibility> predicted, actual;
  for (const auto& e : truth.entries) {
    if (!e.record.sun_above_horizon) continue;
    const auto img = read_sky_image(dir / e.source_file, cfg.channel);
    predicted.push_back(classify(img, cfg.detection).label);
    actual.push_back(e.record.occluded ? Visibility::HiddenSun : Visibility::VisibleSun);
  }
  return classify_metrics(predicted, actual);
}

}  // namespace suntrack
