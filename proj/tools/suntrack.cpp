// suntrack command-line interface.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 internal numerical failure.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "suntrack/suntrack.hpp"

namespace fs = std::filesystem;
using namespace suntrack;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumerical = 3;

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return kExitUsage;
    case ErrorCode::numerical_failure: return kExitNumerical;
    default: return kExitData;
  }
}

/// Flags shared by every subcommand. Set flags override the config file.
struct CommonFlags {
  std::string config;
  std::string input, store, models, out, remap_cache;
  double p = 0, sigma = 0, alpha1 = 0, alpha2 = 0, outlier_px = 0;
  int window = 0;
  std::uint64_t seed = 0;
  bool undistort = false, raw_features = false, no_daily_fallback = false;
  int threads = -1;

  std::vector<std::pair<std::string, CLI::Option*>> opts;

  void attach(CLI::App* app) {
    auto add = [&](const char* name, auto& target, const char* help) {
      opts.emplace_back(name, app->add_option(name, target, help));
    };
    add("--config", config, "JSON configuration file");
    add("--input", input, "input directory of frames");
    add("--store", store, "observation store file");
    add("--models", models, "trajectory model file");
    add("--out", out, "output directory (or file, for annotate)");
    add("--p", p, "saturation fraction of the maximum intensity");
    add("--sigma", sigma, "localizer retention scale, pixels");
    add("--alpha1", alpha1, "cross-day ridge weight");
    add("--alpha2", alpha2, "within-day ridge weight");
    add("--window", window, "cross-day window, days");
    add("--outlier-px", outlier_px, "outlier distance, pixels");
    add("--remap-cache", remap_cache, "undistortion table cache file");
    add("--seed", seed, "synthetic generator seed");
    add("--threads", threads, "worker threads (0 = all cores)");
    opts.emplace_back("--undistort", app->add_flag("--undistort", undistort, "undistort frames before detection"));
    opts.emplace_back("--raw-features",
                      app->add_flag("--raw-features", raw_features, "fit on raw (unnormalized) input powers"));
    opts.emplace_back("--no-daily-fallback",
                      app->add_flag("--no-daily-fallback", no_daily_fallback,
                                    "only flag observations that have a stage-1 prediction"));
  }

  bool given(const std::string& name) const {
    for (const auto& [n, o] : opts)
      if (n == name) return o->count() > 0;
    return false;
  }

  PipelineConfig resolve() const {
    PipelineConfig cfg = config.empty() ? PipelineConfig{} : load_config(config);
    if (given("--input")) cfg.input_dir = input;
    if (given("--store")) cfg.store_file = store;
    if (given("--models")) cfg.model_file = models;
    if (given("--out")) cfg.out_dir = out;
    if (given("--remap-cache")) cfg.remap_cache = remap_cache;
    if (given("--p")) cfg.detection.p = p;
    if (given("--sigma")) cfg.detection.sigma = sigma;
    if (given("--alpha1")) cfg.trajectory.alpha1 = alpha1;
    if (given("--alpha2")) cfg.trajectory.alpha2 = alpha2;
    if (given("--window")) cfg.trajectory.window_days = window;
    if (given("--outlier-px")) cfg.trajectory.outlier_px = outlier_px;
    if (given("--seed")) cfg.scene.rng_seed = seed;
    if (given("--threads")) cfg.threads = unsigned(std::max(0, threads));
    if (undistort) cfg.undistort = true;
    if (raw_features) cfg.trajectory.raw_features = true;
    if (no_daily_fallback) cfg.trajectory.daily_fallback = false;
    cfg.validate();
    return cfg;
  }
};

std::string fmt_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

int cmd_synth(const PipelineConfig& cfg, int days, int step) {
  const fs::path out = cfg.out_dir;
  const auto manifest = generate_dataset(cfg.scene, days, step, out, cfg.thread_count());
  std::cout << "frames=" << manifest.frames << " visible=" << manifest.visible << " occluded=" << manifest.occluded
            << " flares=" << manifest.flares << "\ntruth=" << manifest.truth_path.string() << "\n";
  return 0;
}

int cmd_ingest(const PipelineConfig& cfg) {
  if (cfg.input_dir.empty()) throw CLI::ValidationError("--input", "an input directory is required");
  ObservationStore store;
  if (fs::exists(cfg.store_file)) store = load_store(cfg.store_file);
  const auto report = ingest(cfg.input_dir, cfg, store);
  for (const auto& w : report.warnings) std::cerr << "warning: " << w << "\n";
  save_store(store, cfg.store_file);
  std::cout << "png_files=" << report.png_files << " processed=" << report.processed
            << " appended=" << report.appended << " hidden=" << report.hidden
            << " already_present=" << report.already_present << " other_exposure=" << report.other_exposure
            << " unparsable=" << report.unparsable << " corrupt=" << report.corrupt << "\n";
  if (report.skip_fraction() > cfg.max_skip_fraction) {
    std::cerr << "error: " << report.unparsable + report.corrupt << " of " << report.png_files
              << " files could not be used\n";
    return kExitData;
  }
  return 0;
}

int cmd_detect(const PipelineConfig& cfg, const std::string& image) {
  auto img = read_sky_image(image, cfg.channel);
  std::optional<RemapTable> remap;
  if (cfg.undistort) {
    const auto model = cfg.fisheye_for(img.width(), img.height());
    remap = cfg.remap_cache.empty() ? build_remap(model, cfg.plane) : cached_remap(model, cfg.plane, cfg.remap_cache);
  }
  const auto r = process_frame(img, cfg.detection, remap ? &*remap : nullptr, cfg.sampling);
  std::cout << "label=" << (r.label.visible() ? "VisibleSun" : "HiddenSun") << " max=" << r.label.max_intensity;
  if (r.detection) {
    std::cout << " x=" << fmt_real(r.detection->x) << " y=" << fmt_real(r.detection->y)
              << " saturated=" << r.detection->n_saturated << " retained=" << r.detection->n_retained
              << " ambiguous=" << (r.detection->ambiguous ? 1 : 0);
  }
  std::cout << "\n";
  return 0;
}

int cmd_fit(const PipelineConfig& cfg) {
  auto store = load_store(cfg.store_file);
  if (store.empty()) fail(ErrorCode::empty_input, "observation store is empty");
  const auto summary = fit_all(store, cfg.trajectory, cfg.thread_count());
  save_store(store, cfg.store_file);
  save_models(summary.trajectories, store.epoch(), cfg.model_file);
  std::cout << fit_report_text(summary, store);
  std::cerr << "days_fitted=" << summary.trajectories.size() << " outliers_flagged=" << summary.total_flagged << "\n";
  return 0;
}

int cmd_predict(const PipelineConfig& cfg, const std::string& date, int day, double minute) {
  const auto mf = load_models(cfg.model_file);
  if (!date.empty()) day = days_between(mf.epoch, Date::parse_iso(date));
  const auto it = mf.trajectories.find(day);
  if (it == mf.trajectories.end()) fail(ErrorCode::day_without_model, "no trajectory for day " + std::to_string(day));
  const auto p = predict_position(it->second, minute);
  std::cout << "day_index=" << day << " minute=" << minute << " x=" << fmt_real(p.x) << " y=" << fmt_real(p.y)
            << " extrapolated=" << (p.extrapolated ? 1 : 0) << "\n";
  return 0;
}

int cmd_evaluate(const PipelineConfig& cfg, const std::string& truth_file, int first_day, int last_day) {
  const auto store = load_store(cfg.store_file);
  const auto mf = load_models(cfg.model_file);
  const int width = cfg.coordinate_width();
  const auto report = evaluate_mae(store, mf.trajectories, width, first_day, last_day);
  const auto text = mae_report_text(report, width);
  io::write_file(fs::path(cfg.out_dir) / "metrics.txt", text);
  std::cout << "mae_px=" << fmt_real(report.mae_px) << " mae_percent=" << fmt_real(report.mae_percent)
            << " observations=" << report.count << "\n";
  if (!truth_file.empty()) {
    const fs::path frames = cfg.input_dir.empty() ? fs::path(truth_file).parent_path() : cfg.input_dir;
    const auto metrics = evaluate_classification(frames.empty() ? fs::path(".") : frames, load_truth(truth_file), cfg);
    const auto mtext = metrics_text(metrics);
    io::write_file(fs::path(cfg.out_dir) / "classification.txt", mtext);
    std::cout << mtext;
  }
  return 0;
}

std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(io::parse_int(item));
  }
  return out;
}

int cmd_plot(const PipelineConfig& cfg, const std::string& kind, const std::string& days_arg, int every, int count,
             const std::string& minutes_arg, const std::string& axis, int size) {
  const auto store = load_store(cfg.store_file);
  const fs::path out = cfg.out_dir;
  if (kind == "visibility") {
    emit_visibility_map(store, out / "visibility_map.png");
    std::cout << "wrote " << (out / "visibility_map.png").string() << "\n";
    return 0;
  }
  const auto mf = load_models(cfg.model_file);
  if (kind == "trajectory") {
    std::vector<int> days = parse_int_list(days_arg);
    if (days.empty() && !mf.trajectories.empty()) {
      for (int d = mf.trajectories.begin()->first, n = 0; n < count && d <= mf.trajectories.rbegin()->first;
           d += every) {
        if (mf.trajectories.contains(d)) {
          days.push_back(d);
          ++n;
        }
      }
    }
    const auto s = emit_trajectory_plot(mf.trajectories, store, days, out / "trajectories.png", size, size);
    std::cout << "curves=" << s.curves << " points=" << s.points << " wrote " << (out / "trajectories.png").string()
              << "\n";
    return 0;
  }
  if (kind == "minutes") {
    auto minutes = parse_int_list(minutes_arg);
    if (minutes.empty())
      for (int m = 225; m <= 1220; m += 25) minutes.push_back(m);
    auto s = minute_plot(mf.trajectories, store, minutes, axis == "x" ? Axis::x : Axis::y, size);
    const auto path = out / ("minutes_" + axis + ".png");
    write_png(path, s.image);
    std::cout << "curves=" << s.curves << " points=" << s.points << " wrote " << path.string() << "\n";
    return 0;
  }
  throw CLI::ValidationError("--kind", "must be visibility, trajectory or minutes");
}

int cmd_annotate(const PipelineConfig& cfg, const std::string& image, const std::string& output) {
  const fs::path in(image);
  auto img = read_sky_image(in, cfg.channel);
  const auto name = parse_frame_filename(in.filename().string(), std::regex(cfg.filename_pattern));
  if (!name) fail(ErrorCode::unparsable_filename, in.filename().string());
  img.set_timestamp(name->timestamp);
  if (cfg.undistort) {
    const auto model = cfg.fisheye_for(img.width(), img.height());
    const auto remap =
        cfg.remap_cache.empty() ? build_remap(model, cfg.plane) : cached_remap(model, cfg.plane, cfg.remap_cache);
    img = apply_remap(img, remap, cfg.sampling);
  }
  const auto mf = load_models(cfg.model_file);
  const fs::path dest = output.empty() ? fs::path(cfg.out_dir) / ("annotated_" + in.filename().string()) : fs::path(output);
  const auto p = annotate_frame(img, mf, dest);
  std::cout << "x=" << fmt_real(p.x) << " y=" << fmt_real(p.y) << " extrapolated=" << (p.extrapolated ? 1 : 0)
            << " wrote " << dest.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"suntrack: Sun tracking in fisheye sky images"};
  app.require_subcommand(1);

  CommonFlags synth_flags, ingest_flags, detect_flags, fit_flags, predict_flags, eval_flags, plot_flags, ann_flags;

  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset with ground truth");
  synth_flags.attach(synth);
  int days = -1, step = -1;
  synth->add_option("--days", days, "number of days");
  synth->add_option("--step", step, "minutes between frames");

  auto* ingest_cmd = app.add_subcommand("ingest", "detect the Sun in a directory of frames and update the store");
  ingest_flags.attach(ingest_cmd);

  auto* detect = app.add_subcommand("detect", "classify and localize a single frame");
  detect_flags.attach(detect);
  std::string detect_image;
  detect->add_option("--image", detect_image, "frame PNG")->required();

  auto* fit = app.add_subcommand("fit", "flag outliers and fit daily trajectories");
  fit_flags.attach(fit);

  auto* predict_cmd = app.add_subcommand("predict", "evaluate a daily trajectory");
  predict_flags.attach(predict_cmd);
  std::string date;
  int day = 0;
  double minute = 0;
  predict_cmd->add_option("--date", date, "calendar date YYYY-MM-DD");
  predict_cmd->add_option("--day", day, "day index relative to the model epoch");
  predict_cmd->add_option("--minute", minute, "minute of day")->required();

  auto* evaluate = app.add_subcommand("evaluate", "trajectory MAE and, with --truth, classification metrics");
  eval_flags.attach(evaluate);
  std::string truth;
  int first_day = INT_MIN, last_day = INT_MAX;
  evaluate->add_option("--truth", truth, "ground-truth file of a synthetic dataset; frames default to its directory");
  evaluate->add_option("--first-day", first_day, "first day index scored");
  evaluate->add_option("--last-day", last_day, "last day index scored");

  auto* plot = app.add_subcommand("plot", "emit figures");
  plot_flags.attach(plot);
  std::string kind = "trajectory", days_arg, minutes_arg, axis = "y";
  int every = 10, count = 15, size = 512;
  plot->add_option("--kind", kind, "visibility | trajectory | minutes");
  plot->add_option("--days", days_arg, "comma-separated day indices");
  plot->add_option("--every", every, "day sampling interval when --days is absent");
  plot->add_option("--count", count, "number of sampled days when --days is absent");
  plot->add_option("--minutes", minutes_arg, "comma-separated minutes for --kind minutes");
  plot->add_option("--axis", axis, "x | y for --kind minutes");
  plot->add_option("--size", size, "canvas size / coordinate range in pixels");

  auto* annotate = app.add_subcommand("annotate", "draw the predicted Sun position on a frame");
  ann_flags.attach(annotate);
  std::string ann_image, ann_output;
  annotate->add_option("--image", ann_image, "frame PNG")->required();
  annotate->add_option("--output", ann_output, "annotated PNG path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    if (*synth) {
      auto cfg = synth_flags.resolve();
      return cmd_synth(cfg, days > 0 ? days : cfg.synth_days, step > 0 ? step : cfg.synth_step_minutes);
    }
    if (*ingest_cmd) return cmd_ingest(ingest_flags.resolve());
    if (*detect) return cmd_detect(detect_flags.resolve(), detect_image);
    if (*fit) return cmd_fit(fit_flags.resolve());
    if (*predict_cmd) return cmd_predict(predict_flags.resolve(), date, day, minute);
    if (*evaluate) return cmd_evaluate(eval_flags.resolve(), truth, first_day, last_day);
    if (*plot) return cmd_plot(plot_flags.resolve(), kind, days_arg, every, count, minutes_arg, axis, size);
    if (*annotate) return cmd_annotate(ann_flags.resolve(), ann_image, ann_output);
  } catch (const CLI::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitNumerical;
  }
  return kExitUsage;
}
