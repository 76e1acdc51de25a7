#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "raceline/error.hpp"
#include "raceline/io.hpp"
#include "raceline/pipeline.hpp"

using namespace raceline;

namespace {

struct Overrides {
  std::string config;
  std::optional<std::string> track;
  std::optional<double> ds;
  std::optional<int> ctrl_points;
  std::optional<double> margin;
  std::optional<std::string> out;
  std::optional<std::string> window;
  std::string trajectory;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "run configuration (key = value)");
  cmd->add_option("--track", o.track, "track CSV (x_m,y_m,w_left_m,w_right_m)");
  cmd->add_option("--ds", o.ds, "sample spacing in metres");
  cmd->add_option("--ctrl-points", o.ctrl_points, "number of spline control points");
  cmd->add_option("--margin", o.margin, "safety margin per side in metres");
  cmd->add_option("--out", o.out, "output directory");
}

std::string stage = "config";

void note(const std::string& msg) { std::cerr << "[" << stage << "] " << msg << '\n'; }

RunConfig resolve(const Overrides& o) {
  stage = "config";
  RunConfig cfg = o.config.empty() ? parse_config("") : load_config(o.config);
  if (o.track) cfg.set("track", *o.track);
  if (o.ds) cfg.ds = *o.ds;
  if (o.ctrl_points) cfg.ctrl_points = *o.ctrl_points;
  if (o.margin) cfg.margin_m = *o.margin;
  if (o.out) cfg.out = *o.out;
  if (o.window) cfg.window = *o.window;
  cfg.validate();
  return cfg;
}

TrackDefinition load(const RunConfig& cfg) {
  stage = "load";
  if (cfg.track.empty()) {
    throw ArgumentError("no track given (config key 'track' or --track)");
  }
  return load_track(cfg.track, cfg.closed_loop);
}

void echo_vehicle(const RunConfig& cfg) {
  const auto& te = cfg.vehicle;
  const auto tag = [&](const char* key) {
    return std::find(cfg.vehicle_defaults.begin(), cfg.vehicle_defaults.end(), key) !=
                   cfg.vehicle_defaults.end()
               ? " (default)"
               : "";
  };
  note(fmt::format("vehicle a_acc_max={}{} a_dec_max={}{} a_lat_left={}{} a_lat_right={}{} "
                   "v_max={}{}",
                   te.a_acc_max, tag("a_acc_max"), te.a_dec_max, tag("a_dec_max"), te.a_lat_left,
                   tag("a_lat_left"), te.a_lat_right, tag("a_lat_right"),
                   te.v_max ? fmt::format("{}", *te.v_max) : "none", tag("v_max")));
}

void print_metrics(const LapMetrics& m) {
  std::cout << fmt::format(
      "lap_time_s {:.3f}\navg_speed_mps {:.3f}\nmax_speed_mps {:.3f}\nmin_speed_mps {:.3f}\n"
      "max_lat_g_mps2 {:.3f}\nmax_throttle_mps2 {:.3f}\nmax_braking_mps2 {:.3f}\n",
      m.lap_time, m.avg_speed, m.max_speed, m.min_speed, m.max_lat_g, m.max_throttle,
      m.max_braking + 0.0);
}

int cmd_fit(const Overrides& o) {
  const auto cfg = resolve(o);
  const auto def = load(cfg);
  stage = "fit";
  const auto opts = cfg.centerline_options(def);
  const auto cm = build_centerline(def, opts);
  for (const auto& w : cm.warnings) {
    note(fmt::format("warning: {}", w));
  }
  stage = "write";
  write_file(cfg.out / "centerline.json", spline_to_json(cm.spline).dump(2) + "\n");
  const Json report{{"track", def.name},
                    {"waypoints", def.waypoints.size()},
                    {"ctrl_points", cm.spline.num_ctrl()},
                    {"samples", cm.disc.size()},
                    {"length_m", cm.disc.total_length},
                    {"max_deviation_m", cm.fit.max_deviation},
                    {"rms_deviation_m", cm.fit.rms_deviation},
                    {"worst_waypoint", cm.fit.worst_waypoint + 1},
                    {"warnings", cm.warnings}};
  write_file(cfg.out / "fit_report.json", report.dump(2) + "\n");
  std::cout << fmt::format("ctrl_points {}\nsamples {}\nlength_m {:.3f}\n", cm.spline.num_ctrl(),
                           cm.disc.size(), cm.disc.total_length)
            << fmt::format("max_deviation_m {:.6f}\nrms_deviation_m {:.6f}\n",
                           cm.fit.max_deviation, cm.fit.rms_deviation);
  return 0;
}

int cmd_optimize(const Overrides& o) {
  const auto cfg = resolve(o);
  echo_vehicle(cfg);
  const auto def = load(cfg);
  const auto run = run_optimize(cfg, def, [](const std::string& s) { stage = s; });
  for (const auto& w : run.centerline.warnings) {
    note(fmt::format("warning: {}", w));
  }
  const auto& b = run.bundle;
  stage = "optimize";
  note(fmt::format("{} variables, {} constraint rows, {} samples, status {}, solve_time {:.6f} s",
                   b.num_vars, b.num_rows, b.centerline_disc.size(), to_string(b.solution.status),
                   b.solution.solve_time));
  if (b.solution.status != QpStatus::solved) {
    note("warning: QP stopped before reaching the KKT tolerance");
  }
  stage = "write";
  write_bundle(b, run.centerline, cfg.out);
  std::cout << comparison_table(b.centerline_metrics, b.optimized_metrics);
  return 0;
}

int cmd_simulate(const Overrides& o) {
  const auto cfg = resolve(o);
  echo_vehicle(cfg);
  stage = "load";
  if (o.trajectory.empty()) {
    throw ArgumentError("simulate needs --trajectory (spline JSON or trace CSV)");
  }
  const std::filesystem::path path = o.trajectory;
  const auto text = read_file(path);
  DiscretizationSet disc;
  if (path.extension() == ".json") {
    Json j;
    try {
      j = Json::parse(text);
    } catch (const Json::exception& e) {
      throw ValidationError(fmt::format("'{}' is not valid JSON: {}", path.string(), e.what()));
    }
    if (j.contains("optimized") && j.at("optimized").contains("spline")) {
      j = j.at("optimized").at("spline");
    }
    disc = discretize_by_arclength(spline_from_json(j), cfg.ds);
  } else {
    disc = parse_trace_csv(text, cfg.closed_loop);
  }
  stage = "simulate";
  const auto sim = simulate_discretization(std::move(disc), cfg.vehicle);
  stage = "write";
  write_file(cfg.out / "simulation.json",
             Json{{"metrics", metrics_to_json(sim.metrics)},
                  {"vehicle", vehicle_to_json(cfg.vehicle)},
                  {"samples", sim.disc.size()},
                  {"length_m", sim.disc.total_length}}
                     .dump(2) +
                 "\n");
  write_file(cfg.out / "trace.csv", format_trace_csv(sim.disc, sim.profile));
  write_file(cfg.out / "heatmap.csv", format_heatmap_csv(sim.disc, sim.profile));
  print_metrics(sim.metrics);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"B-spline minimum-curvature raceline optimizer"};
  app.require_subcommand(1);
  Overrides o;
  auto* fit = app.add_subcommand("fit", "fit the centerline spline and report residuals");
  auto* opt = app.add_subcommand("optimize", "optimize the raceline and write a result bundle");
  auto* sim = app.add_subcommand("simulate", "lap-time simulation of a spline or trace");
  add_common(fit, o);
  add_common(opt, o);
  add_common(sim, o);
  opt->add_option("--window", o.window, "free control points, a:b[,c:d] (0-based, inclusive)");
  sim->add_option("--trajectory", o.trajectory, "spline JSON, bundle.json or trace CSV")
      ->required();
  CLI11_PARSE(app, argc, argv);

  try {
    if (fit->parsed()) return cmd_fit(o);
    if (opt->parsed()) return cmd_optimize(o);
    return cmd_simulate(o);
  } catch (const std::exception& e) {
    std::cerr << "error [" << stage << "]: " << e.what() << '\n';
    return 1;
  }
}
