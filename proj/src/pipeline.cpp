#include "raceline/pipeline.hpp"

namespace raceline {

SimulationResult simulate_spline(const SplineTrajectory& s, double ds, const TractionEllipse& te) {
  return simulate_discretization(discretize_by_arclength(s, ds), te);
}

SimulationResult simulate_discretization(DiscretizationSet disc, const TractionEllipse& te) {
  SimulationResult r;
  r.profile = qss_profile(disc, te);
  r.metrics = lap_metrics(r.profile, disc);
  r.disc = std::move(disc);
  return r;
}

ResultBundle make_bundle(const RunConfig& cfg, const TrackDefinition& def,
                         const CenterlineModel& cm, const SplineTrajectory& optimized,
                         const OptimizeResult* opt) {
  auto center = simulate_discretization(cm.disc, cfg.vehicle);
  auto best = simulate_spline(optimized, cfg.ds, cfg.vehicle);
  ResultBundle b{def.name,
                 cfg,
                 cm.spline,
                 cm.fit,
                 optimized,
                 std::move(center.disc),
                 std::move(best.disc),
                 std::move(center.profile),
                 std::move(best.profile),
                 center.metrics,
                 best.metrics,
                 {},
                 {},
                 0,
                 0,
                 cm.warnings};
  if (opt != nullptr) {
    b.solution = opt->solution;
    b.log = opt->log;
    b.num_vars = opt->num_vars;
    b.num_rows = opt->num_rows;
  }
  return b;
}

OptimizeRun run_optimize(const RunConfig& cfg, const TrackDefinition& def,
                         const StageHook& on_stage) {
  const auto stage = [&](const char* name) {
    if (on_stage) {
      on_stage(name);
    }
  };
  stage("fit");
  auto cm = build_centerline(def, cfg.centerline_options(def));
  stage("optimize");
  const auto opt = optimize(cm, cfg.optimizer_config(cm.spline.num_ctrl()));
  stage("simulate");
  auto bundle = make_bundle(cfg, def, cm, opt.spline, &opt);
  return {std::move(cm), std::move(bundle)};
}

}  // namespace raceline
