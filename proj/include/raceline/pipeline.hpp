#pragma once

#include <functional>
#include <string>

#include "raceline/io.hpp"

namespace raceline {

struct SimulationResult {
  DiscretizationSet disc;
  VelocityProfile profile;
  LapMetrics metrics;
};

SimulationResult simulate_spline(const SplineTrajectory& s, double ds, const TractionEllipse& te);
SimulationResult simulate_discretization(DiscretizationSet disc, const TractionEllipse& te);

/// Called with the stage name ("fit", "optimize", "simulate") as each starts.
using StageHook = std::function<void(const std::string&)>;

/// build_centerline -> optimize -> QSS on both lines.
struct OptimizeRun {
  CenterlineModel centerline;
  ResultBundle bundle;
};

OptimizeRun run_optimize(const RunConfig& cfg, const TrackDefinition& def,
                         const StageHook& on_stage = {});

/// The bundle for an already optimized spline (service export).
ResultBundle make_bundle(const RunConfig& cfg, const TrackDefinition& def,
                         const CenterlineModel& cm, const SplineTrajectory& optimized,
                         const OptimizeResult* opt);

}  // namespace raceline
