#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <string_view>

#include "raceline/io.hpp"
#include "raceline/pipeline.hpp"

namespace httplib {
class Server;
}

namespace raceline {

struct Response {
  int status = 200;
  Json body;
};

/// One editable raceline over a fixed centerline.
struct Session {
  Session(std::string id, RunConfig cfg, TrackDefinition def, CenterlineModel cm);

  std::mutex mutex;
  std::string id;
  RunConfig config;
  TrackDefinition track;
  CenterlineModel centerline;
  SplineTrajectory working;
  std::uint64_t revision = 1;
  // Working spline at the centerline sample parameters.
  std::vector<Point2> positions;
  std::vector<double> curvatures;
  std::vector<double> offsets;
  std::vector<std::size_t> violations;
  LapMetrics baseline;
  std::optional<LapMetrics> metrics;
  std::uint64_t metrics_revision = 0;
  std::optional<OptimizeResult> last_optimize;
};

/// In-memory sessions behind the /api/v1 routes. Requests on one session are
/// serialised; different sessions proceed independently.
class Service {
 public:
  explicit Service(std::uint64_t seed = std::random_device{}());

  Response handle(std::string_view method, std::string_view path, std::string_view body);

  std::size_t session_count() const;

 private:
  Response create_session(std::string_view body);
  Response get_state(Session& s) const;
  Response move_control_point(Session& s, std::string_view index, const Json& body);
  Response run_optimize(Session& s, const Json& body);
  Response run_simulate(Session& s, const Json& body);
  Response get_metrics(const Session& s) const;
  Response export_bundle(const Session& s) const;

  std::shared_ptr<Session> find(const std::string& id) const;

  mutable std::mutex registry_mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::mt19937_64 rng_;
};

/// Registers every route on an httplib server.
void bind_http(httplib::Server& server, Service& service);

}  // namespace raceline
