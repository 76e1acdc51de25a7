#include "raceline/service.hpp"

#include <chrono>
#include <thread>

#include <gtest/gtest.h>
#include <httplib.h>

#include "fixtures.hpp"

using namespace raceline;

namespace {

std::string ring_body() {
  return Json{{"track_csv", fixtures::to_csv(fixtures::ring())},
              {"name", "ring"},
              {"config", {{"ctrl_points", 48}, {"ds", 4}}}}
      .dump();
}

class ServiceTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto r = service_.handle("POST", "/api/v1/sessions", ring_body());
    ASSERT_EQ(r.status, 201) << r.body.dump();
    id_ = r.body.at("id").get<std::string>();
  }

  Response call(std::string_view method, const std::string& tail, const Json& body = {}) {
    return service_.handle(method, "/api/v1/sessions/" + id_ + tail,
                           body.is_null() ? "" : body.dump());
  }

  Service service_{42};
  std::string id_;
};

}  // namespace

TEST_F(ServiceTest, StateDescribesSession) {
  const auto r = call("GET", "");
  ASSERT_EQ(r.status, 200);
  EXPECT_EQ(r.body.at("revision"), 1);
  EXPECT_EQ(r.body.at("ctrl_points"), 48);
  EXPECT_EQ(r.body.at("track"), "ring");
  EXPECT_TRUE(r.body.at("violations").empty());
  EXPECT_TRUE(r.body.at("metrics_stale").get<bool>());
  EXPECT_EQ(r.body.at("working").at("positions").size(), r.body.at("samples").get<std::size_t>());
}

TEST_F(ServiceTest, MovingControlPointReportsLocalDelta) {
  const auto state = call("GET", "").body;
  const auto cp = state.at("working").at("control_points").at(5);
  const auto r = call("PATCH", "/control-points/5",
                      {{"x", cp.at(0).get<double>() * 1.2}, {"y", cp.at(1).get<double>() * 1.2},
                       {"revision", 1}});
  ASSERT_EQ(r.status, 200) << r.body.dump();
  EXPECT_EQ(r.body.at("revision"), 2);
  const auto n = r.body.at("changed").size();
  EXPECT_GT(n, 0u);
  EXPECT_LT(n, state.at("samples").get<std::size_t>() / 4);
  EXPECT_FALSE(r.body.at("violations").empty());
}

TEST_F(ServiceTest, StaleRevisionConflicts) {
  const auto r = call("PATCH", "/control-points/0", {{"x", 0.0}, {"y", 0.0}, {"revision", 7}});
  EXPECT_EQ(r.status, 409);
  EXPECT_EQ(r.body.at("stage"), "revision");
}

TEST_F(ServiceTest, BadIndexAndBody) {
  EXPECT_EQ(call("PATCH", "/control-points/48", {{"x", 0.0}, {"y", 0.0}}).status, 400);
  EXPECT_EQ(call("PATCH", "/control-points/abc", {{"x", 0.0}, {"y", 0.0}}).status, 400);
  EXPECT_EQ(call("PATCH", "/control-points/1", {{"x", 0.0}}).status, 400);
  EXPECT_EQ(service_.handle("POST", "/api/v1/sessions/" + id_ + "/optimize", "{oops").status,
            400);
}

TEST_F(ServiceTest, SimulateRefusesViolationsUnlessForced) {
  call("PATCH", "/control-points/3", {{"x", 0.0}, {"y", 0.0}});
  EXPECT_EQ(call("POST", "/simulate").status, 409);
  const auto r = call("POST", "/simulate", {{"force", true}});
  ASSERT_EQ(r.status, 200);
  EXPECT_TRUE(r.body.contains("warning"));
}

TEST_F(ServiceTest, OptimizeSimulateMetricsExport) {
  const auto opt = call("POST", "/optimize", {{"revision", 1}});
  ASSERT_EQ(opt.status, 200) << opt.body.dump();
  EXPECT_EQ(opt.body.at("status"), "solved");
  EXPECT_EQ(opt.body.at("num_vars"), 96);
  EXPECT_TRUE(opt.body.at("violations").empty());

  EXPECT_TRUE(call("GET", "/metrics").body.at("stale").get<bool>());
  const auto sim = call("POST", "/simulate");
  ASSERT_EQ(sim.status, 200);
  const auto metrics = call("GET", "/metrics").body;
  EXPECT_FALSE(metrics.at("stale").get<bool>());
  EXPECT_LT(metrics.at("working").at("lap_time_s").get<double>(),
            metrics.at("baseline").at("lap_time_s").get<double>());
  EXPECT_FALSE(metrics.at("comparison").get<std::string>().empty());

  const auto ex = call("GET", "/export");
  ASSERT_EQ(ex.status, 200);
  EXPECT_TRUE(ex.body.contains("optimized"));
  EXPECT_EQ(ex.body.at("revision"), 2);
}

TEST_F(ServiceTest, WindowedOptimize) {
  const auto r = call("POST", "/optimize", {{"window", "10:12"}});
  ASSERT_EQ(r.status, 200) << r.body.dump();
  EXPECT_EQ(r.body.at("num_vars"), 6);
  EXPECT_EQ(r.body.at("free_indices"), Json::array({10, 11, 12}));
  EXPECT_EQ(call("POST", "/optimize", {{"window", "10:60"}}).status, 400);
}

TEST(Service, CreateErrors) {
  Service svc(1);
  EXPECT_EQ(svc.handle("POST", "/api/v1/sessions", "{}").status, 400);
  EXPECT_EQ(svc.handle("POST", "/api/v1/sessions", "x_m,y_m\n1,2\n").status, 422);
  EXPECT_EQ(svc.handle("GET", "/api/v1/sessions", "").status, 405);
  EXPECT_EQ(svc.handle("GET", "/api/v1/sessions/deadbeef", "").status, 404);
  EXPECT_EQ(svc.handle("GET", "/nothing", "").status, 404);
  const auto margin = Json{{"track_csv", fixtures::to_csv(fixtures::ring())},
                           {"config", {{"margin_m", 6.5}}}};
  const auto r = svc.handle("POST", "/api/v1/sessions", margin.dump());
  EXPECT_EQ(r.status, 422);
  EXPECT_EQ(r.body.at("stage"), "fit");
  EXPECT_EQ(svc.session_count(), 0u);
}

TEST(Service, RawCsvBodyCreatesSession) {
  Service svc(2);
  const auto r = svc.handle("POST", "/api/v1/sessions", fixtures::to_csv(fixtures::ring()));
  EXPECT_EQ(r.status, 201);
  EXPECT_EQ(svc.session_count(), 1u);
}

TEST(Service, OverHttp) {
  Service svc(3);
  httplib::Server server;
  bind_http(server, svc);
  const int port = server.bind_to_any_port("127.0.0.1");
  ASSERT_GT(port, 0);
  std::thread worker([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  httplib::Client client("127.0.0.1", port);
  const auto created = client.Post("/api/v1/sessions", ring_body(), "application/json");
  ASSERT_TRUE(created);
  EXPECT_EQ(created->status, 201);
  EXPECT_EQ(created->get_header_value("Access-Control-Allow-Origin"), "*");
  const auto id = Json::parse(created->body).at("id").get<std::string>();
  const auto state = client.Get("/api/v1/sessions/" + id);
  ASSERT_TRUE(state);
  EXPECT_EQ(state->status, 200);
  const auto opt = client.Post("/api/v1/sessions/" + id + "/optimize", "{}", "application/json");
  ASSERT_TRUE(opt);
  EXPECT_EQ(opt->status, 200);
  const auto missing = client.Get("/api/v1/sessions/zzz");
  ASSERT_TRUE(missing);
  EXPECT_EQ(missing->status, 404);

  server.stop();
  worker.join();
}
