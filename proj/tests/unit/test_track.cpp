#include <string>

#include <fmt/format.h>
#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "raceline/error.hpp"
#include "raceline/track.hpp"

using namespace raceline;

namespace {

std::string expect_validation(const std::string& csv) {
  try {
    parse_track_csv(csv, "t");
  } catch (const ValidationError& e) {
    return e.what();
  }
  ADD_FAILURE() << "no ValidationError";
  return {};
}

CenterlineModel ring_model(double margin = 0.0) {
  CenterlineOptions o;
  o.num_ctrl = 48;
  o.margin = margin;
  return build_centerline(fixtures::ring(), o);
}

}  // namespace

TEST(TrackCsv, RoundTripsFixture) {
  const auto def = fixtures::circle(100.0, 60, 4.0, 5.0);
  const auto back = parse_track_csv(fixtures::to_csv(def), "c");
  ASSERT_EQ(back.waypoints.size(), def.waypoints.size());
  EXPECT_EQ(back.waypoints[7], def.waypoints[7]);
  EXPECT_EQ(back.w_left[3], 4.0);
  EXPECT_EQ(back.w_right[3], 5.0);
}

TEST(TrackCsv, CommentsAndRepeatedFirstRow) {
  const auto def = fixtures::circle(100.0, 30, 4.0, 4.0);
  auto csv = "# surveyed\n" + fixtures::to_csv(def);
  csv += fmt::format("{},{},4,4\n", def.waypoints[0].x(), def.waypoints[0].y());
  EXPECT_EQ(parse_track_csv(csv, "c").waypoints.size(), 30u);
}

TEST(TrackCsv, MissingHeader) {
  EXPECT_NE(expect_validation("1,2,3,4\n").find("header"), std::string::npos);
}

TEST(TrackCsv, BadNumberNamesRow) {
  auto csv = fixtures::to_csv(fixtures::circle(100.0, 30, 4.0, 4.0));
  csv += "abc,1,2,3\n";
  EXPECT_NE(expect_validation(csv).find("row 31"), std::string::npos);
}

TEST(TrackCsv, NonPositiveWidth) {
  auto def = fixtures::circle(100.0, 30, 4.0, 4.0);
  def.w_left[4] = 0.0;
  EXPECT_NE(expect_validation(fixtures::to_csv(def)).find("row 5"), std::string::npos);
}

TEST(TrackCsv, TooFewWaypoints) {
  EXPECT_NE(expect_validation(fixtures::to_csv(fixtures::circle(100.0, 10, 4.0, 4.0))).find("20"),
            std::string::npos);
}

TEST(TrackValidate, SelfIntersection) {
  auto def = fixtures::circle(100.0, 40, 4.0, 4.0);
  std::swap(def.waypoints[5], def.waypoints[25]);
  EXPECT_THROW(validate_track(def), ValidationError);
}

TEST(TrackValidate, OpenLoopGap) {
  auto def = fixtures::straight();
  def.closed = true;
  EXPECT_THROW(validate_track(def), ValidationError);
}

TEST(Centerline, RingWidthsAndFit) {
  const auto cm = ring_model();
  EXPECT_LT(cm.fit.max_deviation, 0.05);
  EXPECT_TRUE(cm.warnings.empty());
  for (std::size_t i = 0; i < cm.disc.size(); ++i) {
    EXPECT_NEAR(cm.left[i], 6.0, 1e-9);
    EXPECT_NEAR(cm.right[i], 6.0, 1e-9);
  }
}

TEST(Centerline, MarginShrinksBothSides) {
  const auto cm = ring_model(1.5);
  EXPECT_NEAR(cm.left[10], 4.5, 1e-9);
  EXPECT_NEAR(cm.right[10], 4.5, 1e-9);
}

TEST(Centerline, MarginEatingWidthIsInfeasible) {
  EXPECT_THROW(ring_model(6.0), InfeasibleError);
}

TEST(Centerline, LooseFitWarns) {
  CenterlineOptions o;
  o.num_ctrl = 8;
  const auto cm = build_centerline(fixtures::chicane(), o);
  ASSERT_FALSE(cm.warnings.empty());
  EXPECT_NE(cm.warnings.front().find("deviates"), std::string::npos);
}

TEST(Centerline, BoundariesSitAtWidths) {
  const auto cm = ring_model();
  const auto b = boundary_polylines(cm);
  ASSERT_EQ(b.left.size(), cm.disc.size());
  EXPECT_NEAR(b.left[0].norm(), 194.0, 0.05);
  EXPECT_NEAR(b.right[0].norm(), 206.0, 0.05);
}

TEST(Centerline, OpenTrack) {
  CenterlineOptions o;
  o.num_ctrl = 12;
  const auto cm = build_centerline(fixtures::straight(), o);
  EXPECT_FALSE(cm.disc.closed);
  EXPECT_NEAR(cm.disc.total_length, 500.0, 1e-6);
}
