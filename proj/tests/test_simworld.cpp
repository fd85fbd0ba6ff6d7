#include "pathspace/error.hpp"
#include "pathspace/simworld.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace pathspace;
using namespace pathspace::sim;

namespace {

TrackGroundTruth single_cone(const Vec2& at) {
  TrackGroundTruth t;
  t.cones[kLeftLabel] = {at};
  return t;
}

SensorModel exact_sensor() {
  SensorModel m;
  m.position_noise_std = 0.0;
  m.detection_probability = 1.0;
  return m;
}

}  // namespace

TEST_CASE("circle track puts left cones inside a left turn") {
  TrackSpec spec = TrackSpec::circle(20.0);
  const TrackGroundTruth t = generate_track(spec);
  const Vec2 center(0, 20);
  CHECK(t.lap_length == doctest::Approx(2 * std::numbers::pi * 20));
  for (const Vec2& c : t.cones.at(kLeftLabel)) CHECK((c - center).norm() == doctest::Approx(18.0));
  for (const Vec2& c : t.cones.at(kRightLabel)) CHECK((c - center).norm() == doctest::Approx(22.0));
  for (const Vec2& c : t.centerline) CHECK((c - center).norm() == doctest::Approx(20.0));
}

TEST_CASE("default track") {
  const TrackSpec spec = TrackSpec::default_spec();
  const TrackGroundTruth t = generate_track(spec);
  const double expected = t.lap_length / spec.cone_spacing;
  for (const auto& [label, cones] : t.cones) {
    CHECK(std::abs(static_cast<double>(cones.size()) - expected) <= 0.05 * expected);
  }
  CHECK(t.lap_length > 400.0);
  CHECK(t.lap_length < 600.0);

  const TrackGroundTruth again = generate_track(spec);
  CHECK(again.cones == t.cones);
  CHECK(again.centerline == t.centerline);

  TrackSpec jittered = spec;
  jittered.cone_jitter = 0.2;
  const TrackGroundTruth a = generate_track(jittered);
  CHECK(generate_track(jittered).cones == a.cones);
  CHECK(a.cones != t.cones);
}

TEST_CASE("track validation") {
  TrackSpec open;
  open.elements = {TrackElement::straight(10.0), TrackElement::arc(5.0, std::numbers::pi / 2)};
  try {
    generate_track(open);
    FAIL("open track accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kGeneration);
  }

  TrackSpec tight = TrackSpec::circle(1.0);
  CHECK_THROWS_AS(generate_track(tight), Error);
  TrackSpec empty;
  CHECK_THROWS_AS(generate_track(empty), Error);
}

TEST_CASE("stations") {
  const TrackGroundTruth t = generate_track(TrackSpec::circle(10.0));
  CHECK((t.at_station(0.0) - t.centerline.front()).norm() < 1e-12);
  CHECK((t.at_station(t.lap_length) - t.centerline.front()).norm() < 1e-9);
  const double quarter = t.lap_length / 4;
  CHECK(t.station_of(t.at_station(quarter)) == doctest::Approx(quarter).epsilon(0.01));
}

TEST_CASE("sensing") {
  Rng rng(1);
  const SensorModel exact = exact_sensor();
  const std::vector<Detection> d = sense({0, 0, 0}, single_cone({5, 0}), exact, rng);
  REQUIRE(d.size() == 1);
  CHECK((d[0].position - Vec2(5, 0)).norm() < 1e-12);
  CHECK(d[0].label == kLeftLabel);

  // Agent frame: a cone straight ahead of an agent facing +y.
  const std::vector<Detection> turned = sense({1, 1, std::numbers::pi / 2}, single_cone({1, 4}), exact, rng);
  REQUIRE(turned.size() == 1);
  CHECK((turned[0].position - Vec2(3, 0)).norm() < 1e-12);

  SensorModel blind = exact;
  blind.detection_probability = 0.0;
  CHECK(sense({0, 0, 0}, single_cone({5, 0}), blind, rng).empty());

  CHECK(sense({0, 0, 0}, single_cone({exact.max_range + 0.01, 0}), exact, rng).empty());
  CHECK(sense({0, 0, 0}, single_cone({exact.max_range - 0.01, 0}), exact, rng).size() == 1);
  const double half = exact.field_of_view / 2;
  CHECK(sense({0, 0, 0}, single_cone(5 * Vec2(std::cos(half + 0.01), std::sin(half + 0.01))), exact, rng).empty());
  CHECK(sense({0, 0, 0}, single_cone(5 * Vec2(std::cos(half - 0.01), std::sin(half - 0.01))), exact, rng).size() == 1);
  CHECK(sense({0, 0, 0}, single_cone({-5, 0}), exact, rng).empty());

  SensorModel noisy = exact;
  noisy.position_noise_std = 0.1;
  const std::vector<Detection> n = sense({0, 0, 0}, single_cone({5, 0}), noisy, rng);
  REQUIRE(n.size() == 1);
  CHECK(n[0].covariance.isApprox(0.01 * Eigen::Matrix2d::Identity()));

  SensorModel bad = exact;
  bad.detection_probability = 1.5;
  CHECK_THROWS_AS(sense({0, 0, 0}, single_cone({5, 0}), bad, rng), Error);
}

TEST_CASE("detection probability is honoured on average") {
  Rng rng(2);
  SensorModel m = exact_sensor();
  m.detection_probability = 0.7;
  int seen = 0;
  const int trials = 4000;
  for (int i = 0; i < trials; ++i) seen += static_cast<int>(sense({0, 0, 0}, single_cone({5, 0}), m, rng).size());
  CHECK(seen / static_cast<double>(trials) == doctest::Approx(0.7).epsilon(0.05));
}

TEST_CASE("driving") {
  const TrackGroundTruth t = generate_track(TrackSpec::default_spec());
  Rng rng(3);
  const AgentPose start = start_pose(t);

  Driver still;
  const DriveStep parked = drive_step(start, t, still, 0.0, 0.1, Eigen::Matrix3d::Zero(), rng);
  CHECK(parked.pose.position() == start.position());
  CHECK(parked.true_motion.forward == 0.0);

  CHECK_THROWS_AS(drive_step(start, t, still, 1.0, 0.0, Eigen::Matrix3d::Zero(), rng), Error);

  // One lap at zero noise: odometry equals the true motion, the agent stays
  // on the road and the odometer ends near the lap length.
  Driver driver;
  AgentPose pose = start;
  double travelled = 0.0;
  const double speed = 8.0, dt = 0.1;
  while (driver.progress() < t.lap_length) {
    const DriveStep step = drive_step(pose, t, driver, speed, dt, Eigen::Matrix3d::Zero(), rng);
    CHECK(step.odometry.forward == step.true_motion.forward);
    CHECK(step.odometry.heading == step.true_motion.heading);
    const AgentPose replay = compose(pose, step.odometry);
    CHECK((replay.position() - step.pose.position()).norm() < 1e-12);
    double off = std::numeric_limits<double>::infinity();
    for (const Vec2& c : t.centerline) off = std::min(off, (c - step.pose.position()).norm());
    CHECK(off < t.track_width / 2);
    pose = step.pose;
    travelled += speed * dt;
  }
  CHECK(std::abs(travelled - t.lap_length) <= 0.03 * t.lap_length);
}
