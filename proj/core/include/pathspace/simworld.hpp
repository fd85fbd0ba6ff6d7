#pragma once

// Synthetic cone track, kinematic pure-pursuit driver and noisy sensing.
// All randomness comes from one seeded engine owned by the caller.

#include "pathspace/state.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <map>
#include <random>
#include <span>
#include <vector>

namespace pathspace::sim {

using Rng = std::mt19937_64;

inline const Label kLeftLabel = "blue";
inline const Label kRightLabel = "yellow";

struct TrackElement {
  enum class Kind { kStraight, kArc };
  Kind kind = Kind::kStraight;
  double length = 0.0;  // straights, m
  double radius = 0.0;  // arcs, m
  double angle = 0.0;   // arcs, rad; positive turns left

  static TrackElement straight(double length) { return {Kind::kStraight, length, 0.0, 0.0}; }
  static TrackElement arc(double radius, double angle) { return {Kind::kArc, 0.0, radius, angle}; }
  double arc_length() const;
};

struct TrackSpec {
  double track_width = 4.0;
  double cone_spacing = 5.0;
  double cone_jitter = 0.0;  // m, std of a seeded lateral offset per cone
  double resolution = 0.25;  // m between centerline samples
  std::uint64_t seed = 1;
  std::vector<TrackElement> elements;

  // Roughly 500 m with straights, a chicane and two hairpins; about 100 cones per side.
  static TrackSpec default_spec();
  static TrackSpec circle(double radius);
  void validate() const;
};

struct TrackGroundTruth {
  std::vector<Vec2> centerline;  // closed polyline, last sample not repeated
  std::vector<double> stations;  // arc length of each centerline sample
  std::map<Label, std::vector<Vec2>> cones;
  double lap_length = 0.0;
  double track_width = 0.0;

  std::size_t cone_count() const;
  // Arc-length station of the closest centerline sample.
  double station_of(const Vec2& point) const;
  Vec2 at_station(double s) const;
};

TrackGroundTruth generate_track(const TrackSpec& spec);

struct SensorModel {
  double max_range = 12.0;
  double field_of_view = 110.0 * 3.14159265358979323846 / 180.0;  // total, rad
  double position_noise_std = 0.1;
  double detection_probability = 0.9;

  void validate() const;
};

// Cones in range and field of view (checked on true positions) are reported
// with probability detection_probability, in the agent frame, with
// isotropic Gaussian noise.
std::vector<Detection> sense(const AgentPose& pose, const TrackGroundTruth& truth, const SensorModel& model,
                             Rng& rng);

// Pure-pursuit follower on the centerline; tracks unwrapped arc-length progress.
class Driver {
 public:
  explicit Driver(double lookahead = 6.0) : lookahead_(lookahead) {}

  // Moves the progress odometer to the station closest to `pose`.
  void observe(const AgentPose& pose, const TrackGroundTruth& truth);
  // Steering curvature (1/m) toward the lookahead point.
  double steer(const AgentPose& pose, const TrackGroundTruth& truth) const;
  double progress() const { return progress_; }

 private:
  double lookahead_;
  double progress_ = 0.0;
  double station_ = 0.0;
  bool started_ = false;
};

struct DriveStep {
  AgentPose pose;          // true pose after the step
  Odometry true_motion;
  Odometry odometry;       // true motion + noise
};

// Kinematic arc of length speed * dt with pure-pursuit curvature.
DriveStep drive_step(const AgentPose& pose, const TrackGroundTruth& truth, Driver& driver, double speed, double dt,
                     const Eigen::Matrix3d& odometry_noise, Rng& rng);

AgentPose start_pose(const TrackGroundTruth& truth);

}  // namespace pathspace::sim
