#pragma once

// Landmark-based baseline: a cubature Kalman filter over the pose and every
// mapped cone, with Hungarian association under a Mahalanobis cost. The map
// only ever grows.

#include "pathspace/state.hpp"

#include <Eigen/Core>

#include <limits>
#include <span>
#include <utility>
#include <vector>

namespace pathspace::ckf {

struct Landmark {
  Vec2 position = Vec2::Zero();
  Label label;
};

class LandmarkMap {
 public:
  static LandmarkMap initial(const AgentPose& pose, const Eigen::Matrix3d& pose_covariance);

  AgentPose pose;
  std::vector<Landmark> landmarks;
  // [pose(3) | x0 y0 x1 y1 ...]
  Eigen::MatrixXd covariance;

  Eigen::Index dimension() const { return kPoseDim + 2 * static_cast<Eigen::Index>(landmarks.size()); }
  std::size_t size() const { return landmarks.size(); }
  Eigen::VectorXd mean() const;
  void set_mean(const Eigen::VectorXd& mean);
  Eigen::Matrix2d landmark_covariance(std::size_t index) const;
};

// A detection carried into the world frame with the current pose mean.
struct WorldDetection {
  std::size_t detection_index = 0;
  Label label;
  Vec2 world = Vec2::Zero();
  Eigen::Matrix2d covariance = Eigen::Matrix2d::Zero();  // world frame
};

std::vector<WorldDetection> to_world(const AgentPose& pose, std::span<const Detection> detections);

// Cost of pairing landmarks of different labels.
inline constexpr double kForbidden = std::numeric_limits<double>::infinity();

// rows = landmarks, cols = detections.
Eigen::MatrixXd mahalanobis_cost(const LandmarkMap& map, std::span<const WorldDetection> detections);

// Minimum-cost matching of a rectangular matrix; result[r] is the column of
// row r, or -1 when r is left out (only possible when rows > cols).
// Non-finite entries are treated as prohibitively expensive.
std::vector<int> hungarian(const Eigen::MatrixXd& costs);

struct Assignment {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (landmark, detection)
  std::vector<std::size_t> unmatched_detections;
};

Assignment associate(const Eigen::MatrixXd& costs, double gate);

LandmarkMap predict(const LandmarkMap& map, const Odometry& odometry, const Eigen::Matrix3d& odometry_noise);

// Cubature update with the matched pairs, then one new landmark per
// unmatched detection. `detections` are in the agent frame.
LandmarkMap ckf_update(const LandmarkMap& map, const Assignment& assignment, std::span<const Detection> detections);

struct CkfConfig {
  std::vector<Label> labels{"blue", "yellow"};
  double gate = 3.0;
  Eigen::Matrix3d odometry_noise = Eigen::Matrix3d::Zero();

  void validate() const;
};

struct CkfFrameReport {
  std::size_t matched = 0;
  std::size_t added = 0;
  std::size_t rejected = 0;
};

LandmarkMap process_frame(const LandmarkMap& map, std::span<const Detection> detections, const Odometry& odometry,
                          const CkfConfig& config, CkfFrameReport* report = nullptr);

}  // namespace pathspace::ckf
