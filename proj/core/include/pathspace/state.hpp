#pragma once

// Types and helpers shared by both SLAM backends: planar pose, odometry,
// labelled detections, the motion model, and covariance surgery for growing
// or rewriting parts of a joint state.

#include <Eigen/Core>

#include <string>

namespace pathspace {

using Vec2 = Eigen::Vector2d;
using Label = std::string;

inline constexpr int kPoseDim = 3;

double normalize_angle(double angle);  // into (-pi, pi]

struct AgentPose {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;  // rad, (-pi, pi]

  Vec2 position() const { return {x, y}; }
  Eigen::Vector3d vector() const { return {x, y, heading}; }
  static AgentPose from_vector(const Eigen::Vector3d& v) { return {v(0), v(1), normalize_angle(v(2))}; }
};

// Displacement expressed in the frame of the pose it starts from.
struct Odometry {
  double forward = 0.0;  // m
  double lateral = 0.0;  // m, positive to the left
  double heading = 0.0;  // rad
};

struct Detection {
  Vec2 position = Vec2::Zero();  // agent frame, m
  Label label;
  Eigen::Matrix2d covariance = Eigen::Matrix2d::Zero();  // agent frame, m^2
};

Eigen::Matrix2d rotation(double heading);

AgentPose compose(const AgentPose& pose, const Odometry& odometry);
// d compose / d pose and d compose / d odometry.
Eigen::Matrix3d motion_jacobian(const AgentPose& pose, const Odometry& odometry);
Eigen::Matrix3d odometry_jacobian(const AgentPose& pose, const Odometry& odometry);

Vec2 to_world(const AgentPose& pose, const Vec2& agent_point);
Vec2 to_agent(const AgentPose& pose, const Vec2& world_point);
// d to_world / d pose, evaluated for the world point the reading maps to.
Eigen::Matrix<double, 2, 3> world_point_pose_jacobian(const AgentPose& pose, const Vec2& world_point);

// Joint covariance with the pose in rows/cols 0..2: propagates the pose block
// through the motion Jacobian, adds mapped odometry noise, and rotates the
// pose-map cross terms. Map-map blocks are untouched.
void predict_covariance(Eigen::MatrixXd& covariance, const AgentPose& pose, const Odometry& odometry,
                        const Eigen::Matrix3d& odometry_noise);

// Replaces rows/cols [offset, offset + old_size) of a joint covariance by a
// block of new variables defined as `rows * x_old + noise`, where `rows` has
// one row per new variable and one column per old state entry. Everything
// else keeps its place; the new block lands at `offset`.
Eigen::MatrixXd replace_block(const Eigen::MatrixXd& covariance, Eigen::Index offset, Eigen::Index old_size,
                              const Eigen::MatrixXd& rows, const Eigen::MatrixXd& noise);

}  // namespace pathspace
