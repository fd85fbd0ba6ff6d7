#include "pathspace/state.hpp"

#include "pathspace/error.hpp"
#include "pathspace/uncertainty.hpp"

#include <cmath>
#include <numbers>

namespace pathspace {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidConfiguration: return "invalid configuration";
    case ErrorKind::kInvalidArgument: return "invalid argument";
    case ErrorKind::kInvalidState: return "invalid state";
    case ErrorKind::kDomain: return "domain error";
    case ErrorKind::kNumeric: return "numeric error";
    case ErrorKind::kClosureRejected: return "closure rejected";
    case ErrorKind::kPropagation: return "propagation error";
    case ErrorKind::kGeneration: return "generation error";
    case ErrorKind::kIo: return "I/O error";
  }
  return "error";
}

double normalize_angle(double angle) {
  constexpr double pi = std::numbers::pi;
  double a = std::fmod(angle, 2.0 * pi);
  if (a <= -pi) a += 2.0 * pi;
  if (a > pi) a -= 2.0 * pi;
  return a;
}

Eigen::Matrix2d rotation(double heading) {
  const double c = std::cos(heading), s = std::sin(heading);
  Eigen::Matrix2d r;
  r << c, -s, s, c;
  return r;
}

AgentPose compose(const AgentPose& pose, const Odometry& odometry) {
  const Vec2 step = rotation(pose.heading) * Vec2(odometry.forward, odometry.lateral);
  return {pose.x + step.x(), pose.y + step.y(), normalize_angle(pose.heading + odometry.heading)};
}

Eigen::Matrix3d motion_jacobian(const AgentPose& pose, const Odometry& odometry) {
  const double c = std::cos(pose.heading), s = std::sin(pose.heading);
  Eigen::Matrix3d f = Eigen::Matrix3d::Identity();
  f(0, 2) = -s * odometry.forward - c * odometry.lateral;
  f(1, 2) = c * odometry.forward - s * odometry.lateral;
  return f;
}

Eigen::Matrix3d odometry_jacobian(const AgentPose& pose, const Odometry&) {
  Eigen::Matrix3d g = Eigen::Matrix3d::Identity();
  g.topLeftCorner<2, 2>() = rotation(pose.heading);
  return g;
}

Vec2 to_world(const AgentPose& pose, const Vec2& agent_point) {
  return pose.position() + rotation(pose.heading) * agent_point;
}

Vec2 to_agent(const AgentPose& pose, const Vec2& world_point) {
  return rotation(pose.heading).transpose() * (world_point - pose.position());
}

Eigen::Matrix<double, 2, 3> world_point_pose_jacobian(const AgentPose& pose, const Vec2& world_point) {
  const Vec2 r = world_point - pose.position();
  Eigen::Matrix<double, 2, 3> j;
  j << 1.0, 0.0, -r.y(), 0.0, 1.0, r.x();
  return j;
}

void predict_covariance(Eigen::MatrixXd& covariance, const AgentPose& pose, const Odometry& odometry,
                        const Eigen::Matrix3d& odometry_noise) {
  const Eigen::Matrix3d f = motion_jacobian(pose, odometry);
  const Eigen::Matrix3d g = odometry_jacobian(pose, odometry);
  const Eigen::Index rest = covariance.cols() - kPoseDim;

  const Eigen::Matrix3d pp = covariance.topLeftCorner<3, 3>();
  covariance.topLeftCorner<3, 3>() = f * pp * f.transpose() + g * odometry_noise * g.transpose();
  if (rest > 0) {
    const Eigen::MatrixXd pm = f * covariance.topRightCorner(3, rest);
    covariance.topRightCorner(3, rest) = pm;
    covariance.bottomLeftCorner(rest, 3) = pm.transpose();
  }
  const Eigen::Matrix3d top = covariance.topLeftCorner<3, 3>();
  covariance.topLeftCorner<3, 3>() = 0.5 * (top + top.transpose());
}

Eigen::MatrixXd replace_block(const Eigen::MatrixXd& covariance, Eigen::Index offset, Eigen::Index old_size,
                              const Eigen::MatrixXd& rows, const Eigen::MatrixXd& noise) {
  const Eigen::Index n_old = covariance.rows();
  const Eigen::Index n_new_block = rows.rows();
  if (offset < 0 || old_size < 0 || offset + old_size > n_old || rows.cols() != n_old ||
      noise.rows() != n_new_block || noise.cols() != n_new_block) {
    throw Error(ErrorKind::kInvalidArgument, "replace_block: inconsistent dimensions");
  }
  const Eigen::MatrixXd projected = rows * covariance;  // new x old
  Eigen::MatrixXd block = projected * rows.transpose() + noise;
  uncertainty::symmetrize(block);

  const Eigen::Index head = offset;
  const Eigen::Index tail = n_old - offset - old_size;
  const Eigen::Index n = head + n_new_block + tail;
  Eigen::MatrixXd out(n, n);

  out.topLeftCorner(head, head) = covariance.topLeftCorner(head, head);
  out.block(0, head + n_new_block, head, tail) = covariance.block(0, offset + old_size, head, tail);
  out.block(head + n_new_block, 0, tail, head) = covariance.block(offset + old_size, 0, tail, head);
  out.bottomRightCorner(tail, tail) = covariance.bottomRightCorner(tail, tail);

  out.block(head, head, n_new_block, n_new_block) = block;
  out.block(head, 0, n_new_block, head) = projected.leftCols(head);
  out.block(head, head + n_new_block, n_new_block, tail) = projected.rightCols(tail);
  out.block(0, head, head, n_new_block) = projected.leftCols(head).transpose();
  out.block(head + n_new_block, head, tail, n_new_block) = projected.rightCols(tail).transpose();
  return out;
}

}  // namespace pathspace
