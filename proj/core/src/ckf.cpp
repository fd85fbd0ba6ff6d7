#include "pathspace/ckf.hpp"

#include "pathspace/error.hpp"
#include "pathspace/uncertainty.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

namespace pathspace::ckf {

LandmarkMap LandmarkMap::initial(const AgentPose& pose, const Eigen::Matrix3d& pose_covariance) {
  LandmarkMap m;
  m.pose = pose;
  m.pose.heading = normalize_angle(pose.heading);
  m.covariance = pose_covariance;
  return m;
}

Eigen::VectorXd LandmarkMap::mean() const {
  Eigen::VectorXd out(dimension());
  out.head<3>() = pose.vector();
  for (std::size_t i = 0; i < landmarks.size(); ++i) out.segment<2>(kPoseDim + 2 * i) = landmarks[i].position;
  return out;
}

void LandmarkMap::set_mean(const Eigen::VectorXd& mean) {
  if (mean.size() != dimension()) throw Error(ErrorKind::kInvalidArgument, "mean dimension mismatch");
  pose = AgentPose::from_vector(mean.head<3>());
  for (std::size_t i = 0; i < landmarks.size(); ++i) landmarks[i].position = mean.segment<2>(kPoseDim + 2 * i);
}

Eigen::Matrix2d LandmarkMap::landmark_covariance(std::size_t index) const {
  const Eigen::Index off = kPoseDim + 2 * static_cast<Eigen::Index>(index);
  return covariance.block<2, 2>(off, off);
}

std::vector<WorldDetection> to_world(const AgentPose& pose, std::span<const Detection> detections) {
  const Eigen::Matrix2d r = rotation(pose.heading);
  std::vector<WorldDetection> out;
  out.reserve(detections.size());
  for (std::size_t j = 0; j < detections.size(); ++j) {
    out.push_back({j, detections[j].label, pathspace::to_world(pose, detections[j].position),
                   r * detections[j].covariance * r.transpose()});
  }
  return out;
}

Eigen::MatrixXd mahalanobis_cost(const LandmarkMap& map, std::span<const WorldDetection> detections) {
  const auto rows = static_cast<Eigen::Index>(map.size());
  const auto cols = static_cast<Eigen::Index>(detections.size());
  Eigen::MatrixXd cost = Eigen::MatrixXd::Constant(rows, cols, kForbidden);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const Landmark& lm = map.landmarks[i];
    const Eigen::Matrix2d p = map.landmark_covariance(i);
    for (Eigen::Index j = 0; j < cols; ++j) {
      const WorldDetection& d = detections[j];
      if (d.label != lm.label) continue;
      const Eigen::Matrix2d s = p + d.covariance;
      Eigen::LLT<Eigen::Matrix2d> llt(s);
      if (llt.info() != Eigen::Success) throw Error(ErrorKind::kNumeric, "singular association covariance");
      const Vec2 diff = lm.position - d.world;
      cost(i, j) = std::sqrt(diff.dot(llt.solve(diff)));
    }
  }
  return cost;
}

std::vector<int> hungarian(const Eigen::MatrixXd& costs) {
  const int rows = static_cast<int>(costs.rows());
  const int cols = static_cast<int>(costs.cols());
  if (rows == 0 || cols == 0) return std::vector<int>(rows, -1);
  if (rows > cols) {
    const std::vector<int> by_col = hungarian(costs.transpose());
    std::vector<int> out(rows, -1);
    for (int c = 0; c < cols; ++c)
      if (by_col[c] >= 0) out[by_col[c]] = c;
    return out;
  }

  // Forbidden entries get a cost above any all-finite matching.
  double finite_max = 0.0;
  for (Eigen::Index i = 0; i < costs.size(); ++i)
    if (std::isfinite(costs.data()[i])) finite_max = std::max(finite_max, std::abs(costs.data()[i]));
  const double big = (finite_max + 1.0) * (rows + 1) * 4.0;
  auto at = [&](int r, int c) {
    const double v = costs(r, c);
    return std::isfinite(v) ? v : big;
  };

  // Shortest augmenting path with potentials, rows <= cols, 1-based.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(rows + 1, 0.0), v(cols + 1, 0.0);
  std::vector<int> match(cols + 1, 0), way(cols + 1, 0);
  for (int i = 1; i <= rows; ++i) {
    match[0] = i;
    int j0 = 0;
    std::vector<double> minv(cols + 1, inf);
    std::vector<bool> used(cols + 1, false);
    do {
      used[j0] = true;
      const int i0 = match[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= cols; ++j) {
        if (used[j]) continue;
        const double cur = at(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= cols; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const int j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<int> out(rows, -1);
  for (int j = 1; j <= cols; ++j)
    if (match[j] > 0) out[match[j] - 1] = j - 1;
  return out;
}

Assignment associate(const Eigen::MatrixXd& costs, double gate) {
  Assignment out;
  // Pairs outside the gate are as unacceptable as cross-label pairs, so an
  // unseen cone cannot displace a gated match.
  const Eigen::MatrixXd gated = (costs.array() <= gate).select(costs, kForbidden);
  const std::vector<int> rows = hungarian(gated);
  std::vector<bool> matched(static_cast<std::size_t>(costs.cols()), false);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const int c = rows[r];
    if (c < 0) continue;
    const double cost = costs(static_cast<Eigen::Index>(r), c);
    if (!std::isfinite(cost) || cost > gate) continue;
    out.pairs.emplace_back(r, static_cast<std::size_t>(c));
    matched[c] = true;
  }
  std::sort(out.pairs.begin(), out.pairs.end());
  for (std::size_t c = 0; c < matched.size(); ++c)
    if (!matched[c]) out.unmatched_detections.push_back(c);
  return out;
}

LandmarkMap predict(const LandmarkMap& map, const Odometry& odometry, const Eigen::Matrix3d& odometry_noise) {
  LandmarkMap out = map;
  predict_covariance(out.covariance, map.pose, odometry, odometry_noise);
  out.pose = compose(map.pose, odometry);
  return out;
}

LandmarkMap ckf_update(const LandmarkMap& map, const Assignment& assignment, std::span<const Detection> detections) {
  for (const auto& [l, d] : assignment.pairs) {
    if (l >= map.size() || d >= detections.size()) throw Error(ErrorKind::kInvalidArgument, "assignment out of range");
  }
  LandmarkMap out = map;

  if (!assignment.pairs.empty()) {
    const Eigen::Index m = static_cast<Eigen::Index>(assignment.pairs.size());
    Eigen::VectorXd z(2 * m);
    Eigen::MatrixXd noise = Eigen::MatrixXd::Zero(2 * m, 2 * m);
    for (Eigen::Index k = 0; k < m; ++k) {
      const Detection& d = detections[assignment.pairs[k].second];
      z.segment<2>(2 * k) = d.position;
      noise.block<2, 2>(2 * k, 2 * k) = d.covariance;
    }
    // Agent-frame position of each matched landmark.
    auto measure = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
      const Vec2 p = x.head<2>();
      const Eigen::Matrix2d rt = rotation(x(2)).transpose();
      Eigen::VectorXd h(2 * m);
      for (Eigen::Index k = 0; k < m; ++k) {
        const Eigen::Index off = kPoseDim + 2 * static_cast<Eigen::Index>(assignment.pairs[k].first);
        h.segment<2>(2 * k) = rt * (x.segment<2>(off) - p);
      }
      return h;
    };
    const uncertainty::GaussianBelief prior{map.mean(), map.covariance};
    const uncertainty::CubatureTransform t = uncertainty::cubature_transform(prior, measure);
    Eigen::MatrixXd s = t.output.covariance + noise;
    uncertainty::symmetrize(s);
    Eigen::LLT<Eigen::MatrixXd> llt(s);
    if (llt.info() != Eigen::Success) throw Error(ErrorKind::kNumeric, "innovation covariance not invertible");
    const Eigen::MatrixXd gain = llt.solve(t.cross_covariance.transpose()).transpose();
    out.set_mean(prior.mean + gain * (z - t.output.mean));
    out.covariance = map.covariance - gain * s * gain.transpose();
    uncertainty::symmetrize(out.covariance);
  }

  const Eigen::Matrix2d r = rotation(out.pose.heading);
  for (std::size_t j : assignment.unmatched_detections) {
    if (j >= detections.size()) throw Error(ErrorKind::kInvalidArgument, "assignment out of range");
    const Detection& d = detections[j];
    const Vec2 world = pathspace::to_world(out.pose, d.position);
    Eigen::MatrixXd rows = Eigen::MatrixXd::Zero(2, out.dimension());
    rows.leftCols<3>() = world_point_pose_jacobian(out.pose, world);
    const Eigen::MatrixXd sensor = r * d.covariance * r.transpose();
    out.covariance = replace_block(out.covariance, out.dimension(), 0, rows, sensor);
    out.landmarks.push_back({world, d.label});
  }
  return out;
}

void CkfConfig::validate() const {
  if (!(gate > 0.0)) throw Error(ErrorKind::kInvalidConfiguration, "association gate must be positive");
}

LandmarkMap process_frame(const LandmarkMap& map, std::span<const Detection> detections, const Odometry& odometry,
                          const CkfConfig& config, CkfFrameReport* report) {
  config.validate();
  CkfFrameReport local;
  CkfFrameReport& rep = report ? *report : local;
  rep = CkfFrameReport{};

  LandmarkMap m = predict(map, odometry, config.odometry_noise);
  std::vector<Detection> accepted;
  for (const Detection& d : detections) {
    if (std::find(config.labels.begin(), config.labels.end(), d.label) == config.labels.end()) {
      ++rep.rejected;
    } else {
      accepted.push_back(d);
    }
  }
  if (accepted.empty()) return m;

  const std::vector<WorldDetection> world = to_world(m.pose, accepted);
  const Assignment assignment = associate(mahalanobis_cost(m, world), config.gate);
  rep.matched = assignment.pairs.size();
  rep.added = assignment.unmatched_detections.size();
  return ckf_update(m, assignment, accepted);
}

}  // namespace pathspace::ckf
