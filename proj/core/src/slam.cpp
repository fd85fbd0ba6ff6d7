#include "pathspace/slam.hpp"

#include "pathspace/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

namespace pathspace::slam {
namespace {

using spline::BSpline;

// Kronecker product with the 2x2 identity: acts on stacked (x, y) pairs.
Eigen::MatrixXd kron2(const Eigen::MatrixXd& m) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(2 * m.rows(), 2 * m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      out(2 * i, 2 * j) = m(i, j);
      out(2 * i + 1, 2 * j + 1) = m(i, j);
    }
  }
  return out;
}

Eigen::VectorXd flatten(std::span<const Vec2> points) {
  Eigen::VectorXd out(2 * static_cast<Eigen::Index>(points.size()));
  for (std::size_t i = 0; i < points.size(); ++i) out.segment<2>(2 * static_cast<Eigen::Index>(i)) = points[i];
  return out;
}

const BSpline& spline_of(const JointBelief& belief, const Label& label) {
  auto it = belief.splines.find(label);
  if (it == belief.splines.end()) throw Error(ErrorKind::kInvalidArgument, "no spline for label '" + label + "'");
  return it->second;
}

// Cyclically contiguous cover of the touched unique indices.
std::vector<int> contiguous_cover(const std::set<int>& touched, int unique_count, bool closed) {
  std::vector<int> sorted(touched.begin(), touched.end());
  std::vector<int> out;
  if (sorted.empty()) return out;
  if (!closed) {
    for (int j = sorted.front(); j <= sorted.back(); ++j) out.push_back(j);
    return out;
  }
  // Start right after the largest cyclic gap between touched indices.
  int best_gap = -1, start = sorted.front();
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const int cur = sorted[i];
    const int next = i + 1 < sorted.size() ? sorted[i + 1] : sorted.front() + unique_count;
    if (next - cur > best_gap) {
      best_gap = next - cur;
      start = next % unique_count;
    }
  }
  const int length = unique_count - best_gap + 1;
  for (int r = 0; r < length; ++r) out.push_back((start + r) % unique_count);
  return out;
}

// Periodic knot vector for `spans` (normalised to sum to the period) starting at `begin`.
spline::KnotVector periodic_knots(const std::vector<double>& starts, double begin, double end, int order) {
  const int m = static_cast<int>(starts.size());
  const int k = order;
  const double period = end - begin;
  spline::KnotVector knots(m + 2 * k - 1);
  for (int i = 0; i < m; ++i) knots[k - 1 + i] = starts[i];
  knots[k - 1 + m] = end;
  for (int j = k - 2; j >= 0; --j) knots[j] = knots[j + m] - period;
  for (int j = k + m; j < m + 2 * k - 1; ++j) knots[j] = knots[j - m] + period;
  return knots;
}

std::vector<double> sample_params(const BSpline& s, int count) {
  std::vector<double> us(count);
  const double a = s.domain_begin(), b = s.domain_end();
  if (s.closed()) {
    for (int i = 0; i < count; ++i) us[i] = a + (b - a) * i / count;
  } else {
    for (int i = 0; i < count; ++i) us[i] = a + (b - a) * i / (count - 1);
  }
  return us;
}

Eigen::Matrix2d to_world_covariance(const AgentPose& pose, const Eigen::Matrix2d& agent_cov) {
  const Eigen::Matrix2d r = rotation(pose.heading);
  return r * agent_cov * r.transpose();
}

}  // namespace

void ClassifierParams::validate() const {
  if (!(growth_threshold > 0 && separation_threshold > 0 && endpoint_u_tolerance > 0 && max_update_distance > 0)) {
    throw Error(ErrorKind::kInvalidConfiguration, "classifier thresholds must be positive");
  }
}

JointBelief JointBelief::initial(const AgentPose& pose, const Eigen::Matrix3d& pose_covariance,
                                 std::vector<Label> labels) {
  JointBelief b;
  b.pose = pose;
  b.pose.heading = normalize_angle(pose.heading);
  b.covariance = pose_covariance;
  b.labels = std::move(labels);
  return b;
}

bool JointBelief::accepts(const Label& label) const {
  return std::find(labels.begin(), labels.end(), label) != labels.end();
}

Eigen::Index JointBelief::dimension() const { return kPoseDim + 2 * map_size(); }

Eigen::Index JointBelief::offset(const Label& label) const {
  Eigen::Index off = kPoseDim;
  for (const auto& [name, s] : splines) {
    if (name == label) return off;
    off += 2 * s.unique_size();
  }
  throw Error(ErrorKind::kInvalidArgument, "no spline for label '" + label + "'");
}

Eigen::Index JointBelief::block_size(const Label& label) const { return 2 * spline_of(*this, label).unique_size(); }

int JointBelief::map_size() const {
  int total = 0;
  for (const auto& [name, s] : splines) total += s.unique_size();
  return total;
}

Eigen::VectorXd JointBelief::mean() const {
  Eigen::VectorXd out(dimension());
  out.head<3>() = pose.vector();
  Eigen::Index off = kPoseDim;
  for (const auto& [name, s] : splines) {
    for (int j = 0; j < s.unique_size(); ++j) {
      out.segment<2>(off) = s.control_points()[j];
      off += 2;
    }
  }
  return out;
}

void JointBelief::set_mean(const Eigen::VectorXd& mean) {
  if (mean.size() != dimension()) throw Error(ErrorKind::kInvalidArgument, "mean dimension mismatch");
  pose = AgentPose::from_vector(mean.head<3>());
  Eigen::Index off = kPoseDim;
  for (auto& [name, s] : splines) {
    std::vector<Vec2> pts(s.unique_size());
    for (auto& p : pts) {
      p = mean.segment<2>(off);
      off += 2;
    }
    s = s.with_unique_control_points(pts);
  }
}

uncertainty::GaussianBelief JointBelief::spline_belief(const Label& label) const {
  const Eigen::Index off = offset(label);
  const Eigen::Index size = block_size(label);
  return {mean().segment(off, size), covariance.block(off, off, size, size)};
}

JointBelief predict(const JointBelief& belief, const Odometry& odometry, const Eigen::Matrix3d& odometry_noise) {
  JointBelief out = belief;
  predict_covariance(out.covariance, belief.pose, odometry, odometry_noise);
  out.pose = compose(belief.pose, odometry);
  return out;
}

Classification classify_detections(const JointBelief& belief, std::span<const Detection> detections,
                                   const ClassifierParams& params) {
  params.validate();
  Classification out;
  for (std::size_t i = 0; i < detections.size(); ++i) {
    const Detection& d = detections[i];
    if (!belief.accepts(d.label)) {
      out.rejected.push_back(i);
      continue;
    }
    WorldReading r;
    r.detection_index = i;
    r.world = to_world(belief.pose, d.position);
    r.covariance = to_world_covariance(belief.pose, d.covariance);

    auto it = belief.splines.find(d.label);
    if (it == belief.splines.end()) {
      out.unmapped[d.label].push_back(r);
      continue;
    }
    const BSpline& s = it->second;
    r.projection = spline::project(s, r.world);
    LabelReadings& bucket = out.mapped[d.label];

    if (!s.closed()) {
      const double span = s.domain_end() - s.domain_begin();
      const bool at_end = s.domain_end() - r.projection.u <= params.endpoint_u_tolerance * span;
      const Vec2 end = spline::evaluate(s, s.domain_end());
      const Vec2& before_last = s.control_points()[s.size() - 2];
      if (at_end && (r.world - end).norm() > params.growth_threshold &&
          (r.world - before_last).norm() > params.separation_threshold) {
        bucket.expansion.push_back(r);
        continue;
      }
    }
    if (r.projection.distance <= params.max_update_distance) {
      bucket.update.push_back(r);
    } else {
      bucket.deferred.push_back(r);
    }
  }
  return out;
}

std::vector<std::size_t> order_expansion_chain(std::span<const Vec2> points, const Vec2& endpoint) {
  std::vector<std::size_t> order;
  std::vector<bool> used(points.size(), false);
  Vec2 cursor = endpoint;
  for (std::size_t step = 0; step < points.size(); ++step) {
    std::size_t best = points.size();
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (used[i]) continue;
      const double d = (points[i] - cursor).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = i;
      }
    }
    used[best] = true;
    order.push_back(best);
    cursor = points[best];
  }
  return order;
}

JointBelief extend_belief(const JointBelief& belief, const Label& label, const Vec2& extension_point,
                          const Eigen::Matrix2d& sensor_covariance_world) {
  const BSpline& s = spline_of(belief, label);
  if (s.closed()) throw Error(ErrorKind::kInvalidState, "cannot extend the closed spline '" + label + "'");

  const spline::Extension ext = spline::extend_to_point(s, extension_point);
  if (ext.no_op) return belief;

  const Eigen::Index n = belief.dimension();
  const Eigen::Index off = belief.offset(label);
  const Eigen::Index old_size = 2 * s.size();
  const Eigen::Index new_size = 2 * ext.spline.size();

  // The extension point enters every recalculated control point through
  // point_weights; its pose dependence and sensor noise follow.
  const Eigen::MatrixXd wq = kron2(ext.point_weights);
  Eigen::MatrixXd rows = Eigen::MatrixXd::Zero(new_size, n);
  rows.middleCols(off, old_size) = kron2(ext.transform);
  rows.leftCols(kPoseDim) = wq * world_point_pose_jacobian(belief.pose, extension_point);
  const Eigen::MatrixXd noise = wq * sensor_covariance_world * wq.transpose();

  JointBelief out = belief;
  out.covariance = replace_block(belief.covariance, off, old_size, rows, noise);
  out.splines[label] = ext.spline;
  return out;
}

JointBelief add_spline(const JointBelief& belief, const Label& label, std::span<const Vec2> points,
                       std::span<const Eigen::Matrix2d> covariances, int order) {
  if (belief.splines.contains(label)) throw Error(ErrorKind::kInvalidState, "spline '" + label + "' already exists");
  if (points.size() != covariances.size()) throw Error(ErrorKind::kInvalidArgument, "points/covariances size mismatch");
  const spline::Interpolation interp = spline::interpolate_clamped(points, order);
  const Eigen::Index count = static_cast<Eigen::Index>(points.size());
  const Eigen::MatrixXd w = kron2(interp.weights);

  JointBelief probe = belief;
  probe.splines[label] = interp.spline;
  const Eigen::Index off = probe.offset(label);

  const Eigen::Index n = belief.dimension();
  Eigen::MatrixXd pose_rows(2 * count, kPoseDim);
  Eigen::MatrixXd reading_noise = Eigen::MatrixXd::Zero(2 * count, 2 * count);
  for (Eigen::Index i = 0; i < count; ++i) {
    pose_rows.middleRows<2>(2 * i) = world_point_pose_jacobian(belief.pose, points[i]);
    reading_noise.block<2, 2>(2 * i, 2 * i) = covariances[i];
  }
  Eigen::MatrixXd rows = Eigen::MatrixXd::Zero(2 * count, n);
  rows.leftCols(kPoseDim) = w * pose_rows;
  const Eigen::MatrixXd noise = w * reading_noise * w.transpose();

  probe.covariance = replace_block(belief.covariance, off, 0, rows, noise);
  return probe;
}

SplineMeasurement fit_measurement_spline(const JointBelief& belief, const Label& label,
                                         std::span<const Vec2> update_points,
                                         std::span<const Eigen::Matrix2d> sensor_covariances, double lambda,
                                         ObservationModel model, bool pose_coupling, double tangential_std) {
  if (update_points.empty()) throw Error(ErrorKind::kInvalidArgument, "empty update set");
  if (update_points.size() != sensor_covariances.size()) {
    throw Error(ErrorKind::kInvalidArgument, "points/covariances size mismatch");
  }
  if (!(lambda > 0.0)) throw Error(ErrorKind::kInvalidArgument, "lambda must be positive");
  if (!(tangential_std >= 0.0)) throw Error(ErrorKind::kInvalidArgument, "tangential_std must be non-negative");

  const BSpline& s = spline_of(belief, label);
  const int k = s.order();
  const int unique = s.unique_size();
  const Eigen::Index m = static_cast<Eigen::Index>(update_points.size());

  // Parameters and basis rows from the current mean spline; frozen below.
  std::vector<spline::BasisRow> rows(m);
  std::vector<Vec2> tangents(m, Vec2::Zero());
  std::set<int> touched;
  for (Eigen::Index i = 0; i < m; ++i) {
    const spline::Projection proj = spline::project(s, update_points[i]);
    rows[i] = spline::basis(s.knots(), k, proj.u);
    const Vec2 d = spline::derivative(s, proj.u, 1);
    if (d.norm() > 0.0) tangents[i] = d.normalized();
    for (int r = 0; r < k; ++r) {
      if (rows[i].weights[r] != 0.0) touched.insert(s.unique_index(rows[i].start_index + r));
    }
  }
  const std::vector<int> affected = contiguous_cover(touched, unique, s.closed());
  const Eigen::Index a = static_cast<Eigen::Index>(affected.size());
  std::vector<int> column(unique, -1);
  for (Eigen::Index c = 0; c < a; ++c) column[affected[c]] = static_cast<int>(c);

  Eigen::MatrixXd basis = Eigen::MatrixXd::Zero(m, a);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (int r = 0; r < k; ++r) {
      const int col = column[s.unique_index(rows[i].start_index + r)];
      if (col >= 0) basis(i, col) += rows[i].weights[r];
    }
  }

  // L = lambda * diag(1 - B^T 1 / m)
  const Eigen::VectorXd reg =
      (lambda * (Eigen::VectorXd::Ones(a) - basis.transpose() * Eigen::VectorXd::Ones(m) / static_cast<double>(m)))
          .cwiseMax(0.0);
  const Eigen::MatrixXd normal = basis.transpose() * basis + Eigen::MatrixXd(reg.asDiagonal());
  Eigen::LLT<Eigen::MatrixXd> llt(normal);
  if (llt.info() != Eigen::Success) throw Error(ErrorKind::kNumeric, "regularised normal matrix is singular");

  Eigen::MatrixXd prior(a, 2);
  for (Eigen::Index c = 0; c < a; ++c) prior.row(c) = s.control_points()[affected[c]].transpose();
  const Eigen::MatrixXd prior_term = reg.asDiagonal() * prior;
  const Eigen::MatrixXd gain = llt.solve(basis.transpose());  // a x m

  auto fit = [&](const Eigen::VectorXd& stacked) -> Eigen::VectorXd {
    Eigen::MatrixXd y(m, 2);
    for (Eigen::Index i = 0; i < m; ++i) y.row(i) = stacked.segment<2>(2 * i).transpose();
    const Eigen::MatrixXd c = llt.solve(basis.transpose() * y + prior_term);
    Eigen::VectorXd out(2 * a);
    for (Eigen::Index j = 0; j < a; ++j) out.segment<2>(2 * j) = c.row(j).transpose();
    return out;
  };

  uncertainty::GaussianBelief readings;
  readings.mean = flatten(update_points);
  readings.covariance = Eigen::MatrixXd::Zero(2 * m, 2 * m);
  const double tangential_var = tangential_std * tangential_std;
  for (Eigen::Index i = 0; i < m; ++i) {
    readings.covariance.block<2, 2>(2 * i, 2 * i) =
        sensor_covariances[i] + tangential_var * tangents[i] * tangents[i].transpose();
  }
  const uncertainty::GaussianBelief fitted = uncertainty::cubature_propagate(readings, fit);

  SplineMeasurement out;
  out.label = label;
  out.affected_indices = affected;
  out.control_values = fitted.mean;
  out.covariance = fitted.covariance;
  if (model == ObservationModel::kFitSensitivity) {
    out.observation = kron2(gain * basis);
    out.allow_rank_deficient = true;
  }
  if (pose_coupling) {
    Eigen::MatrixXd jac(2 * m, kPoseDim);
    // Re-projection absorbs any tangential shift of a reading, so only the
    // normal component of its pose sensitivity reaches the fit.
    for (Eigen::Index i = 0; i < m; ++i) {
      const Eigen::Matrix2d normal_part = Eigen::Matrix2d::Identity() - tangents[i] * tangents[i].transpose();
      jac.middleRows<2>(2 * i) = normal_part * world_point_pose_jacobian(belief.pose, update_points[i]);
    }
    out.pose_jacobian = kron2(gain) * jac;
  }
  return out;
}

JointBelief kalman_update(const JointBelief& belief, const SplineMeasurement& measurement) {
  const BSpline& s = spline_of(belief, measurement.label);
  const Eigen::Index off = belief.offset(measurement.label);
  const Eigen::Index a = static_cast<Eigen::Index>(measurement.affected_indices.size());
  const Eigen::Index r = 2 * a;
  const Eigen::Index n = belief.dimension();
  if (measurement.control_values.size() != r || measurement.covariance.rows() != r ||
      measurement.covariance.cols() != r) {
    throw Error(ErrorKind::kInvalidArgument, "measurement dimensions inconsistent");
  }
  for (int idx : measurement.affected_indices) {
    if (idx < 0 || idx >= s.unique_size()) throw Error(ErrorKind::kInvalidArgument, "affected index out of range");
  }

  const Eigen::MatrixXd obs =
      measurement.observation.size() == 0 ? Eigen::MatrixXd::Identity(r, r) : measurement.observation;
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(r, n);
  Eigen::VectorXd innovation(r);
  for (Eigen::Index c = 0; c < a; ++c) {
    const int idx = measurement.affected_indices[c];
    h.middleCols(off + 2 * idx, 2) += obs.middleCols(2 * c, 2);
    innovation.segment<2>(2 * c) = measurement.control_values.segment<2>(2 * c) - s.control_points()[idx];
  }
  if (measurement.pose_jacobian.size() != 0) h.leftCols(kPoseDim) -= measurement.pose_jacobian;

  const Eigen::MatrixXd& p = belief.covariance;
  const Eigen::MatrixXd pht = p * h.transpose();  // n x r
  Eigen::MatrixXd innov_cov = h * pht + measurement.covariance;
  uncertainty::symmetrize(innov_cov);

  Eigen::MatrixXd gain;
  if (!measurement.allow_rank_deficient) {
    Eigen::LLT<Eigen::MatrixXd> llt(innov_cov);
    if (llt.info() != Eigen::Success) throw Error(ErrorKind::kNumeric, "innovation covariance not invertible");
    gain = llt.solve(pht.transpose()).transpose();
  } else {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(innov_cov);
    const Eigen::VectorXd& ev = eig.eigenvalues();
    const double cutoff = 1e-10 * std::max(ev.cwiseAbs().maxCoeff(), 1e-300);
    Eigen::VectorXd inv = Eigen::VectorXd::Zero(r);
    for (Eigen::Index i = 0; i < r; ++i)
      if (ev(i) > cutoff) inv(i) = 1.0 / ev(i);
    const Eigen::MatrixXd pinv = eig.eigenvectors() * inv.asDiagonal() * eig.eigenvectors().transpose();
    gain = pht * pinv;
  }

  JointBelief out = belief;
  out.set_mean(belief.mean() + gain * innovation);
  // Joseph form, expanded: P - K U^T - U K^T + K S K^T with U = P H^T.
  const Eigen::MatrixXd ku = gain * pht.transpose();
  out.covariance = p - ku - ku.transpose() + gain * innov_cov * gain.transpose();
  uncertainty::symmetrize(out.covariance);
  return out;
}

std::vector<double> allocate_knots(const BSpline& s, int budget, double baseline_weight, int samples_per_control) {
  const int k = s.order();
  const int count = std::max(2 * budget, samples_per_control * s.unique_size());
  const std::vector<double> us = sample_params(s, count);
  const double a = s.domain_begin(), b = s.domain_end();

  std::vector<double> kappa(count);
  for (int i = 0; i < count; ++i) kappa[i] = spline::curvature(s, us[i]).value;
  const double total = std::accumulate(kappa.begin(), kappa.end(), 0.0);
  std::vector<double> w(count);
  for (int i = 0; i < count; ++i) {
    const double shape = total > 0.0 ? kappa[i] / total : 1.0 / count;
    w[i] = (1.0 - baseline_weight) * shape + baseline_weight / count;
  }

  // Piecewise-linear cumulative weight over the sample nodes.
  std::vector<double> nodes(us);
  std::vector<double> node_w(w);
  if (s.closed()) {
    nodes.push_back(b);
    node_w.push_back(w.front());
  }
  std::vector<double> cdf(nodes.size(), 0.0);
  for (std::size_t i = 1; i < nodes.size(); ++i) cdf[i] = cdf[i - 1] + 0.5 * (node_w[i - 1] + node_w[i]);
  const double mass = cdf.back();
  for (double& c : cdf) c /= mass;

  auto quantile = [&](double q) {
    auto it = std::lower_bound(cdf.begin(), cdf.end(), q);
    if (it == cdf.begin()) return nodes.front();
    if (it == cdf.end()) return nodes.back();
    const std::size_t i = static_cast<std::size_t>(it - cdf.begin());
    const double span = cdf[i] - cdf[i - 1];
    const double f = span > 0.0 ? (q - cdf[i - 1]) / span : 0.0;
    return nodes[i - 1] + f * (nodes[i] - nodes[i - 1]);
  };

  std::vector<double> knots;
  if (s.closed()) {
    for (int i = 0; i < budget; ++i) knots.push_back(quantile(static_cast<double>(i) / budget));
    knots.front() = a;
  } else {
    const int interior = budget - k;
    for (int i = 1; i <= interior; ++i) knots.push_back(quantile(static_cast<double>(i) / (interior + 1)));
  }

  // Keep at least a couple of samples inside every new span.
  const double gap = 1.5 * (b - a) / count;
  double prev = s.closed() ? a - gap : a;
  for (std::size_t i = s.closed() ? 1 : 0; i < knots.size(); ++i) {
    if (s.closed() && i == 0) continue;
    knots[i] = std::max(knots[i], prev + gap);
    prev = knots[i];
  }
  double next = b;
  for (std::size_t i = knots.size(); i-- > (s.closed() ? 1u : 0u);) {
    knots[i] = std::min(knots[i], next - gap);
    next = knots[i];
  }
  return knots;
}

JointBelief simplify(const JointBelief& belief, const Label& label, int budget, double baseline_weight,
                     int samples_per_control) {
  const BSpline& s = spline_of(belief, label);
  const int k = s.order();
  if (budget < k + 1) throw Error(ErrorKind::kInvalidArgument, "simplification budget below order + 1");
  if (!(baseline_weight >= 0.0 && baseline_weight <= 1.0)) {
    throw Error(ErrorKind::kInvalidArgument, "baseline weight must lie in [0, 1]");
  }
  const int old_count = s.unique_size();
  if (budget >= old_count) return belief;

  const std::vector<double> placed = allocate_knots(s, budget, baseline_weight, samples_per_control);
  spline::KnotVector knots;
  const double a = s.domain_begin(), b = s.domain_end();
  int expanded = budget;
  if (s.closed()) {
    knots = periodic_knots(placed, a, b, k);
    expanded = budget + k - 1;
  } else {
    knots.assign(k, a);
    knots.insert(knots.end(), placed.begin(), placed.end());
    knots.insert(knots.end(), k, b);
  }

  const int count = std::max(2 * budget, samples_per_control * old_count);
  const std::vector<double> us = sample_params(s, count);
  const Eigen::MatrixXd a_old = spline::collocation_matrix(s.knots(), k, us, old_count);
  const Eigen::MatrixXd a_new = spline::collocation_matrix(knots, k, us, budget);
  Eigen::LLT<Eigen::MatrixXd> llt(a_new.transpose() * a_new);
  if (llt.info() != Eigen::Success) throw Error(ErrorKind::kNumeric, "simplification fit is singular");
  const Eigen::MatrixXd fit = llt.solve(a_new.transpose() * a_old);  // budget x old_count
  const Eigen::MatrixXd fit2 = kron2(fit);

  const uncertainty::GaussianBelief block = belief.spline_belief(label);
  const Eigen::VectorXd new_mean = fit2 * block.mean;
  std::vector<Vec2> ctrl(expanded);
  for (int j = 0; j < expanded; ++j) ctrl[j] = new_mean.segment<2>(2 * (j % budget));

  const Eigen::Index off = belief.offset(label);
  const Eigen::Index n = belief.dimension();
  Eigen::MatrixXd rows = Eigen::MatrixXd::Zero(2 * budget, n);
  rows.middleCols(off, 2 * old_count) = fit2;

  JointBelief out = belief;
  out.covariance = replace_block(belief.covariance, off, 2 * old_count, rows,
                                 Eigen::MatrixXd::Zero(2 * budget, 2 * budget));
  // The new block itself comes from the sampled transform of the old block.
  const uncertainty::GaussianBelief propagated =
      uncertainty::cubature_propagate(block, [&](const Eigen::VectorXd& x) -> Eigen::VectorXd { return fit2 * x; });
  out.covariance.block(off, off, 2 * budget, 2 * budget) = propagated.covariance;
  out.splines[label] = BSpline(k, std::move(knots), std::move(ctrl), s.closed());
  return out;
}

bool check_loop_closure(const JointBelief& belief, const Label& label,
                        std::span<const spline::Projection> latest_projections, const LoopClosureParams& params) {
  const BSpline& s = spline_of(belief, label);
  if (s.closed()) return false;
  if (spline::arc_length(s) <= params.min_path_length) return false;
  const double limit = s.domain_begin() + params.early_segment_fraction * (s.domain_end() - s.domain_begin());
  return std::any_of(latest_projections.begin(), latest_projections.end(), [&](const spline::Projection& p) {
    return p.u < limit && p.distance <= params.closure_radius;
  });
}

JointBelief close_loop(const JointBelief& belief, const Label& label, const spline::ClosureOptions& options) {
  const BSpline& s = spline_of(belief, label);
  const spline::LoopClosure closure = spline::close_loop(s, options);
  const Eigen::Index off = belief.offset(label);
  const Eigen::Index old_size = 2 * s.unique_size();
  const Eigen::Index new_size = 2 * closure.spline.unique_size();
  Eigen::MatrixXd rows = Eigen::MatrixXd::Zero(new_size, belief.dimension());
  rows.middleCols(off, old_size) = kron2(closure.transform);

  JointBelief out = belief;
  out.covariance = replace_block(belief.covariance, off, old_size, rows, Eigen::MatrixXd::Zero(new_size, new_size));
  out.splines[label] = closure.spline;
  return out;
}

int simplification_budget(const BSpline& s, const PathspaceConfig& config) {
  const double length = spline::arc_length(s);
  // Clamped in floating point first: a runaway length must not overflow.
  const double by_length = std::ceil(length / config.simplify_spacing);
  const double cap = std::max(s.unique_size(), s.order() + 1);
  return static_cast<int>(std::clamp(by_length, static_cast<double>(s.order() + 1), cap));
}

JointBelief process_frame(const JointBelief& belief, std::span<const Detection> detections,
                          const Odometry& odometry, const PathspaceConfig& config, FrameReport* report) {
  FrameReport local;
  FrameReport& rep = report ? *report : local;
  rep = FrameReport{};

  JointBelief b = predict(belief, odometry, config.odometry_noise);
  b.frame = belief.frame + 1;
  if (detections.empty()) return b;

  const Classification cls = classify_detections(b, detections, config.classifier);
  rep.rejected = cls.rejected.size();

  // Labels without a spline accumulate readings until a spline can be seeded.
  for (const auto& [label, readings] : cls.unmapped) {
    auto& pending = b.pending[label];
    for (const WorldReading& r : readings) {
      auto near = std::find_if(pending.begin(), pending.end(), [&](const PendingPoint& p) {
        return (p.position - r.world).norm() <= config.bootstrap_merge_radius;
      });
      if (near == pending.end()) {
        pending.push_back({r.world, 1});
      } else {
        near->position = (near->position * near->count + r.world) / (near->count + 1);
        ++near->count;
      }
    }
    if (static_cast<int>(pending.size()) >= config.order + 1) {
      std::vector<Vec2> pts;
      for (const auto& p : pending) pts.push_back(p.position);
      // Chain from the rearmost cluster along the heading so the seed runs forward.
      const Vec2 forward(std::cos(b.pose.heading), std::sin(b.pose.heading));
      const auto rear = std::min_element(pts.begin(), pts.end(), [&](const Vec2& a, const Vec2& c) {
        return a.dot(forward) < c.dot(forward);
      });
      const auto chain = order_expansion_chain(pts, *rear);
      std::vector<Vec2> seed;
      std::vector<Eigen::Matrix2d> covs;
      const Eigen::Matrix2d reading_cov = readings.front().covariance;
      for (int i = 0; i < config.order + 1; ++i) {
        seed.push_back(pts[chain[i]]);
        covs.push_back(reading_cov / pending[chain[i]].count);
      }
      b = add_spline(b, label, seed, covs, config.order);
      b.pending.erase(label);
      rep.bootstrapped.push_back(label);
    }
  }

  for (const auto& [label, lr] : cls.mapped) {
    std::vector<WorldReading> updates = lr.update;
    bool spline_open = !b.splines.at(label).closed();

    if (spline_open && !lr.expansion.empty()) {
      std::vector<Vec2> pts;
      for (const auto& r : lr.expansion) pts.push_back(r.world);
      const BSpline& s = b.splines.at(label);
      const auto chain = order_expansion_chain(pts, spline::evaluate(s, s.domain_end()));
      const WorldReading& ext = lr.expansion[chain.back()];
      b = extend_belief(b, label, ext.world, ext.covariance);
      ++rep.extensions;
      for (std::size_t i = 0; i + 1 < chain.size(); ++i) updates.push_back(lr.expansion[chain[i]]);
    }

    // Projections onto the (possibly extended) mean spline.
    const BSpline& s = b.splines.at(label);
    std::vector<WorldReading> kept;
    for (WorldReading r : updates) {
      r.projection = spline::project(s, r.world);
      if (r.projection.distance <= config.classifier.max_update_distance) kept.push_back(r);
    }

    bool closing = false;
    if (spline_open) {
      std::vector<spline::Projection> projections;
      for (const auto& r : kept) projections.push_back(r.projection);
      closing = check_loop_closure(b, label, projections, config.loop);
      if (closing) {
        // The closing frame's update uses only readings of the start of the
        // spline. The start was mapped with little pose uncertainty, so this
        // is what observes the drift accumulated over the lap; it corrects
        // the pose and, through their correlation, the recent end before
        // the two are joined. Readings clamped at u = 0 say nothing about
        // along-track position and are left out.
        const double span = s.domain_end() - s.domain_begin();
        const double limit = s.domain_begin() + config.loop.early_segment_fraction * span;
        const double floor = s.domain_begin() + config.classifier.endpoint_u_tolerance * span;
        std::erase_if(kept, [&](const WorldReading& r) { return r.projection.u <= floor || r.projection.u >= limit; });
        closing = !kept.empty();
      }
    }

    if (!kept.empty()) {
      std::vector<Vec2> pts;
      std::vector<Eigen::Matrix2d> covs;
      for (const auto& r : kept) {
        pts.push_back(r.world);
        covs.push_back(r.covariance);
      }
      const SplineMeasurement meas =
          fit_measurement_spline(b, label, pts, covs, config.lambda, config.observation, config.pose_coupling,
                                 config.tangential_std);
      b = kalman_update(b, meas);
      ++rep.kalman_updates;
    }

    if (closing) {
      try {
        b = close_loop(b, label, config.closure);
        const BSpline& closed = b.splines.at(label);
        const int budget = std::min(simplification_budget(closed, config), closed.unique_size());
        b = simplify(b, label, budget, config.baseline_weight, config.samples_per_control);
        rep.closed.push_back(label);
        spline_open = false;
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::kClosureRejected) throw;
      }
    } else if (spline_open && config.simplify_every > 0 && b.frame % config.simplify_every == 0) {
      const BSpline& open = b.splines.at(label);
      const int budget = simplification_budget(open, config);
      if (budget < open.unique_size()) {
        b = simplify(b, label, budget, config.baseline_weight, config.samples_per_control);
        rep.simplified.push_back(label);
      }
    }
  }
  return b;
}

}  // namespace pathspace::slam
