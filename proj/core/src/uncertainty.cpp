#include "pathspace/uncertainty.hpp"

#include "pathspace/error.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <sstream>

namespace pathspace::uncertainty {

Eigen::Matrix2d point_covariance(const GaussianBelief& control_belief, const spline::BasisRow& row,
                                 int fold) {
  const Eigen::Index n_points = control_belief.covariance.rows() / 2;
  if (control_belief.covariance.rows() != control_belief.covariance.cols() ||
      control_belief.covariance.rows() % 2 != 0) {
    throw Error(ErrorKind::kInvalidConfiguration, "control belief must be square with 2D blocks");
  }
  Eigen::Matrix2d out = Eigen::Matrix2d::Zero();
  for (std::size_t r = 0; r < row.weights.size(); ++r) {
    Eigen::Index j = row.start_index + static_cast<Eigen::Index>(r);
    if (fold > 0) j %= fold;
    if (j < 0 || j >= n_points) {
      throw Error(ErrorKind::kInvalidConfiguration, "basis row refers to a control point outside the belief");
    }
    const double w = row.weights[r];
    out += w * w * control_belief.covariance.block<2, 2>(2 * j, 2 * j);
  }
  return out;
}

Eigen::MatrixXd covariance_sqrt(const Eigen::MatrixXd& covariance) {
  const Eigen::Index d = covariance.rows();
  if (covariance.cols() != d) throw Error(ErrorKind::kNumeric, "covariance is not square");
  if (d == 0 || covariance.isZero(0.0)) return Eigen::MatrixXd::Zero(d, d);

  Eigen::LLT<Eigen::MatrixXd> llt(covariance);
  if (llt.info() == Eigen::Success) return llt.matrixL();

  const double scale = std::max(covariance.diagonal().cwiseAbs().maxCoeff(), 1e-300);
  for (double jitter = 1e-12; jitter <= 1e-6 * (1.0 + 1e-9); jitter *= 10.0) {
    Eigen::MatrixXd padded = covariance;
    padded.diagonal().array() += jitter * scale;
    llt.compute(padded);
    if (llt.info() == Eigen::Success) return llt.matrixL();
  }
  throw Error(ErrorKind::kNumeric, "covariance not factorisable after maximum jitter");
}

SigmaPointSet cubature_points(const GaussianBelief& belief) {
  const Eigen::Index d = belief.dimension();
  if (d < 1) throw Error(ErrorKind::kInvalidArgument, "cubature needs dimension >= 1");
  const Eigen::MatrixXd root = covariance_sqrt(belief.covariance) * std::sqrt(static_cast<double>(d));

  SigmaPointSet set;
  set.points.resize(d, 2 * d);
  set.points.leftCols(d) = root.colwise() + belief.mean;
  set.points.rightCols(d) = (-root).colwise() + belief.mean;
  set.weights = Eigen::VectorXd::Constant(2 * d, 1.0 / (2.0 * static_cast<double>(d)));
  return set;
}

GaussianBelief sample_moments(const Eigen::MatrixXd& points, const Eigen::VectorXd& weights) {
  GaussianBelief out;
  out.mean = points * weights;
  const Eigen::MatrixXd dev = points.colwise() - out.mean;
  out.covariance = dev * weights.asDiagonal() * dev.transpose();
  symmetrize(out.covariance);
  return out;
}

CubatureTransform cubature_transform(const GaussianBelief& belief, const VectorMap& map) {
  const SigmaPointSet set = cubature_points(belief);
  const Eigen::Index count = set.points.cols();

  Eigen::MatrixXd mapped;
  for (Eigen::Index i = 0; i < count; ++i) {
    Eigen::VectorXd y;
    try {
      y = map(set.points.col(i));
    } catch (const std::exception& e) {
      std::ostringstream msg;
      msg << "map failed on sigma point " << i << ": " << e.what();
      throw Error(ErrorKind::kPropagation, msg.str());
    }
    if (i == 0) mapped.resize(y.size(), count);
    if (y.size() != mapped.rows()) {
      std::ostringstream msg;
      msg << "map returned inconsistent dimension on sigma point " << i;
      throw Error(ErrorKind::kPropagation, msg.str());
    }
    mapped.col(i) = y;
  }

  CubatureTransform out;
  out.output = sample_moments(mapped, set.weights);
  const Eigen::MatrixXd dx = set.points.colwise() - belief.mean;
  const Eigen::MatrixXd dy = mapped.colwise() - out.output.mean;
  out.cross_covariance = dx * set.weights.asDiagonal() * dy.transpose();
  return out;
}

GaussianBelief cubature_propagate(const GaussianBelief& belief, const VectorMap& map) {
  return cubature_transform(belief, map).output;
}

void symmetrize(Eigen::MatrixXd& matrix) {
  matrix = 0.5 * (matrix + matrix.transpose()).eval();
}

bool is_symmetric_psd(const Eigen::MatrixXd& matrix, double tolerance) {
  if (matrix.rows() != matrix.cols()) return false;
  if (matrix.size() == 0) return true;
  const double scale = std::max(matrix.cwiseAbs().maxCoeff(), 1e-300);
  if ((matrix - matrix.transpose()).cwiseAbs().maxCoeff() > tolerance * scale) return false;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(matrix, Eigen::EigenvaluesOnly);
  const double max_ev = eig.eigenvalues().cwiseAbs().maxCoeff();
  return eig.eigenvalues().minCoeff() >= -tolerance * std::max(max_ev, 1e-300);
}

}  // namespace pathspace::uncertainty
