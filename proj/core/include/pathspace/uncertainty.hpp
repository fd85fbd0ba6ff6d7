#pragma once

// Gaussian beliefs over stacked planar control points, continuous covariance
// along a spline, and the spherical-radial cubature rule.

#include "pathspace/spline.hpp"

#include <Eigen/Core>

#include <functional>

namespace pathspace::uncertainty {

struct GaussianBelief {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;

  Eigen::Index dimension() const { return mean.size(); }
};

// 2d points with equal weights 1/(2d); column i is a point.
struct SigmaPointSet {
  Eigen::MatrixXd points;
  Eigen::VectorXd weights;
};

// Covariance of S(u) from the marginal 2x2 blocks of the control points the
// basis row touches: sum_j Sigma_Cj * beta_j^2. Cross terms between control
// points are not included. `fold` > 0 maps expanded indices of a closed
// spline back onto its unique control points.
Eigen::Matrix2d point_covariance(const GaussianBelief& control_belief, const spline::BasisRow& row,
                                 int fold = 0);

// Lower-triangular L with L L^T ~= covariance. Plain Cholesky first, then
// diagonal jitter from 1e-12 growing x10 up to 1e-6 (relative to the largest
// diagonal entry).
Eigen::MatrixXd covariance_sqrt(const Eigen::MatrixXd& covariance);

SigmaPointSet cubature_points(const GaussianBelief& belief);

using VectorMap = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

struct CubatureTransform {
  GaussianBelief output;
  // E[(x - mean_x)(f(x) - mean_f)^T]
  Eigen::MatrixXd cross_covariance;
};

CubatureTransform cubature_transform(const GaussianBelief& belief, const VectorMap& map);
GaussianBelief cubature_propagate(const GaussianBelief& belief, const VectorMap& map);

// Moment reconstruction from an arbitrary (possibly transformed) point set.
GaussianBelief sample_moments(const Eigen::MatrixXd& points, const Eigen::VectorXd& weights);

void symmetrize(Eigen::MatrixXd& matrix);

// min eigenvalue >= -tolerance * max(|max eigenvalue|, 1e-300), plus symmetry.
bool is_symmetric_psd(const Eigen::MatrixXd& matrix, double tolerance = 1e-9);

}  // namespace pathspace::uncertainty
