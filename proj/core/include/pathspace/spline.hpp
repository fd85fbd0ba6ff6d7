#pragma once

// Planar B-spline geometry: basis evaluation, derivatives, projection,
// shape-preserving extension and periodic loop closure. Nothing in here is
// probabilistic; the linear maps returned by the structural operations are
// what the SLAM layer uses to carry covariance along.

#include <Eigen/Core>

#include <span>
#include <vector>

namespace pathspace::spline {

using Point = Eigen::Vector2d;
using KnotVector = std::vector<double>;

// Non-zero window of the basis functions at one parameter value.
struct BasisRow {
  int start_index = 0;
  std::vector<double> weights;
};

// A B-spline of order k (degree k-1). Closed splines are stored in expanded
// periodic form: the last k-1 control points repeat the first k-1, so
// evaluation never needs to know about the wrap. unique_size() counts the
// independent control points and unique_index() folds an expanded index.
class BSpline {
 public:
  BSpline() = default;
  BSpline(int order, KnotVector knots, std::vector<Point> control_points, bool closed = false);

  int order() const { return order_; }
  int degree() const { return order_ - 1; }
  const KnotVector& knots() const { return knots_; }
  const std::vector<Point>& control_points() const { return control_points_; }
  int size() const { return static_cast<int>(control_points_.size()); }

  bool closed() const { return closed_; }
  bool clamped_left() const;
  bool clamped_right() const;

  double domain_begin() const { return knots_[order_ - 1]; }
  double domain_end() const { return knots_[control_points_.size()]; }

  int unique_size() const { return closed_ ? size() - (order_ - 1) : size(); }
  int unique_index(int expanded_index) const {
    return closed_ ? expanded_index % unique_size() : expanded_index;
  }
  std::vector<Point> unique_control_points() const;

  // Same knots and topology, new independent control points.
  BSpline with_unique_control_points(std::span<const Point> points) const;

 private:
  int order_ = 4;
  KnotVector knots_;
  std::vector<Point> control_points_;
  bool closed_ = false;
};

KnotVector make_clamped_uniform_knots(int n_control, int order);

BasisRow basis(const KnotVector& knots, int order, double u);

Point evaluate(const BSpline& spline, double u);

// der_order-th derivative with respect to u, via the reduced-degree
// derivative spline.
Point derivative(const BSpline& spline, double u, int der_order);
BSpline derivative_spline(const BSpline& spline);

struct Curvature {
  double value = 0.0;
  bool degenerate = false;
};
Curvature curvature(const BSpline& spline, double u);

struct Projection {
  double u = 0.0;
  double distance = 0.0;
};
Projection project(const BSpline& spline, const Point& point, int samples_per_span = 8);

// The old curve is kept exactly on its (renormalised) domain. For order >= 3
// the new piece spans two knot intervals sized by the chord to the new point
// and two control points are appended; among all such continuations that end
// at the new point it has the least integrated squared second derivative.
// Order 2 appends the point as one more segment.
struct Extension {
  BSpline spline;
  int new_index = -1;  // the appended point, now the clamped end
  // true when the new point coincided with the current endpoint and nothing
  // was done.
  bool no_op = false;
  // new control points = transform * old control points + point_weights * new_point
  Eigen::MatrixXd transform;
  Eigen::VectorXd point_weights;
};
Extension extend_to_point(const BSpline& spline, const Point& new_point);

struct ClosureOptions {
  double max_gap = 15.0;
  double merge_radius = 0.5;
};
struct LoopClosure {
  BSpline spline;
  // unique control points of the closed spline = transform * old control points
  Eigen::MatrixXd transform;
};
LoopClosure close_loop(const BSpline& spline, const ClosureOptions& options = {});

double arc_length(const BSpline& spline, int gauss_points = 5);

// Clamped interpolation through points with chord-length parameters and
// averaged knots. control points = weights * points.
struct Interpolation {
  BSpline spline;
  Eigen::MatrixXd weights;
};
Interpolation interpolate_clamped(std::span<const Point> points, int order = 4);

// Dense collocation matrix: row i holds the basis at params[i]. Columns are
// folded modulo `columns`, which is how closed splines map onto their unique
// control points.
Eigen::MatrixXd collocation_matrix(const KnotVector& knots, int order,
                                   std::span<const double> params, int columns);

// Largest distance from `samples` evenly spaced points of `from` to `to`.
double max_deviation(const BSpline& from, const BSpline& to, int samples = 400);

}  // namespace pathspace::spline
