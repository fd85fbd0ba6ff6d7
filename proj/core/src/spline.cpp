#include "pathspace/spline.hpp"

#include "pathspace/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace pathspace::spline {
namespace {

constexpr int kMaxOrder = 12;
constexpr double kDomainSlack = 1e-12;

struct Span {
  int index;  // knot span i with t_i <= u < t_{i+1}
  double u;   // u clamped into the domain
};

int control_count(const KnotVector& knots, int order) {
  return static_cast<int>(knots.size()) - order;
}

Span find_span(const KnotVector& knots, int order, double u) {
  const int n_ctrl = control_count(knots, order);
  const double lo = knots[order - 1];
  const double hi = knots[n_ctrl];
  const double slack = kDomainSlack * std::max(1.0, hi - lo);
  if (!(u >= lo - slack && u <= hi + slack)) {
    std::ostringstream msg;
    msg << "parameter " << u << " outside [" << lo << ", " << hi << "]";
    throw Error(ErrorKind::kDomain, msg.str());
  }
  u = std::clamp(u, lo, hi);
  if (u >= hi) {
    // Closed-right convention: the last non-empty span owns the endpoint.
    int i = n_ctrl - 1;
    while (i > order - 1 && knots[i] >= hi) --i;
    return {i, u};
  }
  // Largest i in [order-1, n_ctrl-1] with knots[i] <= u.
  auto first = knots.begin() + order - 1;
  auto last = knots.begin() + n_ctrl;
  auto it = std::upper_bound(first, last, u);
  return {static_cast<int>(it - knots.begin()) - 1, u};
}

// Cox-de Boor in the triangular form; 0/0 is taken as 0.
void basis_into(const KnotVector& knots, int order, const Span& span, double* out) {
  const int p = order - 1;
  std::array<double, kMaxOrder> left{}, right{};
  out[0] = 1.0;
  for (int j = 1; j <= p; ++j) {
    left[j] = span.u - knots[span.index + 1 - j];
    right[j] = knots[span.index + j] - span.u;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      const double denom = right[r + 1] + left[j - r];
      const double temp = denom == 0.0 ? 0.0 : out[r] / denom;
      out[r] = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    out[j] = saved;
  }
}

void check_order(int order) {
  if (order < 2 || order > kMaxOrder) {
    throw Error(ErrorKind::kInvalidConfiguration, "spline order must be in [2, 12]");
  }
}

// Blossom of the polynomial piece on knot span `span_index`, returned as
// coefficients over control points span_index-p .. span_index.
Eigen::VectorXd blossom_coefficients(const KnotVector& knots, int order, int span_index,
                                     std::span<const double> args) {
  const int p = order - 1;
  std::vector<Eigen::VectorXd> d(order, Eigen::VectorXd::Zero(order));
  for (int j = 0; j <= p; ++j) d[j](j) = 1.0;
  for (int r = 1; r <= p; ++r) {
    for (int j = p; j >= r; --j) {
      const int idx = span_index - p + j;
      const double denom = knots[idx + p + 1 - r] - knots[idx];
      const double alpha = denom == 0.0 ? 0.0 : (args[r - 1] - knots[idx]) / denom;
      d[j] = (1.0 - alpha) * d[j - 1] + alpha * d[j];
    }
  }
  return d[p];
}


}  // namespace

BSpline::BSpline(int order, KnotVector knots, std::vector<Point> control_points, bool closed)
    : order_(order),
      knots_(std::move(knots)),
      control_points_(std::move(control_points)),
      closed_(closed) {
  check_order(order_);
  const int n = size();
  if (n < order_) {
    throw Error(ErrorKind::kInvalidConfiguration, "spline needs at least `order` control points");
  }
  if (static_cast<int>(knots_.size()) != n + order_) {
    throw Error(ErrorKind::kInvalidConfiguration, "knot vector length must equal control points + order");
  }
  for (std::size_t i = 0; i + 1 < knots_.size(); ++i) {
    if (!(knots_[i] <= knots_[i + 1])) {
      throw Error(ErrorKind::kInvalidConfiguration, "knot vector must be non-decreasing");
    }
  }
  if (!(domain_begin() < domain_end())) {
    throw Error(ErrorKind::kInvalidConfiguration, "empty parameter domain");
  }
  if (closed_) {
    const int m = unique_size();
    if (m < 2) throw Error(ErrorKind::kInvalidConfiguration, "closed spline too small");
    for (int i = 0; i < order_ - 1; ++i) {
      if ((control_points_[m + i] - control_points_[i]).norm() > 1e-12 * (1.0 + control_points_[i].norm())) {
        throw Error(ErrorKind::kInvalidConfiguration, "closed spline control points do not wrap");
      }
    }
  }
}

bool BSpline::clamped_left() const {
  for (int i = 1; i < order_; ++i)
    if (knots_[i] != knots_[0]) return false;
  return true;
}

bool BSpline::clamped_right() const {
  const std::size_t last = knots_.size() - 1;
  for (int i = 1; i < order_; ++i)
    if (knots_[last - i] != knots_[last]) return false;
  return true;
}

std::vector<Point> BSpline::unique_control_points() const {
  return {control_points_.begin(), control_points_.begin() + unique_size()};
}

BSpline BSpline::with_unique_control_points(std::span<const Point> points) const {
  const int m = unique_size();
  if (static_cast<int>(points.size()) != m) {
    throw Error(ErrorKind::kInvalidArgument, "control point count mismatch");
  }
  BSpline out = *this;
  for (int j = 0; j < size(); ++j) out.control_points_[j] = points[j % m];
  return out;
}

KnotVector make_clamped_uniform_knots(int n_control, int order) {
  check_order(order);
  if (n_control < order) {
    throw Error(ErrorKind::kInvalidConfiguration, "need n_control >= order for a clamped knot vector");
  }
  KnotVector knots(n_control + order);
  const int interior = n_control - order;
  for (int i = 0; i < order; ++i) {
    knots[i] = 0.0;
    knots[n_control + i] = 1.0;
  }
  for (int i = 1; i <= interior; ++i) {
    knots[order - 1 + i] = static_cast<double>(i) / (interior + 1);
  }
  return knots;
}

BasisRow basis(const KnotVector& knots, int order, double u) {
  check_order(order);
  if (control_count(knots, order) < order) {
    throw Error(ErrorKind::kInvalidConfiguration, "knot vector too short for order");
  }
  const Span span = find_span(knots, order, u);
  BasisRow row;
  row.start_index = span.index - (order - 1);
  row.weights.resize(order);
  basis_into(knots, order, span, row.weights.data());
  return row;
}

Point evaluate(const BSpline& spline, double u) {
  const int k = spline.order();
  const Span span = find_span(spline.knots(), k, u);
  std::array<double, kMaxOrder> w{};
  basis_into(spline.knots(), k, span, w.data());
  Point p = Point::Zero();
  const int start = span.index - (k - 1);
  const auto& ctrl = spline.control_points();
  for (int j = 0; j < k; ++j) p += w[j] * ctrl[start + j];
  return p;
}

BSpline derivative_spline(const BSpline& spline) {
  const int k = spline.order();
  if (k < 3) {
    throw Error(ErrorKind::kInvalidConfiguration, "derivative spline needs order >= 3");
  }
  const auto& t = spline.knots();
  const auto& c = spline.control_points();
  const int n = spline.size();
  std::vector<Point> q(n - 1);
  for (int i = 0; i < n - 1; ++i) {
    const double span = t[i + k] - t[i + 1];
    q[i] = span == 0.0 ? Point::Zero() : Point((k - 1) * (c[i + 1] - c[i]) / span);
  }
  KnotVector dt(t.begin() + 1, t.end() - 1);
  return BSpline(k - 1, std::move(dt), std::move(q));
}

Point derivative(const BSpline& spline, double u, int der_order) {
  if (der_order < 1 || der_order > spline.order() - 1) {
    throw Error(ErrorKind::kInvalidConfiguration, "derivative order must be in [1, order-1]");
  }
  if (der_order == spline.order() - 1) {
    // Piecewise constant: evaluate through the linear derivative spline.
    BSpline d = spline;
    for (int i = 0; i < der_order - 1; ++i) d = derivative_spline(d);
    const auto& t = d.knots();
    const Span span = find_span(t, d.order(), u);
    const int i = span.index;
    const double h = t[i + 1] - t[i];
    return h == 0.0 ? Point::Zero()
                    : Point((d.control_points()[i] - d.control_points()[i - 1]) / h);
  }
  BSpline d = spline;
  for (int i = 0; i < der_order; ++i) d = derivative_spline(d);
  return evaluate(d, u);
}

Curvature curvature(const BSpline& spline, double u) {
  const Point d1 = derivative(spline, u, 1);
  const Point d2 = derivative(spline, u, 2);
  const double speed2 = d1.squaredNorm();
  if (speed2 < 1e-24) return {0.0, true};
  const double cross = d1.x() * d2.y() - d1.y() * d2.x();
  return {std::abs(cross) / std::pow(speed2, 1.5), false};
}

Projection project(const BSpline& spline, const Point& point, int samples_per_span) {
  samples_per_span = std::max(1, samples_per_span);
  const auto& t = spline.knots();
  const int k = spline.order();
  const int n = spline.size();

  std::vector<double> us;
  us.reserve(static_cast<std::size_t>((n - k + 1) * samples_per_span + 1));
  for (int i = k - 1; i < n; ++i) {
    if (t[i + 1] <= t[i]) continue;
    for (int s = 0; s < samples_per_span; ++s) {
      us.push_back(t[i] + (t[i + 1] - t[i]) * s / samples_per_span);
    }
  }
  us.push_back(spline.domain_end());

  std::vector<double> d2(us.size());
  for (std::size_t i = 0; i < us.size(); ++i) d2[i] = (evaluate(spline, us[i]) - point).squaredNorm();

  // Local minima of the sampled distance are refinement candidates.
  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < us.size(); ++i) {
    const bool left_ok = i == 0 || d2[i] <= d2[i - 1];
    const bool right_ok = i + 1 == us.size() || d2[i] <= d2[i + 1];
    if (left_ok && right_ok) candidates.push_back(i);
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [&](std::size_t a, std::size_t b) { return d2[a] < d2[b]; });
  if (candidates.size() > 3) candidates.resize(3);

  const BSpline first = derivative_spline(spline);
  // Order 3 has a piecewise-constant second derivative, read off `first`.
  const BSpline second = k > 3 ? derivative_spline(first) : first;

  Projection best{us[0], std::numeric_limits<double>::infinity()};
  for (std::size_t c : candidates) {
    const double lo = us[c == 0 ? 0 : c - 1];
    const double hi = us[std::min(c + 1, us.size() - 1)];
    double u = us[c];
    for (int iter = 0; iter < 60; ++iter) {
      const Point r = evaluate(spline, u) - point;
      const Point s1 = evaluate(first, u);
      const Point s2 = k > 3 ? evaluate(second, u) : k == 3 ? derivative(first, u, 1) : Point::Zero();
      const double g = r.dot(s1);
      const double h = s1.squaredNorm() + r.dot(s2);
      double next;
      if (h > 0.0) {
        next = u - g / h;
      } else {
        next = g > 0.0 ? lo : hi;
      }
      next = std::clamp(next, lo, hi);
      const double step = std::abs(next - u);
      u = next;
      if (step < 1e-13 * std::max(1.0, std::abs(u))) break;
    }
    const double dist = (evaluate(spline, u) - point).norm();
    if (dist < best.distance - 1e-12 || (std::abs(dist - best.distance) <= 1e-12 && u < best.u)) {
      best = {u, dist};
    }
  }
  return best;
}

Extension extend_to_point(const BSpline& spline, const Point& new_point) {
  if (spline.closed()) throw Error(ErrorKind::kInvalidState, "cannot extend a closed spline");
  if (!spline.clamped_right()) throw Error(ErrorKind::kInvalidState, "extension requires a right-clamped spline");

  const int k = spline.order();
  const int p = k - 1;
  const int n = spline.size() - 1;  // last control index
  const auto& t = spline.knots();
  const auto& c = spline.control_points();

  Extension out;
  const double chord = (new_point - c[n]).norm();
  if (chord < 1e-9) {
    out.spline = spline;
    out.new_index = n;
    out.no_op = true;
    out.transform = Eigen::MatrixXd::Identity(n + 1, n + 1);
    out.point_weights = Eigen::VectorXd::Zero(n + 1);
    return out;
  }

  const double a = spline.domain_begin();
  const double b = spline.domain_end();
  const double length = arc_length(spline);
  // Chord-length spacing keeps parameter speed close to uniform.
  const double delta = length > 1e-9 ? chord / length * (b - a) : (b - a) / std::max(1, n - p + 1);
  const double big_t = b + delta;

  int last_span = n;
  while (t[last_span] >= b) --last_span;
  // Blossom of the last old piece as weights over c[last_span-p .. last_span].
  auto old_blossom = [&](std::span<const double> args) { return blossom_coefficients(t, k, last_span, args); };

  const int added = p >= 2 ? 2 : 1;
  const int m_new = n + 1 + added;  // new control count
  out.transform = Eigen::MatrixXd::Zero(m_new, n + 1);
  out.point_weights = Eigen::VectorXd::Zero(m_new);
  for (int j = 0; j <= n; ++j) out.transform(j, j) = 1.0;

  // Unclamping leaves one copy of b, so the curve stays C(p-1) there and the
  // old domain is untouched. With p >= 2 the new stretch [b, T] gets an
  // interior knot m and is the old last piece plus alpha (u-b)^p on [b, m]
  // and a further beta (u-m)^p on [m, T]. A single span would be fully
  // determined by continuity and the new point; it inherits the end
  // curvature and rings, and the ringing grows with every extension.
  KnotVector nt(t.begin(), t.begin() + n + 2);
  const double mid = b + 0.5 * delta;
  if (added == 2) nt.push_back(mid);
  nt.insert(nt.end(), k, big_t);

  // Weights over the old control points of a blossom of the last old piece.
  auto old_row = [&](std::span<const double> args) {
    Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(n + 1);
    const Eigen::VectorXd f = old_blossom(args);
    for (int r = 0; r <= p; ++r) row(last_span - p + r) = f(r);
    return row;
  };
  std::vector<double> at_t(p, big_t);
  const Eigen::RowVectorXd value_t = old_row(at_t);

  // alpha = alpha_c * c + ra * Q.
  Eigen::RowVectorXd alpha_c = -value_t / std::pow(delta, p);
  double ra = 1.0 / std::pow(delta, p);
  if (added == 2) {
    // Among the continuations that reach Q, take the one with least
    // integral of |P''|^2 over [b, T]: a constrained quadratic problem in
    // (alpha, beta), solved per coordinate through its KKT system.
    const double h1 = mid - b;
    const double h = big_t - mid;
    constexpr std::array<double, 4> gx{-0.8611363115940526, -0.3399810435848563, 0.3399810435848563,
                                       0.8611363115940526};
    constexpr std::array<double, 4> gw{0.3478548451374538, 0.6521451548625461, 0.6521451548625461,
                                       0.3478548451374538};
    const double pp = p * (p - 1);
    Eigen::Matrix2d gram = Eigen::Matrix2d::Zero();
    Eigen::MatrixXd cross = Eigen::MatrixXd::Zero(2, n + 1);
    std::vector<double> args(p);
    for (const auto& [lo, hi] : {std::pair{0.0, h1}, std::pair{h1, delta}}) {
      for (std::size_t q = 0; q < gx.size(); ++q) {
        const double sq = lo + 0.5 * (hi - lo) * (gx[q] + 1.0);
        const double wq = 0.5 * (hi - lo) * gw[q];
        const double u = b + sq;
        // Second derivative of the old piece at u via its multi-affine blossom.
        std::fill(args.begin(), args.end(), u);
        const Eigen::RowVectorXd f00 = old_row(args);
        args[0] = u + delta;
        const Eigen::RowVectorXd f10 = old_row(args);
        args[1] = u + delta;
        const Eigen::RowVectorXd f11 = old_row(args);
        const Eigen::RowVectorXd g = pp * (f11 - 2.0 * f10 + f00) / (delta * delta);
        const Eigen::Vector2d phi(pp * std::pow(sq, p - 2), sq > h1 ? pp * std::pow(sq - h1, p - 2) : 0.0);
        gram += wq * phi * phi.transpose();
        cross += wq * phi * g;
      }
    }
    Eigen::Matrix3d kkt = Eigen::Matrix3d::Zero();
    kkt.topLeftCorner<2, 2>() = gram;
    kkt(0, 2) = kkt(2, 0) = std::pow(delta, p);
    kkt(1, 2) = kkt(2, 1) = std::pow(h, p);
    const Eigen::Matrix3d inv = kkt.inverse();
    alpha_c = -inv(0, 0) * cross.row(0) - inv(0, 1) * cross.row(1) - inv(0, 2) * value_t;
    ra = inv(0, 2);
  }

  // Control point j is the blossom of any piece inside its support at
  // nt[j+1 .. j+p]; the piece on [b, m] (or [b, T]) covers every changed j
  // except the clamped end, which is the new point itself.
  std::vector<Point> nc(c.begin(), c.end());
  nc.resize(m_new, Point::Zero());
  std::vector<double> args(p);
  for (int j = std::max(0, n + 2 - p); j < m_new - 1; ++j) {
    double shift = 1.0;
    for (int r = 0; r < p; ++r) {
      args[r] = nt[j + 1 + r];
      shift *= args[r] - b;
    }
    const Eigen::VectorXd coeffs = old_blossom(args);
    Eigen::RowVectorXd row = shift * alpha_c;
    for (int r = 0; r <= p; ++r) row(last_span - p + r) += coeffs(r);
    out.transform.row(j) = row;
    out.point_weights(j) = shift * ra;
  }
  out.point_weights(m_new - 1) = 1.0;
  out.transform.row(m_new - 1).setZero();

  for (int j = std::max(0, n + 2 - p); j < m_new; ++j) {
    Point q = out.point_weights(j) * new_point;
    for (int i = 0; i <= n; ++i)
      if (out.transform(j, i) != 0.0) q += out.transform(j, i) * c[i];
    nc[j] = q;
  }

  // Renormalise back onto [a, b].
  const double scale = (b - a) / (big_t - a);
  for (double& v : nt) v = a + (v - a) * scale;
  for (int i = 0; i < k; ++i) nt[nt.size() - 1 - i] = b;

  out.spline = BSpline(k, std::move(nt), std::move(nc));
  out.new_index = m_new - 1;
  return out;
}

LoopClosure close_loop(const BSpline& spline, const ClosureOptions& options) {
  if (spline.closed()) throw Error(ErrorKind::kInvalidState, "spline is already closed");
  const int k = spline.order();
  const auto& c = spline.control_points();
  const int n_old = spline.size();

  const Point start = evaluate(spline, spline.domain_begin());
  const Point end = evaluate(spline, spline.domain_end());
  const double gap = (end - start).norm();
  if (gap > options.max_gap) {
    std::ostringstream msg;
    msg << "endpoint gap " << gap << " m exceeds closure distance " << options.max_gap << " m";
    throw Error(ErrorKind::kClosureRejected, msg.str());
  }

  // Unique points as rows of a selection/merge matrix over the old points.
  Eigen::MatrixXd select;
  const bool merge = (c.back() - c.front()).norm() <= options.merge_radius;
  const int m = merge ? n_old - 1 : n_old;
  if (m < k) throw Error(ErrorKind::kInvalidConfiguration, "too few control points to close");
  select = Eigen::MatrixXd::Zero(m, n_old);
  for (int j = 0; j < m; ++j) select(j, j) = 1.0;
  if (merge) {
    select(0, 0) = 0.5;
    select(0, n_old - 1) = 0.5;
  }

  // Rotate so the seam parameter lands near the old start point.
  const int shift = (k - 1) / 2;
  Eigen::MatrixXd rotate = Eigen::MatrixXd::Zero(m, m);
  for (int j = 0; j < m; ++j) rotate(j, ((j - shift) % m + m) % m) = 1.0;
  Eigen::MatrixXd transform = rotate * select;

  std::vector<Point> unique(m);
  for (int j = 0; j < m; ++j) {
    Point q = Point::Zero();
    for (int i = 0; i < n_old; ++i) q += transform(j, i) * c[i];
    unique[j] = q;
  }

  // Span i is governed mostly by the polygon edge in the middle of its window.
  std::vector<double> spans(m);
  const int mid = k / 2;
  for (int i = 0; i < m; ++i) {
    spans[i] = (unique[(i + mid) % m] - unique[(i + mid - 1) % m]).norm();
  }
  const double total = std::accumulate(spans.begin(), spans.end(), 0.0);
  for (double& s : spans) s = total > 0.0 ? std::max(s / total, 1e-6) : 1.0 / m;
  const double renorm = std::accumulate(spans.begin(), spans.end(), 0.0);
  for (double& s : spans) s /= renorm;

  const int n_exp = m + k - 1;
  KnotVector knots(n_exp + k);
  // knots[k-1+i] for i = 0..m is the cumulative span length.
  knots[k - 1] = 0.0;
  for (int i = 0; i < m; ++i) knots[k + i] = knots[k - 1 + i] + spans[i];
  knots[k - 1 + m] = 1.0;
  for (int j = k - 2; j >= 0; --j) knots[j] = knots[j + m] - 1.0;
  for (int j = k + m; j < n_exp + k; ++j) knots[j] = knots[j - m] + 1.0;

  std::vector<Point> expanded(n_exp);
  for (int j = 0; j < n_exp; ++j) expanded[j] = unique[j % m];

  return {BSpline(k, std::move(knots), std::move(expanded), true), std::move(transform)};
}

double arc_length(const BSpline& spline, int gauss_points) {
  // Gauss-Legendre nodes/weights on [-1, 1].
  static const std::vector<std::vector<std::pair<double, double>>> rules = {
      {},
      {{0.0, 2.0}},
      {{-0.5773502691896257, 1.0}, {0.5773502691896257, 1.0}},
      {{-0.7745966692414834, 0.5555555555555556}, {0.0, 0.8888888888888888},
       {0.7745966692414834, 0.5555555555555556}},
      {{-0.8611363115940526, 0.3478548451374538}, {-0.3399810435848563, 0.6521451548625461},
       {0.3399810435848563, 0.6521451548625461}, {0.8611363115940526, 0.3478548451374538}},
      {{-0.9061798459386640, 0.2369268850561891}, {-0.5384693101056831, 0.4786286704993665},
       {0.0, 0.5688888888888889}, {0.5384693101056831, 0.4786286704993665},
       {0.9061798459386640, 0.2369268850561891}},
  };
  std::vector<std::pair<double, double>> rule;
  if (gauss_points >= 1 && gauss_points <= 5) {
    rule = rules[gauss_points];
  } else {
    // Higher orders: composite of the 5-point rule on sub-intervals.
    const int parts = (gauss_points + 4) / 5;
    for (int s = 0; s < parts; ++s) {
      for (auto [x, w] : rules[5]) {
        rule.emplace_back(-1.0 + (2.0 * s + 1.0 + x) / parts, w / parts);
      }
    }
  }

  const BSpline d = derivative_spline(spline);
  const auto& t = spline.knots();
  double total = 0.0;
  for (int i = spline.order() - 1; i < spline.size(); ++i) {
    const double a = t[i], b = t[i + 1];
    if (b <= a) continue;
    const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
    for (auto [x, w] : rule) total += w * half * evaluate(d, mid + half * x).norm();
  }
  return total;
}

Interpolation interpolate_clamped(std::span<const Point> points, int order) {
  check_order(order);
  const int count = static_cast<int>(points.size());
  if (count < order) {
    throw Error(ErrorKind::kInvalidArgument, "interpolation needs at least `order` points");
  }
  std::vector<double> params(count, 0.0);
  for (int i = 1; i < count; ++i) {
    const double chord = (points[i] - points[i - 1]).norm();
    if (chord < 1e-9) throw Error(ErrorKind::kInvalidArgument, "duplicate interpolation points");
    params[i] = params[i - 1] + chord;
  }
  for (double& v : params) v /= params.back();

  const int p = order - 1;
  KnotVector knots(count + order, 0.0);
  for (int i = 0; i < order; ++i) knots[count + i] = 1.0;
  for (int j = 1; j < count - p; ++j) {
    double sum = 0.0;
    for (int i = j; i < j + p; ++i) sum += params[i];
    knots[j + p] = sum / p;
  }

  const Eigen::MatrixXd colloc = collocation_matrix(knots, order, params, count);
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(colloc);
  Eigen::MatrixXd weights = lu.inverse();

  std::vector<Point> ctrl(count, Point::Zero());
  for (int j = 0; j < count; ++j)
    for (int i = 0; i < count; ++i) ctrl[j] += weights(j, i) * points[i];
  return {BSpline(order, std::move(knots), std::move(ctrl)), std::move(weights)};
}

Eigen::MatrixXd collocation_matrix(const KnotVector& knots, int order,
                                   std::span<const double> params, int columns) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(params.size()), columns);
  std::array<double, kMaxOrder> w{};
  for (std::size_t r = 0; r < params.size(); ++r) {
    const Span span = find_span(knots, order, params[r]);
    basis_into(knots, order, span, w.data());
    const int start = span.index - (order - 1);
    for (int j = 0; j < order; ++j) out(static_cast<Eigen::Index>(r), (start + j) % columns) += w[j];
  }
  return out;
}

double max_deviation(const BSpline& from, const BSpline& to, int samples) {
  double worst = 0.0;
  const double a = from.domain_begin(), b = from.domain_end();
  for (int i = 0; i <= samples; ++i) {
    const Point p = evaluate(from, a + (b - a) * i / samples);
    worst = std::max(worst, project(to, p).distance);
  }
  return worst;
}

}  // namespace pathspace::spline
