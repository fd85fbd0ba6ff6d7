#pragma once

// PathSpace backend: one joint Gaussian over the agent pose and the control
// points of every labelled boundary spline. Readings either grow a spline at
// its free end or are fitted into a measurement spline that updates the
// control points it touches; simplification and loop closure rewrite a
// spline together with its covariance rows.

#include "pathspace/spline.hpp"
#include "pathspace/state.hpp"
#include "pathspace/uncertainty.hpp"

#include <Eigen/Core>

#include <map>
#include <span>
#include <string>
#include <vector>

namespace pathspace::slam {

struct ClassifierParams {
  double growth_threshold = 2.0;        // m, distance past S(1) before growing
  double separation_threshold = 1.5;    // m, distance kept from C_{n-1}
  double endpoint_u_tolerance = 1e-3;   // how close to u = 1 counts as "at the end"
  double max_update_distance = 3.0;     // m, readings farther from the spline are deferred

  void validate() const;
};

// How a fitted measurement spline observes the state.
enum class ObservationModel {
  // Fitted control values observe the affected control points with an
  // identity model and the cubature covariance of the fit.
  kDirect,
  // Same fitted values, but the observation carries the sensitivity of the
  // regularised fit to the control points, so the prior term of the fit is
  // not counted as new information.
  kFitSensitivity,
};

struct SplineMeasurement {
  Label label;
  std::vector<int> affected_indices;   // unique control indices, cyclically contiguous
  Eigen::VectorXd control_values;      // stacked (x, y) per affected index
  Eigen::MatrixXd covariance;
  // Observation of the stacked affected coordinates; empty means identity.
  Eigen::MatrixXd observation;
  // d(measurement)/d(pose) of the world-frame readings; empty means none.
  Eigen::MatrixXd pose_jacobian;
  // Solve the innovation system by pseudo-inverse on its numerical range.
  bool allow_rank_deficient = false;
};

struct PendingPoint {
  Vec2 position = Vec2::Zero();
  int count = 0;
};

class JointBelief {
 public:
  static JointBelief initial(const AgentPose& pose, const Eigen::Matrix3d& pose_covariance,
                             std::vector<Label> labels);

  AgentPose pose;
  std::map<Label, spline::BSpline> splines;
  // [pose(3) | spline blocks in label order], each block 2 * unique control points.
  Eigen::MatrixXd covariance;
  std::vector<Label> labels;
  // Readings of labels that do not have a spline yet, clustered in world frame.
  std::map<Label, std::vector<PendingPoint>> pending;
  long frame = 0;

  bool accepts(const Label& label) const;
  Eigen::Index dimension() const;
  Eigen::Index offset(const Label& label) const;
  Eigen::Index block_size(const Label& label) const;
  int map_size() const;

  Eigen::VectorXd mean() const;
  void set_mean(const Eigen::VectorXd& mean);
  uncertainty::GaussianBelief spline_belief(const Label& label) const;
};

JointBelief predict(const JointBelief& belief, const Odometry& odometry, const Eigen::Matrix3d& odometry_noise);

struct WorldReading {
  std::size_t detection_index = 0;
  Vec2 world = Vec2::Zero();
  Eigen::Matrix2d covariance = Eigen::Matrix2d::Zero();  // world frame
  spline::Projection projection;
};

struct LabelReadings {
  std::vector<WorldReading> update;
  std::vector<WorldReading> expansion;
  // Not close enough to the spline to update it, not at the end to grow it.
  std::vector<WorldReading> deferred;
};

struct Classification {
  std::map<Label, LabelReadings> mapped;
  // Accepted labels that have no spline yet.
  std::map<Label, std::vector<WorldReading>> unmapped;
  std::vector<std::size_t> rejected;
};

Classification classify_detections(const JointBelief& belief, std::span<const Detection> detections,
                                   const ClassifierParams& params);

// Greedy nearest-neighbour chain starting from `endpoint`; returns indices into
// `points`. The last entry is the extension point.
std::vector<std::size_t> order_expansion_chain(std::span<const Vec2> points, const Vec2& endpoint);

JointBelief extend_belief(const JointBelief& belief, const Label& label, const Vec2& extension_point,
                          const Eigen::Matrix2d& sensor_covariance_world);

// Starts a spline for `label` by clamped interpolation through `points`
// (already in chain order).
JointBelief add_spline(const JointBelief& belief, const Label& label, std::span<const Vec2> points,
                       std::span<const Eigen::Matrix2d> covariances, int order = 4);

// Each reading is placed on the spline by its own orthogonal projection, so
// it says nothing about position along the tangent there. `tangential_std`
// (m) is added along that tangent to every reading's covariance; zero keeps
// the sensor covariance as given.
SplineMeasurement fit_measurement_spline(const JointBelief& belief, const Label& label,
                                         std::span<const Vec2> update_points,
                                         std::span<const Eigen::Matrix2d> sensor_covariances, double lambda,
                                         ObservationModel model = ObservationModel::kDirect,
                                         bool pose_coupling = false, double tangential_std = 0.0);

JointBelief kalman_update(const JointBelief& belief, const SplineMeasurement& measurement);

JointBelief simplify(const JointBelief& belief, const Label& label, int budget, double baseline_weight,
                     int samples_per_control = 20);

// Knot parameters chosen by the curvature-weighted allocation (exposed for
// inspection and tests). Open splines: `budget - order` interior knots.
// Closed splines: `budget` span starts, the first at the domain start.
std::vector<double> allocate_knots(const spline::BSpline& spline, int budget, double baseline_weight,
                                   int samples_per_control = 20);

struct LoopClosureParams {
  double min_path_length = 150.0;        // m
  double closure_radius = 3.0;           // m, max reading distance for an early-segment match
  double early_segment_fraction = 0.1;   // of the parameter domain
};

bool check_loop_closure(const JointBelief& belief, const Label& label,
                        std::span<const spline::Projection> latest_projections, const LoopClosureParams& params);

JointBelief close_loop(const JointBelief& belief, const Label& label, const spline::ClosureOptions& options);

struct PathspaceConfig {
  std::vector<Label> labels{"blue", "yellow"};
  int order = 4;
  ClassifierParams classifier;
  double lambda = 1.0;
  double tangential_std = 10.0;  // m, see fit_measurement_spline
  ObservationModel observation = ObservationModel::kFitSensitivity;
  bool pose_coupling = true;
  double baseline_weight = 0.2;
  LoopClosureParams loop;
  spline::ClosureOptions closure;
  int simplify_every = 100;           // frames, while a spline is open; 0 disables
  double simplify_spacing = 6.5;      // m of boundary per control point in the budget
  int samples_per_control = 20;
  double bootstrap_merge_radius = 1.0;  // m
  Eigen::Matrix3d odometry_noise = Eigen::Matrix3d::Zero();
};

// Budget used by the pipeline: ceil(arc length / spacing), at least order + 1
// and never more than the current control-point count.
int simplification_budget(const spline::BSpline& spline, const PathspaceConfig& config);

struct FrameReport {
  int kalman_updates = 0;
  int extensions = 0;
  std::vector<Label> bootstrapped;
  std::vector<Label> closed;
  std::vector<Label> simplified;
  std::size_t rejected = 0;
};

JointBelief process_frame(const JointBelief& belief, std::span<const Detection> detections,
                          const Odometry& odometry, const PathspaceConfig& config, FrameReport* report = nullptr);

}  // namespace pathspace::slam
