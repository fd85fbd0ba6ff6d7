#include "pathspace/simworld.hpp"

#include "pathspace/error.hpp"
#include "pathspace/uncertainty.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace pathspace::sim {
namespace {

struct Frame {
  Vec2 position = Vec2::Zero();
  double heading = 0.0;
};

Vec2 direction(double heading) { return {std::cos(heading), std::sin(heading)}; }

// Frame after travelling `s` metres into `e`, starting from `f`.
Frame advance(const Frame& f, const TrackElement& e, double s) {
  if (e.kind == TrackElement::Kind::kStraight) return {f.position + s * direction(f.heading), f.heading};
  const double side = e.angle > 0 ? 1.0 : -1.0;
  const Vec2 normal = side * direction(f.heading + std::numbers::pi / 2);
  const Vec2 center = f.position + e.radius * normal;
  const double turned = side * s / e.radius;
  const Vec2 offset = f.position - center;
  const Eigen::Matrix2d rot = rotation(turned);
  return {center + rot * offset, f.heading + turned};
}

}  // namespace

double TrackElement::arc_length() const {
  return kind == Kind::kStraight ? length : radius * std::abs(angle);
}

TrackSpec TrackSpec::default_spec() {
  using E = TrackElement;
  constexpr double q = std::numbers::pi / 2;
  constexpr double deg30 = std::numbers::pi / 6;
  TrackSpec spec;
  spec.elements = {
      E::straight(102.0), E::arc(15.0, q),        E::straight(35.0),
      E::arc(10.0, -deg30), E::arc(10.0, 2 * deg30), E::arc(10.0, -deg30),  // chicane
      E::straight(20.0),  E::arc(12.0, q),        E::straight(45.0),
      E::arc(7.5, 2 * q), E::straight(20.0),      E::arc(7.5, -2 * q),      // hairpins
      E::straight(80.0),  E::arc(15.0, q),        E::straight(42.0),
      E::arc(15.0, q),
  };
  return spec;
}

TrackSpec TrackSpec::circle(double radius) {
  TrackSpec spec;
  spec.elements = {TrackElement::arc(radius, 2 * std::numbers::pi)};
  return spec;
}

void TrackSpec::validate() const {
  if (!(track_width > 0 && cone_spacing > 0 && resolution > 0 && cone_jitter >= 0)) {
    throw Error(ErrorKind::kInvalidConfiguration, "track width, cone spacing and resolution must be positive");
  }
  if (elements.empty()) throw Error(ErrorKind::kInvalidConfiguration, "track has no elements");
  for (const auto& e : elements) {
    if (e.kind == TrackElement::Kind::kStraight && !(e.length > 0)) {
      throw Error(ErrorKind::kInvalidConfiguration, "straight with non-positive length");
    }
    if (e.kind == TrackElement::Kind::kArc && !(e.radius > track_width / 2 && e.angle != 0.0)) {
      throw Error(ErrorKind::kInvalidConfiguration, "arc radius must exceed half the track width");
    }
  }
}

std::size_t TrackGroundTruth::cone_count() const {
  std::size_t n = 0;
  for (const auto& [label, list] : cones) n += list.size();
  return n;
}

double TrackGroundTruth::station_of(const Vec2& point) const {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < centerline.size(); ++i) {
    const double d = (centerline[i] - point).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return stations[best];
}

Vec2 TrackGroundTruth::at_station(double s) const {
  s = std::fmod(s, lap_length);
  if (s < 0) s += lap_length;
  auto it = std::upper_bound(stations.begin(), stations.end(), s);
  const std::size_t hi = static_cast<std::size_t>(it - stations.begin());
  const std::size_t lo = hi - 1;
  const Vec2& a = centerline[lo];
  const Vec2& b = hi < centerline.size() ? centerline[hi] : centerline.front();
  const double s_hi = hi < stations.size() ? stations[hi] : lap_length;
  const double t = (s - stations[lo]) / (s_hi - stations[lo]);
  return a + t * (b - a);
}

TrackGroundTruth generate_track(const TrackSpec& spec) {
  spec.validate();
  TrackGroundTruth truth;
  truth.track_width = spec.track_width;

  std::vector<Frame> starts;
  Frame f;
  double total = 0.0;
  for (const auto& e : spec.elements) {
    starts.push_back(f);
    f = advance(f, e, e.arc_length());
    total += e.arc_length();
  }
  const double gap = f.position.norm();
  const double heading_gap = std::abs(normalize_angle(f.heading));
  if (gap > 1e-6 || heading_gap > 1e-6) {
    std::ostringstream msg;
    msg << "track does not close: position gap " << gap << " m, heading gap " << heading_gap << " rad";
    throw Error(ErrorKind::kGeneration, msg.str());
  }
  truth.lap_length = total;

  auto frame_at = [&](double s) {
    std::size_t i = 0;
    while (i + 1 < spec.elements.size() && s > spec.elements[i].arc_length()) {
      s -= spec.elements[i].arc_length();
      ++i;
    }
    return advance(starts[i], spec.elements[i], std::min(s, spec.elements[i].arc_length()));
  };

  const int samples = std::max(8, static_cast<int>(std::ceil(total / spec.resolution)));
  for (int i = 0; i < samples; ++i) {
    const double s = total * i / samples;
    truth.centerline.push_back(frame_at(s).position);
    truth.stations.push_back(s);
  }

  Rng rng(spec.seed);
  std::normal_distribution<double> jitter(0.0, 1.0);
  const long per_side = std::max(1L, std::lround(total / spec.cone_spacing));
  auto& left = truth.cones[kLeftLabel];
  auto& right = truth.cones[kRightLabel];
  for (long i = 0; i < per_side; ++i) {
    const Frame c = frame_at(total * static_cast<double>(i) / static_cast<double>(per_side));
    const Vec2 normal = direction(c.heading + std::numbers::pi / 2);
    const double jl = spec.cone_jitter > 0 ? spec.cone_jitter * jitter(rng) : 0.0;
    const double jr = spec.cone_jitter > 0 ? spec.cone_jitter * jitter(rng) : 0.0;
    left.push_back(c.position + (spec.track_width / 2 + jl) * normal);
    right.push_back(c.position - (spec.track_width / 2 + jr) * normal);
  }
  return truth;
}

void SensorModel::validate() const {
  if (!(max_range > 0 && field_of_view > 0 && position_noise_std >= 0 && detection_probability >= 0 &&
        detection_probability <= 1)) {
    throw Error(ErrorKind::kInvalidConfiguration, "sensor parameters out of range");
  }
}

std::vector<Detection> sense(const AgentPose& pose, const TrackGroundTruth& truth, const SensorModel& model,
                             Rng& rng) {
  model.validate();
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 1.0);
  const double var = model.position_noise_std * model.position_noise_std;
  std::vector<Detection> out;
  for (const auto& [label, cones] : truth.cones) {
    for (const Vec2& cone : cones) {
      const Vec2 local = to_agent(pose, cone);
      if (local.norm() > model.max_range) continue;
      if (std::abs(std::atan2(local.y(), local.x())) > model.field_of_view / 2) continue;
      if (coin(rng) >= model.detection_probability) continue;
      Detection d;
      d.label = label;
      d.position = local;
      if (model.position_noise_std > 0) {
        d.position.x() += model.position_noise_std * noise(rng);
        d.position.y() += model.position_noise_std * noise(rng);
      }
      d.covariance = var * Eigen::Matrix2d::Identity();
      out.push_back(d);
    }
  }
  return out;
}

void Driver::observe(const AgentPose& pose, const TrackGroundTruth& truth) {
  const double s = truth.station_of(pose.position());
  if (!started_) {
    started_ = true;
    station_ = s;
    progress_ = 0.0;
    return;
  }
  double delta = s - station_;
  if (delta > truth.lap_length / 2) delta -= truth.lap_length;
  if (delta < -truth.lap_length / 2) delta += truth.lap_length;
  progress_ += delta;
  station_ = s;
}

double Driver::steer(const AgentPose& pose, const TrackGroundTruth& truth) const {
  const Vec2 target = to_agent(pose, truth.at_station(station_ + lookahead_));
  const double d2 = target.squaredNorm();
  return d2 > 0 ? 2.0 * target.y() / d2 : 0.0;
}

DriveStep drive_step(const AgentPose& pose, const TrackGroundTruth& truth, Driver& driver, double speed, double dt,
                     const Eigen::Matrix3d& odometry_noise, Rng& rng) {
  if (!(dt > 0)) throw Error(ErrorKind::kInvalidArgument, "dt must be positive");
  driver.observe(pose, truth);
  DriveStep out;
  const double distance = speed * dt;
  if (distance != 0.0) {
    const double kappa = driver.steer(pose, truth);
    const double turn = kappa * distance;
    if (std::abs(kappa) < 1e-9) {
      out.true_motion = {distance, 0.0, turn};
    } else {
      out.true_motion = {std::sin(turn) / kappa, (1.0 - std::cos(turn)) / kappa, turn};
    }
  }
  out.pose = compose(pose, out.true_motion);

  std::normal_distribution<double> normal(0.0, 1.0);
  const Eigen::Vector3d draw(normal(rng), normal(rng), normal(rng));
  const Eigen::Vector3d jitter = uncertainty::covariance_sqrt(odometry_noise) * draw;
  out.odometry = {out.true_motion.forward + jitter(0), out.true_motion.lateral + jitter(1),
                  out.true_motion.heading + jitter(2)};
  driver.observe(out.pose, truth);
  return out;
}

AgentPose start_pose(const TrackGroundTruth& truth) {
  const Vec2 a = truth.centerline.front();
  const Vec2 b = truth.centerline[1];
  return {a.x(), a.y(), std::atan2(b.y() - a.y(), b.x() - a.x())};
}

}  // namespace pathspace::sim
