#include "pathspace/serialize.hpp"

#include "pathspace/error.hpp"

#include <fstream>
#include <numbers>

namespace pathspace::io {
namespace {

json point(const Vec2& p) { return json::array({p.x(), p.y()}); }

Vec2 point_from(const json& j) {
  if (!j.is_array() || j.size() != 2) throw Error(ErrorKind::kIo, "expected a [x, y] pair");
  return {j[0].get<double>(), j[1].get<double>()};
}

template <typename T>
T field(const json& j, const char* key) {
  if (!j.contains(key)) throw Error(ErrorKind::kIo, std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kIo, std::string("bad field '") + key + "': " + e.what());
  }
}

}  // namespace

json lower_triangle(const Eigen::MatrixXd& symmetric) {
  json out = json::array();
  for (Eigen::Index i = 0; i < symmetric.rows(); ++i)
    for (Eigen::Index j = 0; j <= i; ++j) out.push_back(symmetric(i, j));
  return out;
}

Eigen::MatrixXd from_lower_triangle(const json& values, Eigen::Index dimension) {
  if (!values.is_array() || static_cast<Eigen::Index>(values.size()) != dimension * (dimension + 1) / 2) {
    throw Error(ErrorKind::kIo, "covariance triangle has the wrong length");
  }
  Eigen::MatrixXd m(dimension, dimension);
  std::size_t k = 0;
  for (Eigen::Index i = 0; i < dimension; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      m(i, j) = values[k++].get<double>();
      m(j, i) = m(i, j);
    }
  }
  return m;
}

json to_json(const AgentPose& pose) { return {{"x", pose.x}, {"y", pose.y}, {"heading", pose.heading}}; }

AgentPose pose_from_json(const json& j) {
  return {field<double>(j, "x"), field<double>(j, "y"), field<double>(j, "heading")};
}

json to_json(const spline::BSpline& s) {
  json cps = json::array();
  for (const Vec2& p : s.unique_control_points()) cps.push_back(point(p));
  return {{"order", s.order()}, {"closed", s.closed()}, {"knots", s.knots()}, {"control_points", cps}};
}

spline::BSpline spline_from_json(const json& j) {
  const int order = field<int>(j, "order");
  const bool closed = field<bool>(j, "closed");
  auto knots = field<spline::KnotVector>(j, "knots");
  std::vector<Vec2> unique;
  for (const auto& p : field<json>(j, "control_points")) unique.push_back(point_from(p));
  std::vector<Vec2> expanded = unique;
  if (closed) {
    for (int i = 0; i < order - 1; ++i) expanded.push_back(unique.at(i % unique.size()));
  }
  return spline::BSpline(order, std::move(knots), std::move(expanded), closed);
}

json to_json(const slam::JointBelief& belief) {
  json splines = json::array();
  for (const auto& [label, s] : belief.splines) {
    json entry = to_json(s);
    entry["label"] = label;
    entry["offset"] = belief.offset(label);
    splines.push_back(entry);
  }
  return {{"kind", "pathspace"},  {"frame", belief.frame},       {"labels", belief.labels},
          {"pose", to_json(belief.pose)}, {"splines", splines},
          {"dimension", belief.dimension()}, {"covariance", lower_triangle(belief.covariance)}};
}

slam::JointBelief belief_from_json(const json& j) {
  if (field<std::string>(j, "kind") != "pathspace") throw Error(ErrorKind::kIo, "not a pathspace snapshot");
  slam::JointBelief b;
  b.pose = pose_from_json(field<json>(j, "pose"));
  b.labels = field<std::vector<Label>>(j, "labels");
  b.frame = field<long>(j, "frame");
  for (const auto& entry : field<json>(j, "splines")) b.splines[field<Label>(entry, "label")] = spline_from_json(entry);
  const auto dim = field<Eigen::Index>(j, "dimension");
  if (dim != b.dimension()) throw Error(ErrorKind::kIo, "snapshot dimension does not match its splines");
  b.covariance = from_lower_triangle(field<json>(j, "covariance"), dim);
  return b;
}

json to_json(const ckf::LandmarkMap& map) {
  json lms = json::array();
  for (const auto& lm : map.landmarks) lms.push_back({{"label", lm.label}, {"position", point(lm.position)}});
  return {{"kind", "landmarks"}, {"pose", to_json(map.pose)}, {"landmarks", lms},
          {"dimension", map.dimension()}, {"covariance", lower_triangle(map.covariance)}};
}

ckf::LandmarkMap landmark_map_from_json(const json& j) {
  if (field<std::string>(j, "kind") != "landmarks") throw Error(ErrorKind::kIo, "not a landmark snapshot");
  ckf::LandmarkMap m;
  m.pose = pose_from_json(field<json>(j, "pose"));
  for (const auto& lm : field<json>(j, "landmarks")) {
    m.landmarks.push_back({point_from(field<json>(lm, "position")), field<Label>(lm, "label")});
  }
  const auto dim = field<Eigen::Index>(j, "dimension");
  if (dim != m.dimension()) throw Error(ErrorKind::kIo, "snapshot dimension does not match its landmarks");
  m.covariance = from_lower_triangle(field<json>(j, "covariance"), dim);
  return m;
}

json to_json(const sim::TrackSpec& spec) {
  json elements = json::array();
  for (const auto& e : spec.elements) {
    if (e.kind == sim::TrackElement::Kind::kStraight) {
      elements.push_back({{"type", "straight"}, {"length", e.length}});
    } else {
      elements.push_back({{"type", "arc"}, {"radius", e.radius}, {"angle_rad", e.angle}});
    }
  }
  return {{"track_width", spec.track_width}, {"cone_spacing", spec.cone_spacing},
          {"cone_jitter", spec.cone_jitter}, {"resolution", spec.resolution},
          {"seed", spec.seed}, {"elements", elements}};
}

sim::TrackSpec track_spec_from_json(const json& j) {
  sim::TrackSpec spec = sim::TrackSpec::default_spec();
  if (!j.is_object()) throw Error(ErrorKind::kInvalidConfiguration, "track spec must be an object");
  for (const auto& [key, value] : j.items()) {
    if (key == "track_width") spec.track_width = value.get<double>();
    else if (key == "cone_spacing") spec.cone_spacing = value.get<double>();
    else if (key == "cone_jitter") spec.cone_jitter = value.get<double>();
    else if (key == "resolution") spec.resolution = value.get<double>();
    else if (key == "seed") spec.seed = value.get<std::uint64_t>();
    else if (key == "elements") {
      spec.elements.clear();
      for (const auto& e : value) {
        const auto type = field<std::string>(e, "type");
        if (type == "straight") {
          spec.elements.push_back(sim::TrackElement::straight(field<double>(e, "length")));
        } else if (type == "arc") {
          const double angle = e.contains("angle_rad") ? field<double>(e, "angle_rad")
                                                       : field<double>(e, "angle_deg") * std::numbers::pi / 180.0;
          spec.elements.push_back(sim::TrackElement::arc(field<double>(e, "radius"), angle));
        } else {
          throw Error(ErrorKind::kInvalidConfiguration, "unknown track element type '" + type + "'");
        }
      }
    } else {
      throw Error(ErrorKind::kInvalidConfiguration, "unknown track field '" + key + "'");
    }
  }
  spec.validate();
  return spec;
}

json to_json(const sim::TrackGroundTruth& truth) {
  json centerline = json::array();
  for (const Vec2& p : truth.centerline) centerline.push_back(point(p));
  json cones = json::object();
  for (const auto& [label, list] : truth.cones) {
    json pts = json::array();
    for (const Vec2& p : list) pts.push_back(point(p));
    cones[label] = pts;
  }
  return {{"lap_length", truth.lap_length}, {"track_width", truth.track_width}, {"centerline", centerline},
          {"stations", truth.stations}, {"cones", cones}};
}

sim::TrackGroundTruth track_from_json(const json& j) {
  sim::TrackGroundTruth t;
  t.lap_length = field<double>(j, "lap_length");
  t.track_width = field<double>(j, "track_width");
  for (const auto& p : field<json>(j, "centerline")) t.centerline.push_back(point_from(p));
  t.stations = field<std::vector<double>>(j, "stations");
  if (t.stations.size() != t.centerline.size() || t.centerline.size() < 2) {
    throw Error(ErrorKind::kIo, "centerline and stations disagree");
  }
  const json cones = field<json>(j, "cones");
  for (const auto& [label, pts] : cones.items()) {
    auto& list = t.cones[label];
    for (const auto& p : pts) list.push_back(point_from(p));
  }
  return t;
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::kIo, path.string() + ": " + e.what());
  }
}

void write_json(const std::filesystem::path& path, const json& value) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  out << value.dump(2) << '\n';
  if (!out) throw Error(ErrorKind::kIo, "write failed for " + path.string());
}

}  // namespace pathspace::io
