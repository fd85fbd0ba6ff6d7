#include "pathspace/harness.hpp"

#include "pathspace/error.hpp"
#include "pathspace/serialize.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>

namespace pathspace::harness {
namespace {

using nlohmann::json;

constexpr double kDeg = std::numbers::pi / 180.0;

// Reads known keys of one JSON object and rejects the rest.
class Section {
 public:
  Section(const json& j, std::string name) : j_(j), name_(std::move(name)) {
    if (!j_.is_object()) throw Error(ErrorKind::kInvalidConfiguration, "'" + name_ + "' must be an object");
  }

  template <typename T>
  void get(const char* key, T& target) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      target = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw Error(ErrorKind::kInvalidConfiguration, name_ + "." + key + ": " + e.what());
    }
  }

  void get_vector3(const char* key, Eigen::Vector3d& target) {
    std::vector<double> v{target(0), target(1), target(2)};
    get(key, v);
    if (v.size() != 3) throw Error(ErrorKind::kInvalidConfiguration, name_ + "." + key + " needs 3 values");
    target = {v[0], v[1], v[2]};
  }

  const json* child(const char* key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.contains(key)) throw Error(ErrorKind::kInvalidConfiguration, "unknown key '" + name_ + "." + key + "'");
    }
  }

 private:
  const json& j_;
  std::string name_;
  std::set<std::string, std::less<>> seen_;
};

std::string backend_name(BackendSelection b) {
  switch (b) {
    case BackendSelection::kPathspace: return "pathspace";
    case BackendSelection::kCkf: return "ckf";
    case BackendSelection::kBoth: return "both";
  }
  return "both";
}

BackendSelection parse_backend(const std::string& s) {
  if (s == "pathspace") return BackendSelection::kPathspace;
  if (s == "ckf") return BackendSelection::kCkf;
  if (s == "both") return BackendSelection::kBoth;
  throw Error(ErrorKind::kInvalidConfiguration, "backend must be pathspace, ckf or both");
}

std::string number(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double ms_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorKind::kIo, "write failed for " + path.string());
}

}  // namespace

Eigen::Matrix3d ExperimentConfig::odometry_covariance() const {
  return odometry_std.cwiseProduct(odometry_std).asDiagonal();
}

Eigen::Matrix3d ExperimentConfig::initial_pose_covariance() const {
  return initial_pose_std.cwiseProduct(initial_pose_std).asDiagonal();
}

void ExperimentConfig::validate() const {
  if (schema_version != kSchemaVersion) {
    throw Error(ErrorKind::kInvalidConfiguration,
                "unsupported schema_version " + std::to_string(schema_version));
  }
  if (laps < 1) throw Error(ErrorKind::kInvalidConfiguration, "laps must be >= 1");
  if (!(speed > 0 && dt > 0 && lookahead > 0)) {
    throw Error(ErrorKind::kInvalidConfiguration, "speed, dt and lookahead must be positive");
  }
  if ((odometry_std.array() < 0).any() || (initial_pose_std.array() < 0).any()) {
    throw Error(ErrorKind::kInvalidConfiguration, "noise std must be non-negative");
  }
  if (!(metrics.miss_threshold > 0 && metrics.ghost_radius > 0)) {
    throw Error(ErrorKind::kInvalidConfiguration, "metric radii must be positive");
  }
  track.validate();
  sensor.validate();
  pathspace.classifier.validate();
  ckf.validate();
  if (!(pathspace.lambda > 0)) throw Error(ErrorKind::kInvalidConfiguration, "lambda must be positive");
  if (!(pathspace.tangential_std >= 0)) {
    throw Error(ErrorKind::kInvalidConfiguration, "tangential_std must be non-negative");
  }
  if (!(pathspace.baseline_weight >= 0 && pathspace.baseline_weight <= 1)) {
    throw Error(ErrorKind::kInvalidConfiguration, "baseline_weight must lie in [0, 1]");
  }
  if (!(pathspace.simplify_spacing > 0) || pathspace.simplify_every < 0 || pathspace.samples_per_control < 2) {
    throw Error(ErrorKind::kInvalidConfiguration, "simplification parameters out of range");
  }
}

ExperimentConfig default_config() { return ExperimentConfig{}; }

json to_json(const ExperimentConfig& c) {
  const auto& p = c.pathspace;
  return {
      {"schema_version", c.schema_version},
      {"seed", c.seed},
      {"laps", c.laps},
      {"backends", backend_name(c.backends)},
      {"drive", {{"speed", c.speed}, {"dt", c.dt}, {"lookahead", c.lookahead}}},
      {"odometry_std", {c.odometry_std(0), c.odometry_std(1), c.odometry_std(2)}},
      {"initial_pose_std", {c.initial_pose_std(0), c.initial_pose_std(1), c.initial_pose_std(2)}},
      {"track", io::to_json(c.track)},
      {"sensor",
       {{"max_range", c.sensor.max_range},
        {"fov_deg", c.sensor.field_of_view / kDeg},
        {"noise_std", c.sensor.position_noise_std},
        {"detection_probability", c.sensor.detection_probability}}},
      {"pathspace",
       {{"labels", p.labels},
        {"lambda", p.lambda},
        {"tangential_std", p.tangential_std},
        {"observation", p.observation == slam::ObservationModel::kDirect ? "direct" : "fit_sensitivity"},
        {"pose_coupling", p.pose_coupling},
        {"growth_threshold", p.classifier.growth_threshold},
        {"separation_threshold", p.classifier.separation_threshold},
        {"max_update_distance", p.classifier.max_update_distance},
        {"baseline_weight", p.baseline_weight},
        {"simplify_every", p.simplify_every},
        {"simplify_spacing", p.simplify_spacing},
        {"samples_per_control", p.samples_per_control},
        {"min_path_length", p.loop.min_path_length},
        {"closure_radius", p.loop.closure_radius},
        {"early_segment_fraction", p.loop.early_segment_fraction},
        {"closure_merge_radius", p.closure.merge_radius},
        {"closure_max_gap", p.closure.max_gap},
        {"bootstrap_merge_radius", p.bootstrap_merge_radius}}},
      {"ckf", {{"labels", c.ckf.labels}, {"gate", c.ckf.gate}}},
      {"metrics", {{"miss_threshold", c.metrics.miss_threshold}, {"ghost_radius", c.metrics.ghost_radius}}},
  };
}

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c = default_config();
  Section root(j, "config");
  if (!j.contains("schema_version")) throw Error(ErrorKind::kInvalidConfiguration, "missing schema_version");
  root.get("schema_version", c.schema_version);
  if (c.schema_version != kSchemaVersion) {
    throw Error(ErrorKind::kInvalidConfiguration, "unsupported schema_version " + std::to_string(c.schema_version));
  }
  root.get("seed", c.seed);
  root.get("laps", c.laps);
  std::string backends = backend_name(c.backends);
  root.get("backends", backends);
  c.backends = parse_backend(backends);
  root.get_vector3("odometry_std", c.odometry_std);
  root.get_vector3("initial_pose_std", c.initial_pose_std);

  if (const json* d = root.child("drive")) {
    Section s(*d, "drive");
    s.get("speed", c.speed);
    s.get("dt", c.dt);
    s.get("lookahead", c.lookahead);
    s.finish();
  }
  if (const json* t = root.child("track")) c.track = io::track_spec_from_json(*t);
  if (const json* d = root.child("sensor")) {
    Section s(*d, "sensor");
    s.get("max_range", c.sensor.max_range);
    double fov = c.sensor.field_of_view / kDeg;
    s.get("fov_deg", fov);
    c.sensor.field_of_view = fov * kDeg;
    s.get("noise_std", c.sensor.position_noise_std);
    s.get("detection_probability", c.sensor.detection_probability);
    s.finish();
  }
  if (const json* d = root.child("pathspace")) {
    auto& p = c.pathspace;
    Section s(*d, "pathspace");
    s.get("labels", p.labels);
    s.get("lambda", p.lambda);
    s.get("tangential_std", p.tangential_std);
    std::string obs = p.observation == slam::ObservationModel::kDirect ? "direct" : "fit_sensitivity";
    s.get("observation", obs);
    if (obs == "direct") p.observation = slam::ObservationModel::kDirect;
    else if (obs == "fit_sensitivity") p.observation = slam::ObservationModel::kFitSensitivity;
    else throw Error(ErrorKind::kInvalidConfiguration, "observation must be direct or fit_sensitivity");
    s.get("pose_coupling", p.pose_coupling);
    s.get("growth_threshold", p.classifier.growth_threshold);
    s.get("separation_threshold", p.classifier.separation_threshold);
    s.get("max_update_distance", p.classifier.max_update_distance);
    s.get("baseline_weight", p.baseline_weight);
    s.get("simplify_every", p.simplify_every);
    s.get("simplify_spacing", p.simplify_spacing);
    s.get("samples_per_control", p.samples_per_control);
    s.get("min_path_length", p.loop.min_path_length);
    s.get("closure_radius", p.loop.closure_radius);
    s.get("early_segment_fraction", p.loop.early_segment_fraction);
    s.get("closure_merge_radius", p.closure.merge_radius);
    s.get("closure_max_gap", p.closure.max_gap);
    s.get("bootstrap_merge_radius", p.bootstrap_merge_radius);
    s.finish();
  }
  if (const json* d = root.child("ckf")) {
    Section s(*d, "ckf");
    s.get("labels", c.ckf.labels);
    s.get("gate", c.ckf.gate);
    s.finish();
  }
  if (const json* d = root.child("metrics")) {
    Section s(*d, "metrics");
    s.get("miss_threshold", c.metrics.miss_threshold);
    s.get("ghost_radius", c.metrics.ghost_radius);
    s.finish();
  }
  root.finish();
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) { return config_from_json(io::read_json(path)); }

void apply_environment(ExperimentConfig& config) {
  if (const char* seed = std::getenv("PATHSPACE_SEED"); seed && *seed) {
    std::uint64_t value = 0;
    const auto r = std::from_chars(seed, seed + std::strlen(seed), value);
    if (r.ec != std::errc() || *r.ptr != '\0') {
      throw Error(ErrorKind::kInvalidConfiguration, std::string("PATHSPACE_SEED is not an integer: ") + seed);
    }
    config.seed = value;
  }
}

std::filesystem::path output_directory(const std::filesystem::path& fallback) {
  if (const char* dir = std::getenv("PATHSPACE_OUT_DIR"); dir && *dir) return dir;
  return fallback;
}

void StreamHasher::bytes(const void* data, std::size_t size) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < size; ++i) {
    hash_ ^= p[i];
    hash_ *= 1099511628211ull;
  }
}

void StreamHasher::add(const StreamFrame& frame) {
  const double odo[3] = {frame.odometry.forward, frame.odometry.lateral, frame.odometry.heading};
  bytes(odo, sizeof odo);
  const std::uint64_t count = frame.detections.size();
  bytes(&count, sizeof count);
  for (const Detection& d : frame.detections) {
    const double v[6] = {d.position.x(), d.position.y(), d.covariance(0, 0), d.covariance(0, 1), d.covariance(1, 0),
                         d.covariance(1, 1)};
    bytes(v, sizeof v);
    bytes(d.label.data(), d.label.size());
  }
}

std::uint64_t stream_checksum(const std::vector<StreamFrame>& frames) {
  StreamHasher h;
  for (const auto& f : frames) h.add(f);
  return h.value();
}

Stream simulate_stream(const ExperimentConfig& config, const sim::TrackGroundTruth& truth) {
  config.validate();
  sim::Rng rng(config.seed);
  sim::Driver driver(config.lookahead);
  Stream stream;
  AgentPose pose = sim::start_pose(truth);
  stream.start = pose;
  const Eigen::Matrix3d odo_cov = config.odometry_covariance();
  const double step = config.speed * config.dt;
  const std::size_t cap =
      static_cast<std::size_t>(std::ceil(3.0 * config.laps * truth.lap_length / step)) + 10;

  while (stream.lap_ends.size() < static_cast<std::size_t>(config.laps)) {
    if (stream.frames.size() >= cap) throw Error(ErrorKind::kGeneration, "driver failed to complete the laps");
    const sim::DriveStep s = sim::drive_step(pose, truth, driver, config.speed, config.dt, odo_cov, rng);
    pose = s.pose;
    stream.frames.push_back({s.odometry, sim::sense(pose, truth, config.sensor, rng), pose});
    if (driver.progress() >= static_cast<double>(stream.lap_ends.size() + 1) * truth.lap_length) {
      stream.lap_ends.push_back(stream.frames.size() - 1);
    }
  }
  stream.checksum = stream_checksum(stream.frames);
  return stream;
}

Coverage coverage_from_distances(const std::vector<double>& distances, double threshold) {
  Coverage c;
  c.cones = distances.size();
  double sum = 0.0;
  for (double d : distances) {
    if (!(d <= threshold)) {
      ++c.missed;
    } else {
      sum += d * d;
    }
  }
  const std::size_t hit = c.cones - c.missed;
  c.rmse = hit > 0 ? std::sqrt(sum / static_cast<double>(hit)) : std::numeric_limits<double>::quiet_NaN();
  c.missed_fraction = c.cones > 0 ? static_cast<double>(c.missed) / static_cast<double>(c.cones) : 0.0;
  return c;
}

Coverage rmse_and_coverage(const slam::JointBelief& belief, const sim::TrackGroundTruth& truth, double threshold) {
  std::vector<double> distances;
  for (const auto& [label, cones] : truth.cones) {
    auto it = belief.splines.find(label);
    for (const Vec2& cone : cones) {
      distances.push_back(it == belief.splines.end() ? std::numeric_limits<double>::infinity()
                                                     : spline::project(it->second, cone).distance);
    }
  }
  return coverage_from_distances(distances, threshold);
}

Coverage rmse_and_coverage(const ckf::LandmarkMap& map, const sim::TrackGroundTruth& truth, double threshold) {
  std::vector<double> distances;
  for (const auto& [label, cones] : truth.cones) {
    for (const Vec2& cone : cones) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& lm : map.landmarks)
        if (lm.label == label) best = std::min(best, (lm.position - cone).norm());
      distances.push_back(best);
    }
  }
  return coverage_from_distances(distances, threshold);
}

int count_ghosts(const ckf::LandmarkMap& map, const sim::TrackGroundTruth& truth, double radius) {
  int ghosts = 0;
  for (const auto& [label, cones] : truth.cones) {
    for (const Vec2& cone : cones) {
      int near = 0;
      for (const auto& lm : map.landmarks)
        if (lm.label == label && (lm.position - cone).norm() <= radius) ++near;
      ghosts += std::max(0, near - 1);
    }
  }
  return ghosts;
}

namespace {

template <typename Belief, typename Step, typename Measure>
void replay(const std::string& name, const Stream& stream, Belief belief, Step step, Measure measure,
            ComparisonResult& result, std::optional<Belief>& final_state) {
  StreamHasher hasher;
  std::size_t lap = 0;
  double time_ms = 0.0;
  std::size_t frames_in_lap = 0;
  for (std::size_t i = 0; i < stream.frames.size() && lap < stream.lap_ends.size(); ++i) {
    const StreamFrame& frame = stream.frames[i];
    hasher.add(frame);
    try {
      const auto t0 = std::chrono::steady_clock::now();
      belief = step(belief, frame);
      time_ms += ms_since(t0);
    } catch (const std::exception& e) {
      result.failures.push_back({name, i, e.what()});
      break;
    }
    ++frames_in_lap;
    if (i == stream.lap_ends[lap]) {
      LapMetrics row = measure(belief);
      row.lap = static_cast<int>(lap) + 1;
      row.backend = name;
      row.mean_update_ms = time_ms / static_cast<double>(frames_in_lap);
      result.rows.push_back(row);
      time_ms = 0.0;
      frames_in_lap = 0;
      ++lap;
    }
  }
  result.consumed_checksums.emplace_back(name, hasher.value());
  final_state = belief;
}

}  // namespace

ComparisonResult run_comparison(const ExperimentConfig& config) {
  const sim::TrackGroundTruth truth = sim::generate_track(config.track);
  return run_comparison(config, truth, simulate_stream(config, truth));
}

ComparisonResult run_comparison(const ExperimentConfig& config, const sim::TrackGroundTruth& truth,
                                const Stream& stream) {
  config.validate();
  ComparisonResult result;
  result.stream_checksum = stream.checksum;
  const Eigen::Matrix3d p0 = config.initial_pose_covariance();

  if (config.runs_pathspace()) {
    slam::PathspaceConfig pc = config.pathspace;
    pc.odometry_noise = config.odometry_covariance();
    std::size_t frame = 0;
    replay(
        kPathspaceName, stream, slam::JointBelief::initial(stream.start, p0, pc.labels),
        [&](const slam::JointBelief& b, const StreamFrame& f) {
          slam::JointBelief next = slam::process_frame(b, f.detections, f.odometry, pc);
          const bool all_closed = std::all_of(pc.labels.begin(), pc.labels.end(), [&](const Label& l) {
            const auto it = next.splines.find(l);
            return it != next.splines.end() && it->second.closed();
          });
          if (all_closed && !result.pathspace_closed_frame) result.pathspace_closed_frame = frame;
          ++frame;
          return next;
        },
        [&](const slam::JointBelief& b) {
          const Coverage c = rmse_and_coverage(b, truth, config.metrics.miss_threshold);
          LapMetrics row;
          row.rmse = c.rmse;
          row.missed_fraction = c.missed_fraction;
          row.map_size = b.map_size();
          row.ghost_count = 0;
          return row;
        },
        result, result.pathspace_final);
  }
  if (config.runs_ckf()) {
    ckf::CkfConfig cc = config.ckf;
    cc.odometry_noise = config.odometry_covariance();
    replay(
        kCkfName, stream, ckf::LandmarkMap::initial(stream.start, p0),
        [&](const ckf::LandmarkMap& m, const StreamFrame& f) {
          return ckf::process_frame(m, f.detections, f.odometry, cc);
        },
        [&](const ckf::LandmarkMap& m) {
          const Coverage c = rmse_and_coverage(m, truth, config.metrics.miss_threshold);
          LapMetrics row;
          row.rmse = c.rmse;
          row.missed_fraction = c.missed_fraction;
          row.map_size = static_cast<int>(m.size());
          row.ghost_count = count_ghosts(m, truth, config.metrics.ghost_radius);
          return row;
        },
        result, result.ckf_final);
  }
  std::stable_sort(result.rows.begin(), result.rows.end(), [](const LapMetrics& a, const LapMetrics& b) {
    return a.lap < b.lap;
  });
  return result;
}

std::vector<ScalabilityCell> run_scalability(const ExperimentConfig& config, const std::vector<int>& map_sizes,
                                             const std::vector<int>& readings_per_update, int repeats) {
  config.validate();
  if (repeats < 3) throw Error(ErrorKind::kInvalidArgument, "repeats must be >= 3");
  if (map_sizes.empty() || readings_per_update.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "empty scalability grid");
  }
  std::vector<ScalabilityCell> cells;
  const Eigen::Matrix3d p0 = config.initial_pose_covariance();
  const double sigma = config.sensor.position_noise_std;
  const Eigen::Matrix2d reading_cov = sigma * sigma * Eigen::Matrix2d::Identity();

  for (int size : map_sizes) {
    if (size < 2 * (config.pathspace.order + 2)) {
      throw Error(ErrorKind::kInvalidArgument, "map size too small for the synthetic track");
    }
    // Same geometry, denser cones: size / 2 per side.
    sim::TrackSpec spec = config.track;
    {
      double length = 0.0;
      for (const auto& e : spec.elements) length += e.arc_length();
      spec.cone_spacing = 2.0 * length / size;
      spec.cone_jitter = 0.0;
    }
    const sim::TrackGroundTruth truth = sim::generate_track(spec);
    const AgentPose pose = sim::start_pose(truth);
    sim::Rng rng(config.seed);
    std::normal_distribution<double> noise(0.0, 1.0);

    // Landmark belief: every cone mapped once, correlated through the pose.
    ckf::LandmarkMap map = ckf::LandmarkMap::initial(pose, p0);
    std::vector<std::pair<double, std::size_t>> by_range;
    {
      std::vector<Vec2> all;
      for (const auto& [label, cones] : truth.cones) {
        for (const Vec2& c : cones) {
          map.landmarks.push_back({c, label});
          all.push_back(c);
        }
      }
      const Eigen::Index n = map.dimension();
      Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(n, 3);
      jac.topRows<3>().setIdentity();
      for (std::size_t i = 0; i < all.size(); ++i) {
        jac.middleRows<2>(3 + 2 * static_cast<Eigen::Index>(i)) = world_point_pose_jacobian(pose, all[i]);
        by_range.emplace_back((all[i] - pose.position()).norm(), i);
      }
      map.covariance = jac * p0 * jac.transpose();
      for (Eigen::Index i = 3; i < n; i += 2) map.covariance.block<2, 2>(i, i) += reading_cov;
      std::sort(by_range.begin(), by_range.end());
    }

    // Spline belief: interpolate each boundary, close it, simplify to budget.
    slam::PathspaceConfig pc = config.pathspace;
    pc.odometry_noise.setZero();
    // Sparse maps leave a cone spacing between the last and first cone.
    pc.closure.max_gap = std::max(pc.closure.max_gap, 1.5 * spec.cone_spacing);
    slam::JointBelief belief = slam::JointBelief::initial(pose, p0, pc.labels);
    for (const auto& [label, cones] : truth.cones) {
      if (!belief.accepts(label)) continue;
      const std::vector<Eigen::Matrix2d> covs(cones.size(), reading_cov);
      belief = slam::add_spline(belief, label, cones, covs, pc.order);
      belief = slam::close_loop(belief, label, pc.closure);
      const auto& s = belief.splines.at(label);
      const int budget = std::min(slam::simplification_budget(s, pc), s.unique_size());
      belief = slam::simplify(belief, label, budget, pc.baseline_weight, pc.samples_per_control);
    }

    for (int readings : readings_per_update) {
      if (readings < 1 || static_cast<std::size_t>(readings) > by_range.size()) {
        throw Error(ErrorKind::kInvalidArgument, "readings per update out of range");
      }
      std::vector<Detection> detections;
      for (int r = 0; r < readings; ++r) {
        const auto& lm = map.landmarks[by_range[r].second];
        Detection d;
        d.label = lm.label;
        d.position = to_agent(pose, lm.position) + sigma * Vec2(noise(rng), noise(rng));
        d.covariance = reading_cov;
        detections.push_back(d);
      }

      double ps_ms = 0.0, ckf_ms = 0.0;
      for (int rep = 0; rep < repeats; ++rep) {
        if (config.runs_pathspace()) {
          const auto t0 = std::chrono::steady_clock::now();
          const slam::JointBelief out = slam::process_frame(belief, detections, Odometry{}, pc);
          ps_ms += ms_since(t0);
        }
        if (config.runs_ckf()) {
          const auto t0 = std::chrono::steady_clock::now();
          const ckf::LandmarkMap out = ckf::process_frame(map, detections, Odometry{}, config.ckf);
          ckf_ms += ms_since(t0);
        }
      }
      if (config.runs_pathspace()) {
        cells.push_back({kPathspaceName, size, readings, belief.map_size(), ps_ms / repeats});
      }
      if (config.runs_ckf()) {
        cells.push_back({kCkfName, size, readings, static_cast<int>(map.size()), ckf_ms / repeats});
      }
    }
  }
  return cells;
}

Format parse_format(const std::string& name) {
  if (name == "csv") return Format::kCsv;
  if (name == "json") return Format::kJson;
  throw Error(ErrorKind::kInvalidArgument, "format must be csv or json");
}

std::string to_csv(const std::vector<LapMetrics>& rows) {
  std::ostringstream out;
  out << kCsvHeader << '\n';
  for (const auto& r : rows) {
    out << r.lap << ',' << r.backend << ',' << number(r.rmse) << ',' << r.map_size << ','
        << number(100.0 * r.missed_fraction) << ',' << r.ghost_count << ',' << number(r.mean_update_ms) << '\n';
  }
  return out.str();
}

json to_json(const std::vector<LapMetrics>& rows) {
  json out = json::array();
  for (const auto& r : rows) {
    out.push_back({{"lap", r.lap},
                   {"backend", r.backend},
                   {"rmse_m", finite_or_null(r.rmse)},
                   {"size", r.map_size},
                   {"missed_pct", 100.0 * r.missed_fraction},
                   {"missed_fraction", r.missed_fraction},
                   {"ghosts", r.ghost_count},
                   {"update_ms", r.mean_update_ms}});
  }
  return out;
}

std::vector<LapMetrics> metrics_from_json(const json& j) {
  std::vector<LapMetrics> rows;
  for (const auto& r : j) {
    LapMetrics m;
    m.lap = r.at("lap").get<int>();
    m.backend = r.at("backend").get<std::string>();
    m.rmse = r.at("rmse_m").is_null() ? std::numeric_limits<double>::quiet_NaN() : r.at("rmse_m").get<double>();
    m.map_size = r.at("size").get<int>();
    m.missed_fraction = r.at("missed_fraction").get<double>();
    m.ghost_count = r.at("ghosts").get<int>();
    m.mean_update_ms = r.at("update_ms").get<double>();
    rows.push_back(m);
  }
  return rows;
}

void emit(const std::vector<LapMetrics>& rows, Format format, const std::filesystem::path& path) {
  if (rows.empty()) throw Error(ErrorKind::kInvalidArgument, "refusing to write empty results");
  if (format == Format::kCsv) {
    write_text(path, to_csv(rows));
  } else {
    io::write_json(path, to_json(rows));
  }
}

std::string to_csv(const std::vector<ScalabilityCell>& cells) {
  std::ostringstream out;
  out << "backend,map_size,readings,state_size,update_ms\n";
  for (const auto& c : cells) {
    out << c.backend << ',' << c.map_size << ',' << c.readings << ',' << c.state_size << ',' << number(c.mean_ms)
        << '\n';
  }
  return out.str();
}

json to_json(const std::vector<ScalabilityCell>& cells) {
  json out = json::array();
  for (const auto& c : cells) {
    out.push_back({{"backend", c.backend},
                   {"map_size", c.map_size},
                   {"readings", c.readings},
                   {"state_size", c.state_size},
                   {"update_ms", c.mean_ms}});
  }
  return out;
}

void emit(const std::vector<ScalabilityCell>& cells, Format format, const std::filesystem::path& path) {
  if (cells.empty()) throw Error(ErrorKind::kInvalidArgument, "refusing to write empty results");
  if (format == Format::kCsv) {
    write_text(path, to_csv(cells));
  } else {
    io::write_json(path, to_json(cells));
  }
}

}  // namespace pathspace::harness
