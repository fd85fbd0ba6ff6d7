#pragma once

// Experiment plumbing: one seeded simulation is recorded into a frame
// stream, both backends replay it, and per-lap metrics are taken at every
// lap boundary of the true centerline odometer.

#include "pathspace/ckf.hpp"
#include "pathspace/simworld.hpp"
#include "pathspace/slam.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace pathspace::harness {

inline constexpr int kSchemaVersion = 1;

enum class BackendSelection { kPathspace, kCkf, kBoth };

struct MetricParams {
  double miss_threshold = 3.0;  // m
  double ghost_radius = 1.5;    // m
};

struct ExperimentConfig {
  int schema_version = kSchemaVersion;
  std::uint64_t seed = 7;
  int laps = 5;
  BackendSelection backends = BackendSelection::kBoth;
  double speed = 8.0;      // m/s
  double dt = 0.1;         // s
  double lookahead = 6.0;  // m
  // Per-step odometry noise std (forward m, lateral m, heading rad). The
  // same values are handed to both filters.
  Eigen::Vector3d odometry_std{0.02, 0.01, 0.001};
  Eigen::Vector3d initial_pose_std{0.01, 0.01, 0.001};
  sim::TrackSpec track = sim::TrackSpec::default_spec();
  sim::SensorModel sensor;
  slam::PathspaceConfig pathspace;
  ckf::CkfConfig ckf;
  MetricParams metrics;

  Eigen::Matrix3d odometry_covariance() const;
  Eigen::Matrix3d initial_pose_covariance() const;
  bool runs_pathspace() const { return backends != BackendSelection::kCkf; }
  bool runs_ckf() const { return backends != BackendSelection::kPathspace; }
  void validate() const;
};

// Defaults used by the CLI and the acceptance suite.
ExperimentConfig default_config();

nlohmann::json to_json(const ExperimentConfig& config);
// Missing keys keep their defaults; unknown keys are rejected.
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

// Reads PATHSPACE_SEED when set.
void apply_environment(ExperimentConfig& config);
// PATHSPACE_OUT_DIR when set, otherwise `fallback`.
std::filesystem::path output_directory(const std::filesystem::path& fallback);

struct StreamFrame {
  Odometry odometry;
  std::vector<Detection> detections;
  AgentPose true_pose;
};

struct Stream {
  AgentPose start;
  std::vector<StreamFrame> frames;
  // Index of the last frame of each lap.
  std::vector<std::size_t> lap_ends;
  std::uint64_t checksum = 0;
};

Stream simulate_stream(const ExperimentConfig& config, const sim::TrackGroundTruth& truth);

// FNV-1a over the odometry and detection payload of every frame.
class StreamHasher {
 public:
  void add(const StreamFrame& frame);
  std::uint64_t value() const { return hash_; }

 private:
  void bytes(const void* data, std::size_t size);
  std::uint64_t hash_ = 14695981039346656037ull;
};
std::uint64_t stream_checksum(const std::vector<StreamFrame>& frames);

struct Coverage {
  double rmse = 0.0;  // NaN when every cone is missed
  double missed_fraction = 0.0;
  std::size_t missed = 0;
  std::size_t cones = 0;
};

// Nearest same-label map point per cone; cones farther than the threshold
// are missed and do not enter the RMSE.
Coverage coverage_from_distances(const std::vector<double>& distances, double threshold);
Coverage rmse_and_coverage(const slam::JointBelief& belief, const sim::TrackGroundTruth& truth, double threshold);
Coverage rmse_and_coverage(const ckf::LandmarkMap& map, const sim::TrackGroundTruth& truth, double threshold);

// Landmarks beyond the first within `radius` of each cone.
int count_ghosts(const ckf::LandmarkMap& map, const sim::TrackGroundTruth& truth, double radius);

inline const std::string kPathspaceName = "pathspace";
inline const std::string kCkfName = "ckf";

struct LapMetrics {
  int lap = 0;
  std::string backend;
  double rmse = 0.0;
  int map_size = 0;
  double missed_fraction = 0.0;
  int ghost_count = 0;
  double mean_update_ms = 0.0;
};

struct BackendFailure {
  std::string backend;
  std::size_t frame = 0;
  std::string message;
};

struct ComparisonResult {
  std::vector<LapMetrics> rows;  // lap-major, pathspace before ckf
  std::uint64_t stream_checksum = 0;
  std::vector<std::pair<std::string, std::uint64_t>> consumed_checksums;
  std::vector<BackendFailure> failures;
  // First frame at which every pathspace label holds a closed spline.
  std::optional<std::size_t> pathspace_closed_frame;
  std::optional<slam::JointBelief> pathspace_final;
  std::optional<ckf::LandmarkMap> ckf_final;
};

ComparisonResult run_comparison(const ExperimentConfig& config);
ComparisonResult run_comparison(const ExperimentConfig& config, const sim::TrackGroundTruth& truth,
                                const Stream& stream);

struct ScalabilityCell {
  std::string backend;
  int map_size = 0;   // landmarks on the synthetic track
  int readings = 0;
  int state_size = 0; // control points or landmarks actually held
  double mean_ms = 0.0;
};

std::vector<ScalabilityCell> run_scalability(const ExperimentConfig& config, const std::vector<int>& map_sizes,
                                             const std::vector<int>& readings_per_update, int repeats);

enum class Format { kCsv, kJson };
Format parse_format(const std::string& name);

inline constexpr const char* kCsvHeader = "lap,backend,rmse_m,size,missed_pct,ghosts,update_ms";

std::string to_csv(const std::vector<LapMetrics>& rows);
nlohmann::json to_json(const std::vector<LapMetrics>& rows);
std::vector<LapMetrics> metrics_from_json(const nlohmann::json& j);
void emit(const std::vector<LapMetrics>& rows, Format format, const std::filesystem::path& path);

std::string to_csv(const std::vector<ScalabilityCell>& cells);
nlohmann::json to_json(const std::vector<ScalabilityCell>& cells);
void emit(const std::vector<ScalabilityCell>& cells, Format format, const std::filesystem::path& path);

}  // namespace pathspace::harness
