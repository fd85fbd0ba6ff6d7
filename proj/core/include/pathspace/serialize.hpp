#pragma once

// JSON snapshots. Covariances are written as the row-major lower triangle
// (row i contributes entries 0..i), so a matrix of dimension n takes
// n(n+1)/2 numbers.

#include "pathspace/ckf.hpp"
#include "pathspace/simworld.hpp"
#include "pathspace/slam.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>

namespace pathspace::io {

using nlohmann::json;

json lower_triangle(const Eigen::MatrixXd& symmetric);
Eigen::MatrixXd from_lower_triangle(const json& values, Eigen::Index dimension);

json to_json(const AgentPose& pose);
AgentPose pose_from_json(const json& j);

json to_json(const spline::BSpline& spline);  // knots expanded, control points unique
spline::BSpline spline_from_json(const json& j);

json to_json(const slam::JointBelief& belief);
slam::JointBelief belief_from_json(const json& j);

json to_json(const ckf::LandmarkMap& map);
ckf::LandmarkMap landmark_map_from_json(const json& j);

json to_json(const sim::TrackSpec& spec);
sim::TrackSpec track_spec_from_json(const json& j);

json to_json(const sim::TrackGroundTruth& truth);
sim::TrackGroundTruth track_from_json(const json& j);

json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const json& value);

}  // namespace pathspace::io
