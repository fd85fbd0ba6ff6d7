#include "pathspace/ckf.hpp"
#include "pathspace/slam.hpp"
#include "pathspace/spline.hpp"

#include <benchmark/benchmark.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

using namespace pathspace;

namespace {

std::vector<Vec2> circle_points(int n, double radius, double sweep) {
  std::vector<Vec2> pts;
  for (int i = 0; i < n; ++i) {
    const double a = sweep * i / (n - 1);
    pts.emplace_back(radius * std::cos(a), radius * std::sin(a));
  }
  return pts;
}

slam::JointBelief arc_belief(int control_points) {
  const auto pts = circle_points(control_points, 30.0, 1.5 * std::numbers::pi);
  const std::vector<Eigen::Matrix2d> covs(pts.size(), 0.01 * Eigen::Matrix2d::Identity());
  const slam::JointBelief b =
      slam::JointBelief::initial({30, 0, std::numbers::pi / 2}, 1e-4 * Eigen::Matrix3d::Identity(), {"blue"});
  return slam::add_spline(b, "blue", pts, covs);
}

void BM_Evaluate(benchmark::State& state) {
  const auto s = spline::interpolate_clamped(circle_points(static_cast<int>(state.range(0)), 30.0, 5.0)).spline;
  double u = 0.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(spline::evaluate(s, u));
    u = u > 0.999 ? 0.0 : u + 0.001;
  }
}
BENCHMARK(BM_Evaluate)->Arg(16)->Arg(128);

void BM_Project(benchmark::State& state) {
  const auto s = spline::interpolate_clamped(circle_points(static_cast<int>(state.range(0)), 30.0, 5.0)).spline;
  const Vec2 p(12.0, 25.0);
  for (auto _ : state) benchmark::DoNotOptimize(spline::project(s, p));
}
BENCHMARK(BM_Project)->Arg(16)->Arg(128);

// One measurement fit plus Kalman update on a spline of the given size.
void BM_FitAndUpdate(benchmark::State& state) {
  const slam::JointBelief b = arc_belief(static_cast<int>(state.range(0)));
  const std::vector<Vec2> readings{{30.2, 1.0}, {29.9, 4.0}, {29.5, 7.0}, {28.8, 10.0}};
  const std::vector<Eigen::Matrix2d> covs(readings.size(), 0.01 * Eigen::Matrix2d::Identity());
  for (auto _ : state) {
    const slam::SplineMeasurement m = slam::fit_measurement_spline(
        b, "blue", readings, covs, 1.0, slam::ObservationModel::kFitSensitivity, true, 10.0);
    benchmark::DoNotOptimize(slam::kalman_update(b, m));
  }
}
BENCHMARK(BM_FitAndUpdate)->Arg(20)->Arg(80)->Arg(160)->Unit(benchmark::kMillisecond);

// Full landmark update: association and cubature over the whole map.
void BM_CkfUpdate(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  ckf::LandmarkMap map = ckf::LandmarkMap::initial({0, 0, 0}, 1e-4 * Eigen::Matrix3d::Identity());
  for (const Vec2& p : circle_points(n, 30.0, 2 * std::numbers::pi)) map.landmarks.push_back({p - Vec2(30, 0), "blue"});
  map.covariance = 0.01 * Eigen::MatrixXd::Identity(map.dimension(), map.dimension());
  std::vector<Detection> dets;
  for (std::size_t i = 0; i < 10; ++i) {
    dets.push_back({map.landmarks[i].position + Vec2(0.05, -0.05), "blue", 0.01 * Eigen::Matrix2d::Identity()});
  }
  ckf::CkfConfig config;
  for (auto _ : state) benchmark::DoNotOptimize(ckf::process_frame(map, dets, {}, config));
}
BENCHMARK(BM_CkfUpdate)->Arg(50)->Arg(200)->Arg(400)->Unit(benchmark::kMillisecond);

void BM_Hungarian(benchmark::State& state) {
  const auto n = state.range(0);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> cost(0.0, 10.0);
  Eigen::MatrixXd c(n, n);
  for (Eigen::Index i = 0; i < c.size(); ++i) c.data()[i] = cost(rng);
  for (auto _ : state) benchmark::DoNotOptimize(ckf::hungarian(c));
}
BENCHMARK(BM_Hungarian)->Arg(10)->Arg(50)->Arg(200);

}  // namespace

BENCHMARK_MAIN();
