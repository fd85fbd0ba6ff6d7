// pathspace: run the backend comparison, the scalability sweep, or export a
// generated track.
//
// Environment: PATHSPACE_SEED overrides the config seed (a --seed flag wins
// over both); PATHSPACE_OUT_DIR overrides --out.

#include "pathspace/allocator.hpp"
#include "pathspace/error.hpp"
#include "pathspace/harness.hpp"
#include "pathspace/serialize.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

namespace fs = std::filesystem;
using namespace pathspace;

namespace {

std::vector<int> parse_list(const std::string& text, const char* what) {
  std::vector<int> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      std::size_t used = 0;
      const int v = std::stoi(item, &used);
      if (used != item.size() || v <= 0) throw std::invalid_argument(item);
      out.push_back(v);
    } catch (const std::exception&) {
      throw Error(ErrorKind::kInvalidArgument, std::string("bad ") + what + " entry '" + item + "'");
    }
  }
  if (out.empty()) throw Error(ErrorKind::kInvalidArgument, std::string("empty ") + what + " list");
  return out;
}

fs::path prepare_dir(const fs::path& requested) {
  const fs::path dir = harness::output_directory(requested);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::kIo, "cannot create " + dir.string() + ": " + ec.message());
  return dir;
}

int run(const fs::path& config_path, const fs::path& out, const std::string& format_name,
        std::optional<std::uint64_t> seed) {
  harness::ExperimentConfig config = harness::load_config(config_path);
  harness::apply_environment(config);
  if (seed) config.seed = *seed;
  const harness::Format format = harness::parse_format(format_name);
  const fs::path dir = prepare_dir(out);

  const sim::TrackGroundTruth truth = sim::generate_track(config.track);
  const harness::Stream stream = harness::simulate_stream(config, truth);
  const harness::ComparisonResult result = harness::run_comparison(config, truth, stream);

  const fs::path metrics = dir / (format == harness::Format::kCsv ? "metrics.csv" : "metrics.json");
  harness::emit(result.rows, format, metrics);

  nlohmann::json summary = {{"schema_version", harness::kSchemaVersion},
                            {"seed", config.seed},
                            {"frames", stream.frames.size()},
                            {"stream_checksum", result.stream_checksum},
                            {"config", harness::to_json(config)}};
  for (const auto& [name, sum] : result.consumed_checksums) summary["consumed_checksums"][name] = sum;
  summary["failures"] = nlohmann::json::array();
  for (const auto& f : result.failures) {
    summary["failures"].push_back({{"backend", f.backend}, {"frame", f.frame}, {"message", f.message}});
  }
  io::write_json(dir / "summary.json", summary);
  io::write_json(dir / "track.json", io::to_json(truth));
  if (result.pathspace_final) io::write_json(dir / "pathspace_belief.json", io::to_json(*result.pathspace_final));
  if (result.ckf_final) io::write_json(dir / "ckf_map.json", io::to_json(*result.ckf_final));

  std::cout << "stream checksum " << result.stream_checksum << ", " << stream.frames.size() << " frames\n"
            << harness::to_csv(result.rows);
  for (const auto& f : result.failures) {
    std::cerr << f.backend << " failed at frame " << f.frame << ": " << f.message << '\n';
  }
  std::cout << "wrote " << metrics.string() << '\n';
  return result.failures.empty() ? 0 : 3;
}

int scalability(const fs::path& config_path, const std::string& sizes, const std::string& readings, int repeats,
                const fs::path& out, const std::string& format_name) {
  harness::ExperimentConfig config = harness::load_config(config_path);
  harness::apply_environment(config);
  const harness::Format format = harness::parse_format(format_name);
  const fs::path dir = prepare_dir(out);
  const auto cells = harness::run_scalability(config, parse_list(sizes, "size"), parse_list(readings, "readings"),
                                              repeats);
  const fs::path path = dir / (format == harness::Format::kCsv ? "scalability.csv" : "scalability.json");
  harness::emit(cells, format, path);
  std::cout << harness::to_csv(cells) << "wrote " << path.string() << '\n';
  return 0;
}

int gen_track(const fs::path& spec_path, const fs::path& out) {
  const sim::TrackSpec spec = io::track_spec_from_json(io::read_json(spec_path));
  const sim::TrackGroundTruth truth = sim::generate_track(spec);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  io::write_json(out, io::to_json(truth));
  std::cout << "lap " << truth.lap_length << " m, " << truth.cone_count() << " cones -> " << out.string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  pathspace::keep_large_allocations();
  CLI::App app{"PathSpace spline SLAM and landmark CKF experiments"};
  app.require_subcommand(1);

  fs::path run_config, run_out;
  std::string run_format = "csv";
  std::optional<std::uint64_t> run_seed;
  auto* run_cmd = app.add_subcommand("run", "Replay one simulated stream through both backends");
  run_cmd->add_option("--config", run_config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--out", run_out, "Output directory")->required();
  run_cmd->add_option("--format", run_format, "Metrics format")->check(CLI::IsMember({"csv", "json"}));
  run_cmd->add_option("--seed", run_seed, "Override the simulation seed");

  fs::path sc_config, sc_out;
  std::string sc_sizes, sc_readings, sc_format = "csv";
  int sc_repeats = 10;
  auto* sc_cmd = app.add_subcommand("scalability", "Time update cycles against synthetic map sizes");
  sc_cmd->add_option("--config", sc_config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  sc_cmd->add_option("--sizes", sc_sizes, "Comma-separated landmark counts")->required();
  sc_cmd->add_option("--readings", sc_readings, "Comma-separated readings per update")->required();
  sc_cmd->add_option("--repeats", sc_repeats, "Update cycles per cell (>= 3)");
  sc_cmd->add_option("--out", sc_out, "Output directory")->required();
  sc_cmd->add_option("--format", sc_format, "Output format")->check(CLI::IsMember({"csv", "json"}));

  fs::path gt_spec, gt_out;
  auto* gt_cmd = app.add_subcommand("gen-track", "Generate a track and write its ground truth");
  gt_cmd->add_option("--spec", gt_spec, "Track spec (JSON)")->required()->check(CLI::ExistingFile);
  gt_cmd->add_option("--out", gt_out, "Output file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) return run(run_config, run_out, run_format, run_seed);
    if (*sc_cmd) return scalability(sc_config, sc_sizes, sc_readings, sc_repeats, sc_out, sc_format);
    if (*gt_cmd) return gen_track(gt_spec, gt_out);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
