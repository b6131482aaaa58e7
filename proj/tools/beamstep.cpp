// beamstep: batch beam-traversal experiments, elevation windows from point
// clouds, and single-episode traces.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "beamstep/elevation_window.hpp"
#include "beamstep/experiment.hpp"
#include "beamstep/trace_io.hpp"

namespace fs = std::filesystem;
using namespace beamstep;

namespace {

enum class LogLevel { quiet, info, debug };

LogLevel log_level() {
  const char* env = std::getenv("BEAMSTEP_LOG");
  if (!env) return LogLevel::info;
  const std::string v = env;
  if (v == "quiet" || v == "0" || v == "error") return LogLevel::quiet;
  if (v == "debug" || v == "2") return LogLevel::debug;
  return LogLevel::info;
}

void log(LogLevel at, const std::string& msg) {
  if (static_cast<int>(log_level()) >= static_cast<int>(at)) std::cerr << msg << '\n';
}

[[noreturn]] void fail(const std::string& code, const std::string& msg, int status = 2) {
  std::cerr << "error[" << code << "]: " << msg << '\n';
  std::exit(status);
}

std::vector<double> parse_csv_doubles(const std::string& s) {
  std::vector<double> v;
  std::istringstream in(s);
  in.imbue(std::locale::classic());
  std::string tok;
  while (std::getline(in, tok, ',')) {
    std::istringstream t(tok);
    t.imbue(std::locale::classic());
    double d;
    if (!(t >> d) || !(t >> std::ws).eof()) throw std::invalid_argument("bad number '" + tok + "'");
    v.push_back(d);
  }
  return v;
}

int cmd_run(const std::string& config, const std::string& out_dir, std::size_t jobs,
            std::optional<std::uint64_t> seed, std::optional<std::size_t> trials) {
  ExperimentConfig cfg = load_experiment_config(config);
  if (seed) cfg.seed_base = *seed;
  if (trials) {
    if (*trials == 0) fail("usage", "--trials must be positive");
    cfg.trials = *trials;
  }
  log(LogLevel::info, "running " + std::to_string(cfg.cell_count() * cfg.trials) +
                          " episodes on " + std::to_string(jobs) + " thread(s)");
  const auto results = run_experiment(cfg, jobs);
  write_experiment_outputs(cfg, results, out_dir);
  for (const auto& c : results) {
    std::ostringstream os;
    os.imbue(std::locale::classic());
    os << std::fixed << std::setprecision(3) << c.report.method << " w=" << c.report.beam_width
       << " success=" << std::setprecision(1) << c.report.success_rate << '%';
    log(LogLevel::debug, os.str());
  }
  std::vector<AggregateReport> rows;
  for (const auto& c : results) rows.push_back(c.report);
  write_report_table(std::cout, rows);
  log(LogLevel::info, "wrote " + (fs::path(out_dir) / cfg.output.csv).string());
  return 0;
}

int cmd_window(const std::string& cloud_path, const std::string& pose, const std::string& out,
               bool grid) {
  PointCloud cloud;
  {
    std::ifstream in(cloud_path);
    if (!in) fail("cloud.missing_file", "point cloud not found: " + cloud_path);
    try {
      cloud.points = parse_point_cloud(in);
    } catch (const ParseError& e) {
      fail("cloud.parse", cloud_path + ":" + std::to_string(e.line()) + ": " + e.what());
    }
  }
  if (!pose.empty()) {
    std::vector<double> p;
    try {
      p = parse_csv_doubles(pose);
    } catch (const std::invalid_argument& e) {
      fail("usage", std::string("--pose: ") + e.what());
    }
    if (p.size() != 6) fail("usage", "--pose needs six values x,y,z,roll,pitch,yaw");
    cloud.gravity_transform = RigidTransform::from_rpy(p[3], p[4], p[5], {p[0], p[1], p[2]});
  }
  log(LogLevel::debug, "cloud has " + std::to_string(cloud.points.size()) + " points");
  const ElevationWindow w = build_from_pointcloud(cloud);
  std::ostringstream flat, grid_text;
  write_window_flat(flat, w);
  write_window_grid(grid_text, w);
  if (out.empty()) {
    std::cout << (grid ? grid_text.str() : flat.str());
  } else {
    // File gets the 187 values, the terminal gets the grid.
    write_file_atomic(out, flat.str());
    std::cout << grid_text.str();
  }
  return 0;
}

int cmd_trace(const std::string& config, const std::string& method, std::size_t beam_index,
              std::size_t trial, bool json, std::optional<std::uint64_t> seed) {
  ExperimentConfig cfg = load_experiment_config(config);
  if (seed) cfg.seed_base = *seed;
  const std::size_t mi = method.empty() ? 0 : cfg.method_index(method);
  if (beam_index >= cfg.beams.size()) {
    fail("config.beam_ref", "beam index " + std::to_string(beam_index) + " out of range (" +
                                std::to_string(cfg.beams.size()) + " beams)");
  }
  const EpisodeTrace trace = run_episode(cfg.episode(mi, beam_index, trial));
  if (json) {
    write_trace(std::cout, trace);
  } else {
    write_trace_human(std::cout, trace);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Footstep planning and beam traversal experiments"};
  app.require_subcommand(1);

  std::string config, out_dir = "out", cloud, pose, out, method;
  std::size_t jobs = 1, beam_index = 0, trial = 0, trials_override = 0;
  std::uint64_t seed = 0;
  bool grid = false, json = false;

  auto* run = app.add_subcommand("run", "Run every method on every beam and write reports");
  run->add_option("--config", config, "Experiment JSON file")->required();
  run->add_option("--out-dir", out_dir, "Directory for reports and traces");
  run->add_option("-j,--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
  auto* run_seed = run->add_option("--seed", seed, "Override seed_base");
  auto* run_trials = run->add_option("--trials", trials_override, "Override trials per cell");

  auto* window = app.add_subcommand("window", "Build an elevation window from a point cloud");
  window->add_option("--cloud", cloud, "Point cloud, one 'x y z' per line")->required();
  window->add_option("--pose", pose, "Gravity alignment x,y,z,roll,pitch,yaw");
  window->add_option("--out", out, "Write the 187 values here and print the grid");
  window->add_flag("--grid", grid, "Without --out, print the 11x17 grid instead of 187 lines");

  auto* tr = app.add_subcommand("trace", "Run one episode and print its transitions");
  tr->add_option("--config", config, "Experiment JSON file")->required();
  tr->add_option("--method", method, "Method name (default: first)");
  tr->add_option("--beam-index", beam_index, "Beam index in the config");
  tr->add_option("--trial", trial, "Trial index");
  auto* tr_seed = tr->add_option("--seed", seed, "Override seed_base");
  tr->add_flag("--json", json, "Emit JSON lines instead of text");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    fail("usage", e.what());
  }

  try {
    if (*run) {
      return cmd_run(config, out_dir, jobs,
                     run_seed->count() ? std::optional(seed) : std::nullopt,
                     run_trials->count() ? std::optional(trials_override) : std::nullopt);
    }
    if (*window) return cmd_window(cloud, pose, out, grid);
    if (*tr) {
      return cmd_trace(config, method, beam_index, trial, json,
                       tr_seed->count() ? std::optional(seed) : std::nullopt);
    }
  } catch (const ExperimentError& e) {
    fail(e.code(), e.what());
  } catch (const PlanningError& e) {
    fail("planning", e.what(), 1);
  } catch (const ObjectiveError& e) {
    fail("objective", e.what(), 1);
  } catch (const fs::filesystem_error& e) {
    fail("io", e.what(), 1);
  } catch (const std::exception& e) {
    fail("internal", e.what(), 1);
  }
  return 0;
}
