#pragma once

// Experiment files and batch execution: methods x beams x trials, run on a
// worker pool, reported in config order regardless of completion order.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <memory>
#include <mutex>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "beamstep/beam_sim.hpp"
#include "beamstep/metrics.hpp"
#include "beamstep/trace_io.hpp"

namespace beamstep {

/// Error with a stable machine-greppable reason code such as "config.schema".
class ExperimentError : public std::runtime_error {
 public:
  ExperimentError(std::string code, const std::string& what)
      : std::runtime_error(what), code_(std::move(code)) {}
  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

struct MethodSpec {
  std::string name;
  ResidualPolicy policy{};
  ResidualBounds bounds{};
  DisturbanceBounds noise{};
};

struct OutputPaths {
  std::string csv{"report.csv"};
  std::string table{"report.txt"};
  std::string traces{"traces"};
};

struct ExperimentConfig {
  std::vector<MethodSpec> methods;
  std::vector<BeamSpec> beams;
  std::size_t trials{20};
  std::uint64_t seed_base{0};
  EpisodeConfig base{};  // shared episode settings; per-cell fields are overwritten
  OutputPaths output{};

  std::size_t cell_count() const { return methods.size() * beams.size(); }

  /// Seeds depend on the trial only, so every method sees the same noise
  /// stream for a given trial.
  EpisodeConfig episode(std::size_t method, std::size_t beam, std::size_t trial) const {
    EpisodeConfig e = base;
    e.seed = seed_base + trial;
    e.beam = beams.at(beam);
    e.policy = methods.at(method).policy;
    e.bounds = methods.at(method).bounds;
    e.touchdown_noise = methods.at(method).noise;
    return e;
  }

  void validate() const {
    if (methods.empty()) throw ExperimentError("config.schema", "at least one method is required");
    if (beams.empty()) throw ExperimentError("config.schema", "at least one beam is required");
    if (trials == 0) throw ExperimentError("config.schema", "trials must be positive");
    std::set<std::string> names;
    for (const auto& m : methods) {
      if (m.name.empty()) throw ExperimentError("config.schema", "method name must be non-empty");
      if (!names.insert(m.name).second) {
        throw ExperimentError("config.schema", "duplicate method name '" + m.name + "'");
      }
    }
    for (std::size_t mi = 0; mi < methods.size(); ++mi) {
      for (std::size_t bi = 0; bi < beams.size(); ++bi) {
        try {
          episode(mi, bi, 0).validate();
        } catch (const ConfigError& e) {
          throw ExperimentError("config.invalid", "method '" + methods[mi].name + "', beam " +
                                                      std::to_string(bi) + ": " + e.what());
        }
      }
    }
  }

  std::size_t method_index(const std::string& name) const {
    for (std::size_t i = 0; i < methods.size(); ++i) {
      if (methods[i].name == name) return i;
    }
    throw ExperimentError("config.method_ref", "no method named '" + name + "'");
  }
};

namespace detail {

using json = nlohmann::json;

inline void check_keys(const json& j, const std::string& where,
                       std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ExperimentError("config.schema", where + " must be an object");
  for (const auto& [k, _] : j.items()) {
    if (std::find_if(allowed.begin(), allowed.end(), [&](const char* a) { return k == a; }) ==
        allowed.end()) {
      throw ExperimentError("config.schema", where + ": unknown key '" + k + "'");
    }
  }
}

template <class T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

inline std::array<double, 3> triple(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 3) {
    throw ExperimentError("config.schema", where + " must be an array of three numbers");
  }
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

inline std::string read_file(const std::filesystem::path& p, const std::string& what) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ExperimentError("config.missing_file", what + " not found: " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace detail

/// Parses an experiment file. Relative paths inside it resolve against
/// base_dir.
inline ExperimentConfig parse_experiment_config(const std::string& text,
                                                const std::filesystem::path& base_dir = ".") {
  using detail::json;
  ExperimentConfig cfg;
  json root;
  try {
    root = json::parse(text, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ExperimentError("config.parse", e.what());
  }
  try {
    detail::check_keys(root, "config",
                       {"trials", "seed_base", "max_steps", "max_time", "dt", "command",
                        "pendulum", "template", "weights", "start_lateral_offset", "beams",
                        "methods", "output"});
    detail::read(root, "trials", cfg.trials);
    detail::read(root, "seed_base", cfg.seed_base);
    auto& b = cfg.base;
    detail::read(root, "max_steps", b.max_steps);
    detail::read(root, "max_time", b.max_time);
    detail::read(root, "dt", b.dt);
    detail::read(root, "start_lateral_offset", b.start_lateral_offset);
    if (root.contains("command")) {
      const auto& c = root["command"];
      detail::check_keys(c, "command", {"vx", "vy", "yaw_rate"});
      detail::read(c, "vx", b.command.vx);
      detail::read(c, "vy", b.command.vy);
      detail::read(c, "yaw_rate", b.command.yaw_rate);
    }
    if (root.contains("pendulum")) {
      const auto& p = root["pendulum"];
      detail::check_keys(p, "pendulum", {"z0", "g"});
      double z0 = PendulumParams::kDefaultHeight, g = PendulumParams::kDefaultGravity;
      detail::read(p, "z0", z0);
      detail::read(p, "g", g);
      try {
        b.pendulum = PendulumParams(z0, g);
      } catch (const std::domain_error& e) {
        throw ExperimentError("config.invalid", std::string("pendulum: ") + e.what());
      }
    }
    if (root.contains("template")) {
      const auto& t = root["template"];
      detail::check_keys(t, "template", {"step_period", "lateral_offset", "velocity_gain"});
      detail::read(t, "step_period", b.templ.step_period);
      detail::read(t, "lateral_offset", b.templ.lateral_offset);
      detail::read(t, "velocity_gain", b.templ.velocity_gain);
    }
    if (root.contains("weights")) {
      const auto& w = root["weights"];
      detail::check_keys(w, "weights",
                         {"footstep_safety", "beam_balance", "forward", "face_forward",
                          "feet_prox", "sched", "mag", "smooth", "h_th", "sigma_balance",
                          "d_min_feet", "patch_radius"});
      auto& rw = b.weights;
      detail::read(w, "footstep_safety", rw.footstep_safety);
      detail::read(w, "beam_balance", rw.beam_balance);
      detail::read(w, "forward", rw.forward);
      detail::read(w, "face_forward", rw.face_forward);
      detail::read(w, "feet_prox", rw.feet_prox);
      detail::read(w, "sched", rw.sched);
      detail::read(w, "mag", rw.mag);
      detail::read(w, "smooth", rw.smooth);
      detail::read(w, "h_th", rw.h_th);
      detail::read(w, "sigma_balance", rw.sigma_balance);
      detail::read(w, "d_min_feet", rw.d_min_feet);
      detail::read(w, "patch_radius", rw.patch_radius);
    }
    if (!root.contains("beams") || !root["beams"].is_array()) {
      throw ExperimentError("config.schema", "'beams' must be an array");
    }
    for (const auto& bj : root["beams"]) {
      detail::check_keys(bj, "beam", {"width", "length", "top_height", "abyss_height", "centerline_y"});
      BeamSpec beam;
      detail::read(bj, "width", beam.width);
      detail::read(bj, "length", beam.length);
      detail::read(bj, "top_height", beam.top_height);
      detail::read(bj, "abyss_height", beam.abyss_height);
      detail::read(bj, "centerline_y", beam.centerline_y);
      cfg.beams.push_back(beam);
    }
    if (!root.contains("methods") || !root["methods"].is_array()) {
      throw ExperimentError("config.schema", "'methods' must be an array");
    }
    for (const auto& mj : root["methods"]) {
      detail::check_keys(mj, "method", {"name", "policy", "bounds", "noise", "lattice", "replay"});
      MethodSpec m;
      if (!mj.contains("name")) throw ExperimentError("config.schema", "method without 'name'");
      m.name = mj["name"].get<std::string>();
      const std::string policy = mj.value("policy", std::string("zero"));
      try {
        m.policy.variant = parse_policy_variant(policy);
      } catch (const std::invalid_argument&) {
        throw ExperimentError("config.method_ref",
                              "method '" + m.name + "': unknown policy '" + policy + "'");
      }
      if (mj.contains("bounds")) {
        const auto s = detail::triple(mj["bounds"], "method '" + m.name + "' bounds");
        m.bounds = {s[0], s[1], s[2]};
      }
      if (mj.contains("noise")) {
        const auto s = detail::triple(mj["noise"], "method '" + m.name + "' noise");
        m.noise = {s[0], s[1], s[2]};
      }
      if (mj.contains("lattice")) {
        const auto& l = mj["lattice"];
        if (!l.is_array() || l.size() != 3) {
          throw ExperimentError("config.schema", "method '" + m.name + "' lattice must have 3 sizes");
        }
        m.policy.lattice = {l[0].get<std::size_t>(), l[1].get<std::size_t>(), l[2].get<std::size_t>()};
      }
      if (mj.contains("replay")) {
        const std::filesystem::path p = base_dir / mj["replay"].get<std::string>();
        std::istringstream in(detail::read_file(p, "residual replay"));
        try {
          m.policy.replay = std::make_shared<const std::vector<Residual>>(parse_residual_replay(in));
        } catch (const ParseError& e) {
          throw ExperimentError("config.parse", p.string() + ": " + e.what());
        }
      }
      cfg.methods.push_back(std::move(m));
    }
    if (root.contains("output")) {
      const auto& o = root["output"];
      detail::check_keys(o, "output", {"csv", "table", "traces"});
      detail::read(o, "csv", cfg.output.csv);
      detail::read(o, "table", cfg.output.table);
      detail::read(o, "traces", cfg.output.traces);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ExperimentError("config.schema", e.what());
  }
  cfg.validate();
  return cfg;
}

inline ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  const std::string text = detail::read_file(path, "config file");
  return parse_experiment_config(text, path.parent_path());
}

struct CellResult {
  std::size_t method{0};
  std::size_t beam{0};
  std::vector<EpisodeTrace> traces;
  std::vector<TrialResult> trials;
  AggregateReport report;
};

/// Runs every (method, beam, trial) episode on up to `jobs` threads. Output
/// order follows the config: methods outer, beams inner.
inline std::vector<CellResult> run_experiment(const ExperimentConfig& cfg, std::size_t jobs = 1) {
  const std::size_t cells = cfg.cell_count();
  const std::size_t total = cells * cfg.trials;
  std::vector<EpisodeTrace> traces(total);

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&] {
    for (std::size_t k = next++; k < total; k = next++) {
      const std::size_t cell = k / cfg.trials;
      const std::size_t trial = k % cfg.trials;
      try {
        traces[k] = run_episode(cfg.episode(cell / cfg.beams.size(), cell % cfg.beams.size(), trial));
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
        next = total;
      }
    }
  };
  const std::size_t n = std::max<std::size_t>(1, std::min(jobs, total));
  {
    std::vector<std::jthread> pool;
    for (std::size_t i = 1; i < n; ++i) pool.emplace_back(worker);
    worker();
  }
  if (failure) std::rethrow_exception(failure);

  std::vector<CellResult> out(cells);
  for (std::size_t c = 0; c < cells; ++c) {
    auto& cell = out[c];
    cell.method = c / cfg.beams.size();
    cell.beam = c % cfg.beams.size();
    const BeamSpec& beam = cfg.beams[cell.beam];
    for (std::size_t t = 0; t < cfg.trials; ++t) {
      cell.traces.push_back(std::move(traces[c * cfg.trials + t]));
      cell.trials.push_back(evaluate_trial(cell.traces.back(), beam));
    }
    cell.report = aggregate(cell.trials);
    cell.report.method = cfg.methods[cell.method].name;
    cell.report.beam_width = beam.width;
  }
  return out;
}

inline std::string trace_file_name(const std::string& method, double width, std::size_t trial) {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os << method << "__w" << std::fixed << std::setprecision(3) << width << "__t" << std::setw(3)
     << std::setfill('0') << trial << ".jsonl";
  return os.str();
}

/// Writes via a temporary file and rename so readers never see partial output.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ExperimentError("io.write", "cannot write " + tmp.string());
    out << content;
    if (!out) throw ExperimentError("io.write", "short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline void write_experiment_outputs(const ExperimentConfig& cfg,
                                     const std::vector<CellResult>& results,
                                     const std::filesystem::path& out_dir) {
  std::vector<AggregateReport> rows;
  for (const auto& c : results) rows.push_back(c.report);
  std::ostringstream csv, table;
  write_report_csv(csv, rows);
  write_report_table(table, rows);
  write_file_atomic(out_dir / cfg.output.csv, csv.str());
  write_file_atomic(out_dir / cfg.output.table, table.str());
  for (const auto& c : results) {
    const auto& name = cfg.methods[c.method].name;
    for (std::size_t t = 0; t < c.traces.size(); ++t) {
      std::ostringstream os;
      write_trace(os, c.traces[t]);
      write_file_atomic(out_dir / cfg.output.traces /
                            trace_file_name(name, cfg.beams[c.beam].width, t),
                        os.str());
    }
  }
}

}  // namespace beamstep
