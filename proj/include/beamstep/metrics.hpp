#pragma once

// Trial and aggregate evaluation: success, traversal rate, centerline
// deviation and foot-placement RMSE.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <iomanip>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "beamstep/beam_sim.hpp"

namespace beamstep {

inline double traversal_rate(double distance, double beam_length) {
  if (!(beam_length > 0.0)) throw std::domain_error("traversal_rate: beam_length must be positive");
  if (!(distance >= 0.0)) throw std::domain_error("traversal_rate: distance must be non-negative");
  return std::min(1.0, distance / beam_length);
}

struct TrialResult {
  bool success{false};
  double distance{0.0};
  double traversal_rate{0.0};
  // Undefined (nullopt) when the trial has no qualifying footfalls.
  std::optional<double> centerline_dev;
  std::optional<double> fp_rmse;           // realized vs final target
  std::optional<double> fp_rmse_template;  // realized vs template target
  std::size_t steps{0};
};

class TraceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void validate_trace(const EpisodeTrace& trace) {
  double last_time = 0.0;
  for (std::size_t i = 0; i < trace.records.size(); ++i) {
    const auto& r = trace.records[i];
    if (r.index != i) throw TraceError("record " + std::to_string(i) + " has index " + std::to_string(r.index));
    if (!(r.time > last_time) && i > 0) throw TraceError("record times are not increasing at " + std::to_string(i));
    last_time = r.time;
    if (!r.on_beam && i + 1 != trace.records.size()) {
      throw TraceError("off-beam footfall at record " + std::to_string(i) + " is not terminal");
    }
  }
  if (!std::isfinite(trace.max_com_x)) throw TraceError("max_com_x is not finite");
}

/// Distance is the furthest CoM progress along the beam; a trial that reaches
/// the end is credited with the full length.
inline TrialResult evaluate_trial(const EpisodeTrace& trace, const BeamSpec& beam) {
  validate_trace(trace);
  TrialResult t;
  t.success = trace.termination == Termination::reached_end;
  t.distance = t.success ? beam.length : std::clamp(trace.max_com_x, 0.0, beam.length);
  t.traversal_rate = traversal_rate(t.distance, beam.length);
  t.steps = trace.records.size();

  double dev_sum = 0.0;
  std::size_t dev_n = 0;
  double se_final = 0.0;
  double se_temp = 0.0;
  for (const auto& r : trace.records) {
    if (r.on_beam) {
      dev_sum += std::abs(r.footfall.y - beam.centerline_y);
      ++dev_n;
    }
    const double ef = norm(r.footfall.position() - r.u_final.position());
    const double et = norm(r.footfall.position() - r.u_temp.position());
    se_final += ef * ef;
    se_temp += et * et;
  }
  if (dev_n > 0) t.centerline_dev = dev_sum / static_cast<double>(dev_n);
  if (!trace.records.empty()) {
    const double n = static_cast<double>(trace.records.size());
    t.fp_rmse = std::sqrt(se_final / n);
    t.fp_rmse_template = std::sqrt(se_temp / n);
  }
  return t;
}

struct MeanStd {
  double mean{std::numeric_limits<double>::quiet_NaN()};
  double std{std::numeric_limits<double>::quiet_NaN()};
  std::size_t n{0};
};

/// Mean and sample (n-1) standard deviation; std is 0 for a single value.
inline MeanStd mean_std(const std::vector<double>& v) {
  MeanStd m;
  m.n = v.size();
  if (v.empty()) return m;
  // Sorted summation keeps the result independent of input order; working
  // relative to the smallest value makes identical inputs give std exactly 0.
  std::vector<double> s = v;
  std::sort(s.begin(), s.end());
  const double base = s.front();
  const double n = static_cast<double>(s.size());
  std::vector<double> d;
  d.reserve(s.size());
  for (double x : s) d.push_back(x - base);
  const double mean_d = std::accumulate(d.begin(), d.end(), 0.0) / n;
  m.mean = base + mean_d;
  if (s.size() == 1) {
    m.std = 0.0;
    return m;
  }
  std::vector<double> sq;
  sq.reserve(d.size());
  for (double x : d) sq.push_back((x - mean_d) * (x - mean_d));
  std::sort(sq.begin(), sq.end());
  m.std = std::sqrt(std::accumulate(sq.begin(), sq.end(), 0.0) / (n - 1.0));
  return m;
}

struct AggregateReport {
  std::string method;
  double beam_width{0.0};
  std::size_t count{0};
  double success_rate{0.0};  // percent
  MeanStd centerline_dev;
  MeanStd fp_rmse;
  MeanStd fp_rmse_template;
  MeanStd traversal_rate;
  MeanStd distance;
};

inline AggregateReport aggregate(const std::vector<TrialResult>& results) {
  if (results.empty()) throw std::invalid_argument("aggregate: no trial results");
  AggregateReport a;
  a.count = results.size();
  std::size_t wins = 0;
  std::vector<double> dev, rmse, rmse_t, trav, dist;
  for (const auto& r : results) {
    wins += r.success ? 1 : 0;
    if (r.centerline_dev) dev.push_back(*r.centerline_dev);
    if (r.fp_rmse) rmse.push_back(*r.fp_rmse);
    if (r.fp_rmse_template) rmse_t.push_back(*r.fp_rmse_template);
    trav.push_back(r.traversal_rate);
    dist.push_back(r.distance);
  }
  a.success_rate = 100.0 * static_cast<double>(wins) / static_cast<double>(results.size());
  a.centerline_dev = mean_std(dev);
  a.fp_rmse = mean_std(rmse);
  a.fp_rmse_template = mean_std(rmse_t);
  a.traversal_rate = mean_std(trav);
  a.distance = mean_std(dist);
  return a;
}

namespace detail {

inline std::string fixed(double v, int prec) {
  if (std::isnan(v)) return "nan";
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os << std::fixed << std::setprecision(prec) << v;
  return os.str();
}

}  // namespace detail

inline constexpr const char* kReportCsvHeader =
    "method,beam_width,success_rate,centerline_dev_mean,centerline_dev_std,fp_rmse_mean,"
    "fp_rmse_std,traversal_rate_mean";

inline void write_report_csv(std::ostream& os, const std::vector<AggregateReport>& rows) {
  std::ostringstream out;
  out << kReportCsvHeader << '\n';
  for (const auto& r : rows) {
    out << r.method << ',' << detail::fixed(r.beam_width, 3) << ','
        << detail::fixed(r.success_rate, 1) << ',' << detail::fixed(r.centerline_dev.mean, 6)
        << ',' << detail::fixed(r.centerline_dev.std, 6) << ','
        << detail::fixed(r.fp_rmse.mean, 6) << ',' << detail::fixed(r.fp_rmse.std, 6) << ','
        << detail::fixed(r.traversal_rate.mean, 6) << '\n';
  }
  os << out.str();
}

/// Plain-text comparison table, one row per (method, beam width).
inline void write_report_table(std::ostream& os, const std::vector<AggregateReport>& rows) {
  std::ostringstream out;
  out << std::left << std::setw(24) << "Method" << std::setw(10) << "Beam (m)" << std::setw(18)
      << "Success rate (%)" << std::setw(24) << "Centerline dev. (m)" << std::setw(24)
      << "FP-RMSE (m)" << std::setw(24) << "FP-RMSE vs template (m)" << "Traversal (%)\n";
  auto pm = [](const MeanStd& m) {
    return detail::fixed(m.mean, 5) + " +- " + detail::fixed(m.std, 5);
  };
  for (const auto& r : rows) {
    out << std::left << std::setw(24) << r.method << std::setw(10) << detail::fixed(r.beam_width, 2)
        << std::setw(18) << detail::fixed(r.success_rate, 1) << std::setw(24)
        << pm(r.centerline_dev) << std::setw(24) << pm(r.fp_rmse) << std::setw(24)
        << pm(r.fp_rmse_template) << detail::fixed(100.0 * r.traversal_rate.mean, 2) << '\n';
  }
  os << out.str();
}

}  // namespace beamstep
