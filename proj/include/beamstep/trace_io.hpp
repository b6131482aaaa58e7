#pragma once

// Episode trace serialization: one JSON object per transition, then a summary
// line. Field names and order are frozen by the golden trace under tests/data.
//
//   {"i":0,"t":0.25,"side":"left","u_temp":[x,y,psi],"r":[dx,dy,dpsi],
//    "u_final":[x,y,psi],"footfall":[x,y,psi],"com":[x,y,vx,vy],"on_beam":true,
//    "reward":{"footstep_safety":..,...,"smooth":..,"total":..}}
//   {"summary":{"termination":"reached_end","steps":N,"end_time":..,
//    "max_com_x":..,"final_com":[x,y,vx,vy]}}

#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "json.hpp"

#include "beamstep/beam_sim.hpp"
#include "beamstep/metrics.hpp"

namespace beamstep {

namespace detail {

using ordered_json = nlohmann::ordered_json;

inline ordered_json pose_json(const FootPose& p) { return ordered_json::array({p.x, p.y, p.psi}); }
inline ordered_json com_json(const CoMState& s) {
  return ordered_json::array({s.x, s.y, s.vx, s.vy});
}

inline FootPose pose_from(const ordered_json& j) {
  return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()};
}
inline CoMState com_from(const ordered_json& j) {
  return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>(),
          j.at(3).get<double>()};
}

}  // namespace detail

inline void write_trace(std::ostream& os, const EpisodeTrace& trace) {
  using detail::ordered_json;
  std::string out;
  for (const auto& r : trace.records) {
    ordered_json rew = ordered_json::object();
    for (std::size_t k = 0; k < kTermCount; ++k) rew[std::string(kTermNames[k])] = r.reward.raw[k];
    rew["total"] = r.reward.total;
    ordered_json j;
    j["i"] = r.index;
    j["t"] = r.time;
    j["side"] = to_string(r.side);
    j["u_temp"] = detail::pose_json(r.u_temp);
    j["r"] = ordered_json::array({r.r.dx, r.r.dy, r.r.dpsi});
    j["u_final"] = detail::pose_json(r.u_final);
    j["footfall"] = detail::pose_json(r.footfall);
    j["com"] = detail::com_json(r.com);
    j["on_beam"] = r.on_beam;
    j["reward"] = std::move(rew);
    out += j.dump();
    out += '\n';
  }
  ordered_json s;
  s["termination"] = std::string(to_string(trace.termination));
  s["steps"] = trace.records.size();
  s["end_time"] = trace.end_time;
  s["max_com_x"] = trace.max_com_x;
  s["final_com"] = detail::com_json(trace.final_com);
  ordered_json footer;
  footer["summary"] = std::move(s);
  out += footer.dump();
  out += '\n';
  os << out;
}

/// Parses a trace written by write_trace. Weighted reward values are not
/// stored, so only raw terms and the total come back.
inline EpisodeTrace read_trace(std::istream& in) {
  using detail::ordered_json;
  EpisodeTrace trace;
  std::string line;
  std::size_t lineno = 0;
  bool have_summary = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (have_summary) throw TraceError("line " + std::to_string(lineno) + ": data after summary");
    try {
      const auto j = ordered_json::parse(line);
      if (j.contains("summary")) {
        const auto& s = j.at("summary");
        const auto term = parse_termination(s.at("termination").get<std::string>());
        if (!term) throw TraceError("unknown termination");
        trace.termination = *term;
        trace.end_time = s.at("end_time").get<double>();
        trace.max_com_x = s.at("max_com_x").get<double>();
        trace.final_com = detail::com_from(s.at("final_com"));
        if (s.at("steps").get<std::size_t>() != trace.records.size()) {
          throw TraceError("summary step count disagrees with records");
        }
        have_summary = true;
        continue;
      }
      TransitionRecord r;
      r.index = j.at("i").get<std::size_t>();
      r.time = j.at("t").get<double>();
      const auto side = j.at("side").get<std::string>();
      if (side != "left" && side != "right") throw TraceError("bad side '" + side + "'");
      r.side = side == "left" ? Side::left : Side::right;
      r.u_temp = detail::pose_from(j.at("u_temp"));
      const auto& rr = j.at("r");
      r.r = {rr.at(0).get<double>(), rr.at(1).get<double>(), rr.at(2).get<double>()};
      r.u_final = detail::pose_from(j.at("u_final"));
      r.footfall = detail::pose_from(j.at("footfall"));
      r.com = detail::com_from(j.at("com"));
      r.on_beam = j.at("on_beam").get<bool>();
      const auto& rew = j.at("reward");
      for (std::size_t k = 0; k < kTermCount; ++k) {
        r.reward.raw[k] = rew.at(std::string(kTermNames[k])).get<double>();
      }
      r.reward.total = rew.at("total").get<double>();
      trace.records.push_back(r);
    } catch (const TraceError& e) {
      throw TraceError("line " + std::to_string(lineno) + ": " + e.what());
    } catch (const nlohmann::json::exception& e) {
      throw TraceError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (!have_summary) throw TraceError("trace has no summary line");
  validate_trace(trace);
  return trace;
}

/// Human-readable dump for the `trace` subcommand.
inline void write_trace_human(std::ostream& os, const EpisodeTrace& trace) {
  std::ostringstream out;
  out.imbue(std::locale::classic());
  out << std::fixed << std::setprecision(4);
  auto pose = [&](const FootPose& p) {
    std::ostringstream s;
    s.imbue(std::locale::classic());
    s << std::fixed << std::setprecision(4) << '(' << p.x << ", " << p.y << ", " << p.psi << ')';
    return s.str();
  };
  for (const auto& r : trace.records) {
    out << "step " << r.index << "  t=" << r.time << "s  " << to_string(r.side)
        << (r.on_beam ? "  on-beam" : "  OFF-BEAM") << '\n';
    out << "  template  " << pose(r.u_temp) << '\n';
    out << "  residual  (" << r.r.dx << ", " << r.r.dy << ", " << r.r.dpsi << ")\n";
    out << "  final     " << pose(r.u_final) << '\n';
    out << "  realized  " << pose(r.footfall) << '\n';
    out << "  com       (" << r.com.x << ", " << r.com.y << ") v=(" << r.com.vx << ", "
        << r.com.vy << ")\n";
    out << "  reward   ";
    for (std::size_t k = 0; k < kTermCount; ++k) out << ' ' << kTermNames[k] << '=' << r.reward.raw[k];
    out << "  total=" << r.reward.total << '\n';
  }
  out << "termination " << to_string(trace.termination) << " after " << trace.records.size()
      << " steps, t=" << trace.end_time << "s, max CoM x=" << trace.max_com_x << '\n';
  os << out.str();
}

}  // namespace beamstep
