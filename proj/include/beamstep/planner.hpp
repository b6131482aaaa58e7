#pragma once

// Residual policies. The learned planner's interface (observation in, bounded
// body-frame residual out) is kept; the policies behind it are bounded
// numerical optimizers over the step objective.

#include <cmath>
#include <cstddef>
#include <functional>
#include <istream>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "beamstep/elevation_window.hpp"
#include "beamstep/residual.hpp"
#include "beamstep/text_io.hpp"

namespace beamstep {

struct PlannerObservation {
  CoMState com{};
  double heading{0.0};
  double sin_phase{0.0};
  double cos_phase{1.0};
  FootTargets template_targets{};
  ElevationWindow elevation{};
  std::size_t transition_index{0};

  static constexpr std::size_t kFlatSize = 5 + 2 + 6 + WindowSpec::size;

  /// Fixed layout: com (x y vx vy), heading, sin/cos phase, left and right
  /// template targets (x y psi), then the 187 window heights in grid order.
  std::vector<double> flatten() const {
    std::vector<double> v;
    v.reserve(kFlatSize);
    v.insert(v.end(), {com.x, com.y, com.vx, com.vy, heading, sin_phase, cos_phase});
    for (const auto& f : {template_targets.left, template_targets.right}) {
      v.insert(v.end(), {f.x, f.y, f.psi});
    }
    v.insert(v.end(), elevation.heights.begin(), elevation.heights.end());
    return v;
  }
};

using StepObjective = std::function<double(const Residual&)>;

class PlanningError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LatticeSize {
  std::size_t nx{11};
  std::size_t ny{11};
  std::size_t npsi{7};
};

/// Uniform nodes over [-s, s]; the middle node is exactly zero for odd n.
inline std::vector<double> lattice_axis(double s, std::size_t n) {
  if (s == 0.0 || n <= 1) return {0.0};
  std::vector<double> v(n);
  const double denom = static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    v[i] = s * (2.0 * static_cast<double>(i) - denom) / denom;
  }
  return v;
}

struct SearchResult {
  Residual best{};
  double value{-std::numeric_limits<double>::infinity()};
  std::size_t evaluations{0};
};

/// Strict ordering used to pick among lattice points: higher score, then
/// smaller norm, then lexicographically smaller (dx, dy, dpsi).
inline bool preferred(double va, const Residual& a, double vb, const Residual& b) {
  if (va != vb) return va > vb;
  const double na = a.squared_norm();
  const double nb = b.squared_norm();
  if (na != nb) return na < nb;
  return std::tie(a.dx, a.dy, a.dpsi) < std::tie(b.dx, b.dy, b.dpsi);
}

inline SearchResult grid_search(const StepObjective& objective, const ResidualBounds& bounds,
                                const LatticeSize& size = {}) {
  const auto xs = lattice_axis(bounds.sx, size.nx);
  const auto ys = lattice_axis(bounds.sy, size.ny);
  const auto ps = lattice_axis(bounds.spsi, size.npsi);
  SearchResult res;
  bool found = false;
  for (double dx : xs) {
    for (double dy : ys) {
      for (double dp : ps) {
        const Residual r{dx, dy, dp};
        const double v = objective(r);
        ++res.evaluations;
        if (!std::isfinite(v)) continue;
        if (!found || preferred(v, r, res.value, res.best)) {
          res.best = r;
          res.value = v;
          found = true;
        }
      }
    }
  }
  if (!found) throw PlanningError("grid_search: objective non-finite at every lattice point");
  return res;
}

struct DescentOptions {
  std::size_t max_sweeps{50};
  double tolerance{1e-6};
  double interval_tolerance{1e-7};
};

namespace detail {

inline double finite_or_lowest(double v) {
  return std::isfinite(v) ? v : -std::numeric_limits<double>::infinity();
}

/// Golden-section maximization of f over [lo, hi].
template <class F>
std::pair<double, double> golden_max(F&& f, double lo, double hi, double tol,
                                     std::size_t& evals) {
  constexpr double kInvPhi = 0.6180339887498949;
  double a = lo, b = hi;
  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  double fc = finite_or_lowest(f(c));
  double fd = finite_or_lowest(f(d));
  evals += 2;
  while (b - a > tol) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = finite_or_lowest(f(c));
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = finite_or_lowest(f(d));
    }
    ++evals;
  }
  return fc >= fd ? std::pair{c, fc} : std::pair{d, fd};
}

}  // namespace detail

/// Cyclic coordinate ascent from the origin, one golden-section line search per
/// axis. A coordinate only moves when it improves the objective, so the result
/// never scores below the origin.
inline SearchResult coordinate_descent(const StepObjective& objective,
                                       const ResidualBounds& bounds,
                                       const DescentOptions& opt = {}) {
  SearchResult res;
  res.best = {};
  res.value = detail::finite_or_lowest(objective(res.best));
  res.evaluations = 1;
  const double lim[3] = {bounds.sx, bounds.sy, bounds.spsi};
  for (std::size_t sweep = 0; sweep < opt.max_sweeps; ++sweep) {
    const double before = res.value;
    for (int axis = 0; axis < 3; ++axis) {
      if (lim[axis] <= 0.0) continue;
      auto with = [&](double t) {
        Residual r = res.best;
        (axis == 0 ? r.dx : axis == 1 ? r.dy : r.dpsi) = t;
        return r;
      };
      const auto [t, v] = detail::golden_max([&](double t) { return objective(with(t)); },
                                             -lim[axis], lim[axis], opt.interval_tolerance,
                                             res.evaluations);
      if (v > res.value) {
        res.best = with(t);
        res.value = v;
      }
    }
    if (!(res.value - before >= opt.tolerance)) break;
  }
  if (!std::isfinite(res.value)) {
    throw PlanningError("coordinate_descent: objective non-finite everywhere it was evaluated");
  }
  return res;
}

enum class PolicyVariant { zero, grid_search, coordinate_descent, external };

inline std::string_view to_string(PolicyVariant v) {
  switch (v) {
    case PolicyVariant::zero: return "zero";
    case PolicyVariant::grid_search: return "grid_search";
    case PolicyVariant::coordinate_descent: return "coordinate_descent";
    case PolicyVariant::external: return "external";
  }
  return "?";
}

inline PolicyVariant parse_policy_variant(std::string_view s) {
  if (s == "zero") return PolicyVariant::zero;
  if (s == "grid_search") return PolicyVariant::grid_search;
  if (s == "coordinate_descent") return PolicyVariant::coordinate_descent;
  if (s == "external") return PolicyVariant::external;
  throw std::invalid_argument("unknown policy variant '" + std::string(s) + "'");
}

/// Residual triples for replaying a recorded policy, one per transition.
inline std::vector<Residual> parse_residual_replay(std::istream& in) {
  std::vector<Residual> out;
  for (const auto& t : parse_triples(in)) out.push_back({t[0], t[1], t[2]});
  return out;
}

struct ResidualPolicy {
  PolicyVariant variant{PolicyVariant::zero};
  LatticeSize lattice{};
  DescentOptions descent{};
  std::shared_ptr<const std::vector<Residual>> replay{};
};

/// Returns the saturated residual the policy commits to for this transition.
inline Residual plan_residual(const PlannerObservation& obs, const ResidualPolicy& policy,
                              const StepObjective& objective, const ResidualBounds& bounds) {
  switch (policy.variant) {
    case PolicyVariant::zero:
      return {};
    case PolicyVariant::grid_search:
      return saturate(grid_search(objective, bounds, policy.lattice).best, bounds);
    case PolicyVariant::coordinate_descent:
      return saturate(coordinate_descent(objective, bounds, policy.descent).best, bounds);
    case PolicyVariant::external: {
      if (!policy.replay || obs.transition_index >= policy.replay->size()) {
        throw PlanningError("external policy: no recorded residual for transition " +
                            std::to_string(obs.transition_index));
      }
      return saturate((*policy.replay)[obs.transition_index], bounds);
    }
  }
  throw PlanningError("unknown policy variant");
}

}  // namespace beamstep
