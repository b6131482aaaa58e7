#pragma once

// Body-frame swing-foot residual: saturation and composition onto the template
// target. The stance target always passes through untouched.

#include <algorithm>
#include <cmath>
#include <utility>

#include "beamstep/footstep_template.hpp"

namespace beamstep {

struct Residual {
  double dx{0.0};
  double dy{0.0};
  double dpsi{0.0};

  double squared_norm() const { return dx * dx + dy * dy + dpsi * dpsi; }
  bool finite() const { return std::isfinite(dx) && std::isfinite(dy) && std::isfinite(dpsi); }
  friend Residual operator-(const Residual& a, const Residual& b) {
    return {a.dx - b.dx, a.dy - b.dy, a.dpsi - b.dpsi};
  }
  friend bool operator==(const Residual&, const Residual&) = default;
};

// Zero components are accepted and disable that axis.
struct ResidualBounds {
  double sx{0.08};
  double sy{0.05};
  double spsi{0.2};

  bool valid() const { return sx >= 0.0 && sy >= 0.0 && spsi >= 0.0; }
  bool contains(const Residual& r) const {
    return std::abs(r.dx) <= sx && std::abs(r.dy) <= sy && std::abs(r.dpsi) <= spsi;
  }
};

inline Residual saturate(const Residual& r, const ResidualBounds& s) {
  return {std::clamp(r.dx, -s.sx, s.sx), std::clamp(r.dy, -s.sy, s.sy),
          std::clamp(r.dpsi, -s.spsi, s.spsi)};
}

inline FootPose compose(const FootPose& u, const Residual& r, double body_heading) {
  const Vec2 offset = rotate({r.dx, r.dy}, body_heading);
  return make_pose(u.x + offset.x, u.y + offset.y, u.psi + r.dpsi);
}

struct FootTargets {
  FootPose left;
  FootPose right;

  FootPose& operator[](Side s) { return s == Side::left ? left : right; }
  const FootPose& operator[](Side s) const { return s == Side::left ? left : right; }
};

inline FootTargets apply_residual(const FootTargets& temp, Side swing, const Residual& r,
                                  const ResidualBounds& bounds, double body_heading) {
  FootTargets out = temp;
  out[swing] = compose(temp[swing], saturate(r, bounds), body_heading);
  return out;
}

}  // namespace beamstep
