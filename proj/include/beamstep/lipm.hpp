#pragma once

// Constant-height linear inverted pendulum: closed-form single-support motion
// about a fixed stance point, extrapolated center of mass, orbital energy.

#include <cmath>
#include <stdexcept>
#include <string>

namespace beamstep {

struct Vec2 {
  double x{0.0};
  double y{0.0};

  friend constexpr Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend constexpr Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend constexpr Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend constexpr bool operator==(Vec2, Vec2) = default;
};

inline double norm(Vec2 v) { return std::hypot(v.x, v.y); }

inline double natural_frequency(double z0, double g = 9.81) {
  if (!(z0 > 0.0) || !(g > 0.0)) {
    throw std::domain_error("natural_frequency: z0 and g must be positive");
  }
  return std::sqrt(g / z0);
}

// omega0 is derived from z0 and g on every change so the three can never disagree.
class PendulumParams {
 public:
  static constexpr double kDefaultHeight = 0.7;
  static constexpr double kDefaultGravity = 9.81;

  PendulumParams() : PendulumParams(kDefaultHeight, kDefaultGravity) {}
  explicit PendulumParams(double z0, double g = kDefaultGravity)
      : z0_(z0), g_(g), omega0_(natural_frequency(z0, g)) {}

  double z0() const { return z0_; }
  double g() const { return g_; }
  double omega0() const { return omega0_; }

 private:
  double z0_;
  double g_;
  double omega0_;
};

struct CoMState {
  double x{0.0};
  double y{0.0};
  double vx{0.0};
  double vy{0.0};

  Vec2 position() const { return {x, y}; }
  Vec2 velocity() const { return {vx, vy}; }
  bool finite() const {
    return std::isfinite(x) && std::isfinite(y) && std::isfinite(vx) && std::isfinite(vy);
  }
  friend bool operator==(const CoMState&, const CoMState&) = default;
};

inline Vec2 xcom(const CoMState& s, double omega0) {
  if (!(omega0 > 0.0)) {
    throw std::domain_error("xcom: omega0 must be positive");
  }
  return {s.x + s.vx / omega0, s.y + s.vy / omega0};
}

namespace detail {

struct AxisState {
  double pos;
  double vel;
};

inline AxisState propagate_axis(double pos, double vel, double stance, double omega0,
                                double dt) {
  const double c = std::cosh(omega0 * dt);
  const double s = std::sinh(omega0 * dt);
  const double rel = pos - stance;
  return {stance + rel * c + (vel / omega0) * s, rel * omega0 * s + vel * c};
}

}  // namespace detail

/// Exact LIPM flow over dt with the stance point held fixed. Axes are
/// independent.
inline CoMState propagate(const CoMState& s, Vec2 stance, const PendulumParams& p,
                          double dt) {
  if (!(dt >= 0.0)) {
    throw std::domain_error("propagate: dt must be non-negative");
  }
  if (dt == 0.0) return s;
  const double w = p.omega0();
  const auto ax = detail::propagate_axis(s.x, s.vx, stance.x, w, dt);
  const auto ay = detail::propagate_axis(s.y, s.vy, stance.y, w, dt);
  CoMState out{ax.pos, ay.pos, ax.vel, ay.vel};
  if (!out.finite()) {
    throw std::domain_error("propagate: state became non-finite");
  }
  return out;
}

/// Per-axis orbital energy v^2/2 - w^2 (x-p)^2 / 2, J/kg.
inline Vec2 orbital_energy(const CoMState& s, Vec2 stance, double omega0) {
  if (!(omega0 > 0.0)) {
    throw std::domain_error("orbital_energy: omega0 must be positive");
  }
  const double w2 = omega0 * omega0;
  const double dx = s.x - stance.x;
  const double dy = s.y - stance.y;
  return {0.5 * s.vx * s.vx - 0.5 * w2 * dx * dx, 0.5 * s.vy * s.vy - 0.5 * w2 * dy * dy};
}

}  // namespace beamstep
