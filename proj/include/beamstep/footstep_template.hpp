#pragma once

// XCoM footstep template: proposes the next swing-foot target at each step
// transition and injects bounded target perturbations.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>

#include "beamstep/lipm.hpp"

namespace beamstep {

/// Wraps an angle into (-pi, pi].
inline double normalize_angle(double a) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  double r = std::remainder(a, kTwoPi);
  if (r <= -std::numbers::pi) r += kTwoPi;
  return r;
}

inline Vec2 rotate(Vec2 v, double heading) {
  const double c = std::cos(heading);
  const double s = std::sin(heading);
  return {c * v.x - s * v.y, s * v.x + c * v.y};
}

struct FootPose {
  double x{0.0};
  double y{0.0};
  double psi{0.0};

  Vec2 position() const { return {x, y}; }
  friend bool operator==(const FootPose&, const FootPose&) = default;
};

inline FootPose make_pose(double x, double y, double psi) {
  return {x, y, normalize_angle(psi)};
}

enum class Side { left, right };

inline Side other(Side s) { return s == Side::left ? Side::right : Side::left; }
/// +1 for left (positive y), -1 for right.
inline double side_sign(Side s) { return s == Side::left ? 1.0 : -1.0; }
inline const char* to_string(Side s) { return s == Side::left ? "left" : "right"; }

struct StepCommand {
  double vx{0.0};
  double vy{0.0};
  double yaw_rate{0.0};
};

struct GaitPhase {
  double phi{0.0};
  Side swing{Side::left};
  double period{0.25};
};

struct PhaseAdvance {
  GaitPhase phase;
  bool transition{false};
};

inline constexpr double kPhaseEpsilon = 1e-9;

/// Phase reaching 1 (within kPhaseEpsilon) is a step transition: phase restarts
/// at zero and the swing side flips.
inline PhaseAdvance advance_phase(const GaitPhase& phase, double dt) {
  if (!(dt >= 0.0)) throw std::domain_error("advance_phase: dt must be non-negative");
  if (!(phase.period > 0.0)) throw std::domain_error("advance_phase: period must be positive");
  GaitPhase next = phase;
  next.phi = phase.phi + dt / phase.period;
  if (next.phi >= 1.0 - kPhaseEpsilon) {
    next.phi = 0.0;
    next.swing = other(phase.swing);
    return {next, true};
  }
  return {next, false};
}

struct TemplateConfig {
  double step_period{0.25};
  // Lateral distance of the swing target from the predicted XCoM, toward the
  // swing side.
  double lateral_offset{0.025};
  // Gain on (v - v_cmd) at touchdown, scaled by the step period.
  double velocity_gain{0.0};
};

/// Offset behind the XCoM that sustains walking at speed v with period T.
inline double steady_gait_offset(double v, double omega0, double period) {
  return v * period / std::expm1(omega0 * period);
}

/// Lateral stride width of the periodic gait generated by the template.
inline double nominal_step_width(const TemplateConfig& cfg, double omega0) {
  return cfg.lateral_offset * (std::exp(omega0 * cfg.step_period) + 1.0);
}

/// Swing-foot target from the XCoM predicted at the upcoming touchdown. Reads
/// only the CoM state and the stance foot.
inline FootPose propose_swing_target(const CoMState& state, const StepCommand& cmd,
                                     const GaitPhase& phase, const FootPose& stance,
                                     const PendulumParams& params, const TemplateConfig& cfg) {
  const double w = params.omega0();
  const double period = cfg.step_period;
  const double remaining = std::max(0.0, 1.0 - phase.phi) * period;
  const CoMState touchdown = propagate(state, stance.position(), params, remaining);
  const Vec2 xi = xcom(touchdown, w);

  const double heading = stance.psi;
  const Vec2 cmd_body{cmd.vx, cmd.vy};
  const Vec2 cmd_world = rotate(cmd_body, heading);
  const double k_ff = period / std::expm1(w * period);

  Vec2 target = xi - k_ff * cmd_world;
  target = target + rotate({0.0, side_sign(phase.swing) * cfg.lateral_offset}, heading);
  if (cfg.velocity_gain != 0.0) {
    target = target + (cfg.velocity_gain * period) * (touchdown.velocity() - cmd_world);
  }
  return make_pose(target.x, target.y, stance.psi + cmd.yaw_rate * period);
}

struct DisturbanceBounds {
  double x{0.0};
  double y{0.0};
  double psi{0.0};
};

struct DisturbanceSpec {
  DisturbanceBounds bounds{};
  std::uint64_t seed{0};

  bool valid() const { return bounds.x >= 0.0 && bounds.y >= 0.0 && bounds.psi >= 0.0; }
};

namespace detail {

// splitmix64 finalizer
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace detail

/// Counter-based uniform draw in [0, 1), a pure function of its arguments.
inline double counter_uniform(std::uint64_t seed, std::uint64_t index, std::uint64_t stream) {
  const std::uint64_t h = detail::mix64(detail::mix64(detail::mix64(seed) ^ index) ^ stream);
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

inline FootPose perturb_target(const FootPose& target, const DisturbanceSpec& spec,
                               std::uint64_t draw_index) {
  if (!spec.valid()) throw std::domain_error("perturb_target: negative disturbance bound");
  auto draw = [&](std::uint64_t stream, double bound) {
    if (bound == 0.0) return 0.0;
    return bound * (2.0 * counter_uniform(spec.seed, draw_index, stream) - 1.0);
  };
  return make_pose(target.x + draw(0, spec.bounds.x), target.y + draw(1, spec.bounds.y),
                   target.psi + draw(2, spec.bounds.psi));
}

}  // namespace beamstep
