#pragma once

// Beam traversal episodes: template proposal, residual planning and noisy
// touchdown at each step transition, closed-form LIPM motion in between.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "beamstep/elevation_window.hpp"
#include "beamstep/footstep_template.hpp"
#include "beamstep/lipm.hpp"
#include "beamstep/planner.hpp"
#include "beamstep/residual.hpp"
#include "beamstep/reward.hpp"

namespace beamstep {

struct BeamSpec {
  double width{0.20};
  double length{3.0};
  double top_height{0.0};
  double abyss_height{-1.4};
  double centerline_y{0.0};

  bool valid() const {
    return width > 0.0 && length > 0.0 && abyss_height < top_height &&
           std::isfinite(centerline_y);
  }
};

struct BeamHeightField {
  BeamSpec spec;

  double operator()(double x, double y) const {
    const bool on = x >= 0.0 && x <= spec.length &&
                    std::abs(y - spec.centerline_y) <= 0.5 * spec.width;
    return on ? spec.top_height : spec.abyss_height;
  }
};

inline BeamHeightField make_beam_heightfield(const BeamSpec& spec) {
  if (!spec.valid()) throw std::invalid_argument("make_beam_heightfield: invalid beam");
  return BeamHeightField{spec};
}

/// Foot center inside the closed beam rectangle.
inline bool check_footfall(const FootPose& foot, const BeamSpec& spec) {
  return foot.x >= 0.0 && foot.x <= spec.length &&
         std::abs(foot.y - spec.centerline_y) <= 0.5 * spec.width;
}

/// Realized footfall: the final target plus bounded tracking error.
inline FootPose apply_touchdown(const FootPose& u_final, const DisturbanceSpec& noise,
                                std::uint64_t draw_index) {
  return perturb_target(u_final, noise, draw_index);
}

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct EpisodeConfig {
  std::uint64_t seed{0};
  BeamSpec beam{};
  StepCommand command{0.4, 0.0, 0.0};
  PendulumParams pendulum{};
  TemplateConfig templ{};
  ResidualBounds bounds{};
  ResidualPolicy policy{};
  DisturbanceBounds touchdown_noise{};
  RewardWeights weights{};
  std::size_t max_steps{200};
  double max_time{60.0};
  double dt{1e-3};
  // Start pose offset from the beam centerline; the template itself never sees
  // the beam, so this biases the whole walk.
  double start_lateral_offset{0.0};
  double diverge_offset{0.5};
  double diverge_speed{3.0};

  void validate() const {
    if (max_steps == 0) throw ConfigError("max_steps must be positive");
    if (!beam.valid()) throw ConfigError("beam: width and length must be positive, abyss below top");
    if (!(dt > 0.0)) throw ConfigError("dt must be positive");
    if (!(max_time > 0.0)) throw ConfigError("max_time must be positive");
    if (!(templ.step_period > 0.0)) throw ConfigError("template step_period must be positive");
    if (!(templ.lateral_offset >= 0.0)) throw ConfigError("template lateral_offset must be >= 0");
    if (!bounds.valid()) throw ConfigError("residual bounds must be non-negative");
    if (!DisturbanceSpec{touchdown_noise, seed}.valid()) {
      throw ConfigError("touchdown noise bounds must be non-negative");
    }
    if (!weights.valid()) throw ConfigError("reward weights invalid");
    if (policy.variant == PolicyVariant::external && !policy.replay) {
      throw ConfigError("external policy needs a residual replay");
    }
    if (!std::isfinite(start_lateral_offset)) throw ConfigError("start_lateral_offset not finite");
  }
};

enum class Termination { reached_end, footfall_off_beam, com_diverged, timeout };

inline std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::reached_end: return "reached_end";
    case Termination::footfall_off_beam: return "footfall_off_beam";
    case Termination::com_diverged: return "com_diverged";
    case Termination::timeout: return "timeout";
  }
  return "?";
}

inline std::optional<Termination> parse_termination(std::string_view s) {
  for (auto t : {Termination::reached_end, Termination::footfall_off_beam,
                 Termination::com_diverged, Termination::timeout}) {
    if (to_string(t) == s) return t;
  }
  return std::nullopt;
}

struct TransitionRecord {
  std::size_t index{0};
  double time{0.0};
  Side side{Side::left};  // foot that touched down
  FootPose u_temp{};
  Residual r{};
  FootPose u_final{};
  FootPose footfall{};
  CoMState com{};  // at touchdown
  ObjectiveBreakdown reward{};
  bool on_beam{false};
};

struct EpisodeTrace {
  std::vector<TransitionRecord> records;
  Termination termination{Termination::timeout};
  double end_time{0.0};
  double max_com_x{0.0};
  CoMState final_com{};
};

namespace detail {

struct PlannedStep {
  FootPose u_temp;
  Residual r;
  FootPose u_final;
};

template <HeightField F>
PlannedStep plan_step(const EpisodeConfig& cfg, const F& field, const CoMState& com,
                      const GaitPhase& phase, const FootPose& stance, const Residual& r_prev,
                      std::size_t transition_index) {
  const FootPose u_temp =
      propose_swing_target(com, cfg.command, phase, stance, cfg.pendulum, cfg.templ);
  FootTargets temp;
  temp[phase.swing] = u_temp;
  temp[other(phase.swing)] = stance;
  const double heading = stance.psi;

  PlannerObservation obs;
  obs.com = com;
  obs.heading = heading;
  obs.sin_phase = std::sin(2.0 * std::numbers::pi * phase.phi);
  obs.cos_phase = std::cos(2.0 * std::numbers::pi * phase.phi);
  obs.template_targets = temp;
  obs.transition_index = transition_index;
  if (cfg.policy.variant != PolicyVariant::zero) {
    obs.elevation = sample_from_heightfield(field, BodyPose{com.x, com.y, heading});
  }

  StepContext ctx;
  ctx.touchdown = propagate(com, stance.position(), cfg.pendulum,
                            (1.0 - phase.phi) * cfg.templ.step_period);
  ctx.stance = stance;
  ctx.swing = phase.swing;
  ctx.r_prev = r_prev;
  ctx.params = cfg.pendulum;
  ctx.step_period = cfg.templ.step_period;
  ctx.y_center = cfg.beam.centerline_y;

  const StepObjective objective = [&](const Residual& r) {
    StepContext c = ctx;
    c.r = r;
    return step_objective(compose(u_temp, r, heading), field, c, cfg.weights).total;
  };
  const Residual r = plan_residual(obs, cfg.policy, objective, cfg.bounds);
  const FootTargets final_targets = apply_residual(temp, phase.swing, r, cfg.bounds, heading);
  return {u_temp, r, final_targets[phase.swing]};
}

/// Reward terms for what actually happened at a touchdown.
template <HeightField F>
ObjectiveBreakdown realized_reward(const EpisodeConfig& cfg, const F& field,
                                   const TransitionRecord& rec, const FootPose& support,
                                   double prev_com_x, const Residual& r_prev) {
  StepOutcome o;
  o.post = rec.com;
  o.applied = rec.r;
  o.footfall = rec.footfall;
  o.target = rec.u_final;
  o.contact_left = rec.side == Side::left;
  o.contact_right = rec.side == Side::right;
  o.schedule = schedule_for(rec.side);
  const RewardWeights& w = cfg.weights;
  std::array<double, kTermCount> raw{};
  raw[0] = r_footstep_safety(rec.footfall, field, w.h_th, w.patch_radius);
  raw[1] = r_beam_balance(rec.com.y, cfg.beam.centerline_y, w.sigma_balance);
  raw[2] = r_forward(rec.com.x, prev_com_x);
  raw[3] = r_face_forward(rec.u_final.psi);
  raw[4] = r_feet_prox(rec.footfall, support, w.d_min_feet);
  raw[5] = r_sched_tracking(o);
  raw[6] = r_magnitude(rec.r);
  raw[7] = r_smoothness(rec.r, r_prev);
  return combine(raw, w);
}

}  // namespace detail

/// Standardized start: feet side by side at x = 0 straddling the start line,
/// CoM above the line moving at the commanded speed, right foot in support.
struct StartState {
  CoMState com;
  FootPose left;
  FootPose right;
};

inline StartState standardized_start(const EpisodeConfig& cfg) {
  const double w = cfg.pendulum.omega0();
  const double half = 0.5 * nominal_step_width(cfg.templ, w);
  const double y0 = cfg.beam.centerline_y + cfg.start_lateral_offset;
  StartState s;
  s.left = {0.0, y0 + half, 0.0};
  s.right = {0.0, y0 - half, 0.0};
  // Lateral velocity on the periodic orbit of the template gait.
  const double vy = -half * w * std::tanh(0.5 * w * cfg.templ.step_period);
  s.com = {0.0, y0, cfg.command.vx, vy};
  return s;
}

inline EpisodeTrace run_episode(const EpisodeConfig& cfg) {
  cfg.validate();
  const BeamHeightField field = make_beam_heightfield(cfg.beam);
  const DisturbanceSpec noise{cfg.touchdown_noise, cfg.seed};
  const StartState start = standardized_start(cfg);

  EpisodeTrace trace;
  CoMState com = start.com;
  FootPose stance = start.right;
  GaitPhase phase{0.0, Side::left, cfg.templ.step_period};
  Residual r_prev{};
  double time = 0.0;
  double prev_com_x = com.x;
  trace.max_com_x = com.x;

  auto plan = detail::plan_step(cfg, field, com, phase, stance, r_prev, 0);

  auto finish = [&](Termination t) {
    trace.termination = t;
    trace.end_time = time;
    trace.final_com = com;
    return trace;
  };

  // Integer tick count keeps the time stamps free of accumulated rounding.
  for (std::uint64_t tick = 1;; ++tick) {
    com = propagate(com, stance.position(), cfg.pendulum, cfg.dt);
    time = static_cast<double>(tick) * cfg.dt;
    trace.max_com_x = std::max(trace.max_com_x, com.x);

    if (std::abs(com.y - stance.y) > cfg.diverge_offset ||
        std::hypot(com.vx, com.vy) > cfg.diverge_speed) {
      return finish(Termination::com_diverged);
    }
    if (com.x >= cfg.beam.length) return finish(Termination::reached_end);

    const auto adv = advance_phase(phase, cfg.dt);
    phase = adv.phase;
    if (adv.transition) {
      TransitionRecord rec;
      rec.index = trace.records.size();
      rec.time = time;
      rec.side = other(phase.swing);
      rec.u_temp = plan.u_temp;
      rec.r = plan.r;
      rec.u_final = plan.u_final;
      rec.footfall = apply_touchdown(plan.u_final, noise, rec.index);
      rec.com = com;
      rec.on_beam = check_footfall(rec.footfall, cfg.beam);

      // A step past the far end inside the beam's lateral band lands on the
      // exit side: the traversal is complete and the step is not a beam
      // footfall, so it is not recorded.
      if (rec.footfall.x > cfg.beam.length &&
          std::abs(rec.footfall.y - cfg.beam.centerline_y) <= 0.5 * cfg.beam.width) {
        return finish(Termination::reached_end);
      }
      rec.reward = detail::realized_reward(cfg, field, rec, stance, prev_com_x, r_prev);
      trace.records.push_back(rec);
      if (!rec.on_beam) return finish(Termination::footfall_off_beam);
      stance = rec.footfall;
      r_prev = rec.r;
      prev_com_x = com.x;
      if (trace.records.size() >= cfg.max_steps) return finish(Termination::timeout);
      plan = detail::plan_step(cfg, field, com, phase, stance, r_prev, trace.records.size());
    }
    if (time >= cfg.max_time) return finish(Termination::timeout);
  }
}

}  // namespace beamstep
