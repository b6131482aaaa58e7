#pragma once

// Beam-aware step objective. Each term is a free function so the simulator can
// log it and the residual optimizers can score candidates with the same code.

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

#include "beamstep/elevation_window.hpp"
#include "beamstep/lipm.hpp"
#include "beamstep/residual.hpp"

namespace beamstep {

struct RewardWeights {
  double footstep_safety{5.0};
  double beam_balance{3.0};
  double forward{0.0};
  double face_forward{0.3};
  double feet_prox{2.0};
  double sched{1.0};
  double mag{0.1};
  double smooth{0.05};

  double h_th{-0.2};           // abyss threshold, m
  double sigma_balance{0.05};  // Gaussian width, m
  double d_min_feet{0.08};     // minimum inter-foot x distance, m
  double patch_radius{0.02};   // safety patch sample spacing, m

  bool valid() const {
    for (double w : {footstep_safety, beam_balance, forward, face_forward, feet_prox, sched, mag,
                     smooth, h_th, d_min_feet}) {
      if (!std::isfinite(w)) return false;
    }
    return sigma_balance > 0.0 && patch_radius > 0.0 && d_min_feet > 0.0;
  }

  RewardWeights scaled(double k) const {
    RewardWeights w = *this;
    w.footstep_safety *= k;
    w.beam_balance *= k;
    w.forward *= k;
    w.face_forward *= k;
    w.feet_prox *= k;
    w.sched *= k;
    w.mag *= k;
    w.smooth *= k;
    return w;
  }
};

// Tracking-term scalings used only inside r_sched_tracking.
inline constexpr double kTrackPosGain = 5.0;
inline constexpr double kTrackPosScale = 1.0;
inline constexpr double kTrackRotGain = 0.5;
inline constexpr double kTrackRotScale = 1.0;

template <HeightField F>
double r_footstep_safety(const FootPose& target, const F& field, double h_th,
                         double patch_radius) {
  const double abyss = static_cast<double>(field(target.x, target.y)) < h_th ? 1.0 : 0.0;
  std::array<double, 9> h{};
  std::size_t k = 0;
  for (int i = -1; i <= 1; ++i) {
    for (int j = -1; j <= 1; ++j) {
      h[k++] = static_cast<double>(field(target.x + i * patch_radius, target.y + j * patch_radius));
    }
  }
  double mean = 0.0;
  for (double v : h) mean += v;
  mean /= 9.0;
  double var = 0.0;
  for (double v : h) var += (v - mean) * (v - mean);
  var /= 9.0;
  return 0.0 - abyss - var;
}

inline double r_beam_balance(double base_y, double y_center, double sigma) {
  if (!(sigma > 0.0)) throw std::domain_error("r_beam_balance: sigma must be positive");
  const double u = (base_y - y_center) / sigma;
  return std::exp(-u * u);
}

inline double r_forward(double x_t, double x_prev) { return std::max(0.0, x_t - x_prev); }

/// Forward is the beam axis (world +x).
inline double r_face_forward(double target_psi) {
  return std::exp(-std::abs(normalize_angle(target_psi)));
}

inline double r_feet_prox(const FootPose& left, const FootPose& right, double d_min) {
  if (!(d_min > 0.0)) throw std::domain_error("r_feet_prox: d_min must be positive");
  return std::min(0.0, std::abs(left.x - right.x) - d_min);
}

struct StepOutcome {
  CoMState pre{};
  CoMState post{};
  Residual applied{};
  FootPose footfall{};
  FootPose target{};
  bool contact_left{false};
  bool contact_right{false};
  // +1 when the gait expects the right foot to land, -1 for the left.
  double schedule{1.0};
};

inline double r_sched_tracking(const StepOutcome& o) {
  const double contact = (o.contact_right ? 1.0 : 0.0) - (o.contact_left ? 1.0 : 0.0);
  const double pos_err = norm(o.footfall.position() - o.target.position());
  const double yaw_err = std::abs(normalize_angle(o.footfall.psi - o.target.psi));
  return contact * o.schedule + kTrackPosGain * std::exp(-pos_err / kTrackPosScale) +
         kTrackRotGain * std::exp(-yaw_err / kTrackRotScale);
}

inline double r_magnitude(const Residual& r) { return 0.0 - r.squared_norm(); }
inline double r_smoothness(const Residual& r, const Residual& r_prev) {
  return 0.0 - (r - r_prev).squared_norm();
}
inline double r_action_reg(const Residual& r, const Residual& r_prev) {
  return r_magnitude(r) + r_smoothness(r, r_prev);
}

inline double schedule_for(Side landing) { return landing == Side::right ? 1.0 : -1.0; }

enum class Term : std::size_t {
  footstep_safety,
  beam_balance,
  forward,
  face_forward,
  feet_prox,
  sched,
  mag,
  smooth,
};

inline constexpr std::size_t kTermCount = 8;
inline constexpr std::array<std::string_view, kTermCount> kTermNames = {
    "footstep_safety", "beam_balance", "forward", "face_forward",
    "feet_prox",       "sched",        "mag",     "smooth"};

struct ObjectiveBreakdown {
  std::array<double, kTermCount> raw{};       // unweighted term values
  std::array<double, kTermCount> weighted{};  // weight * raw
  double total{0.0};

  double operator[](Term t) const { return raw[static_cast<std::size_t>(t)]; }
};

class ObjectiveError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline ObjectiveBreakdown combine(const std::array<double, kTermCount>& raw,
                                  const RewardWeights& w) {
  const std::array<double, kTermCount> weights = {w.footstep_safety, w.beam_balance, w.forward,
                                                  w.face_forward,    w.feet_prox,    w.sched,
                                                  w.mag,             w.smooth};
  ObjectiveBreakdown b;
  b.raw = raw;
  for (std::size_t i = 0; i < kTermCount; ++i) {
    if (!std::isfinite(raw[i])) {
      throw ObjectiveError("objective term '" + std::string(kTermNames[i]) + "' is non-finite");
    }
    b.weighted[i] = weights[i] * raw[i];
    b.total += b.weighted[i];
  }
  return b;
}

/// What the objective knows when scoring a swing-foot candidate.
struct StepContext {
  CoMState touchdown{};  // CoM when the candidate lands
  FootPose stance{};     // foot that stays down during this swing
  Side swing{Side::left};
  Residual r{};
  Residual r_prev{};
  PendulumParams params{};
  double step_period{0.25};
  double y_center{0.0};
};

/// Scores a candidate. Balance and progress look at the CoM one step after the
/// candidate lands, treating the candidate as the next support point.
template <HeightField F>
ObjectiveBreakdown step_objective(const FootPose& candidate, const F& field,
                                  const StepContext& ctx, const RewardWeights& w) {
  const double omega0 = ctx.params.omega0();
  const CoMState next = propagate(ctx.touchdown, candidate.position(), ctx.params,
                                  ctx.step_period);
  const Vec2 xi_next = xcom(next, omega0);

  StepOutcome predicted;
  predicted.pre = ctx.touchdown;
  predicted.post = next;
  predicted.applied = ctx.r;
  predicted.footfall = candidate;
  predicted.target = candidate;
  predicted.contact_left = ctx.swing == Side::left;
  predicted.contact_right = ctx.swing == Side::right;
  predicted.schedule = schedule_for(ctx.swing);

  std::array<double, kTermCount> raw{};
  raw[0] = r_footstep_safety(candidate, field, w.h_th, w.patch_radius);
  raw[1] = r_beam_balance(xi_next.y, ctx.y_center, w.sigma_balance);
  raw[2] = r_forward(next.x, ctx.touchdown.x);
  raw[3] = r_face_forward(candidate.psi);
  raw[4] = r_feet_prox(candidate, ctx.stance, w.d_min_feet);
  raw[5] = r_sched_tracking(predicted);
  raw[6] = r_magnitude(ctx.r);
  raw[7] = r_smoothness(ctx.r, ctx.r_prev);
  return combine(raw, w);
}

}  // namespace beamstep
