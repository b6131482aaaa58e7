// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "beamstep/beam_sim.hpp"
#include "beamstep/elevation_window.hpp"
#include "beamstep/experiment.hpp"
#include "beamstep/lipm.hpp"
#include "beamstep/metrics.hpp"
#include "beamstep/planner.hpp"
#include "beamstep/residual.hpp"
#include "beamstep/reward.hpp"
#include "oracles.hpp"

using namespace beamstep;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass{true};
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

std::string pct(double v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(0) << v << '%';
  return os.str();
}

std::string num(double v, int prec = 4) {
  std::ostringstream os;
  os << std::setprecision(prec) << v;
  return os.str();
}

// Shared trial setup: 0.20 m x 3 m beam, start 3 cm off the centerline.
ExperimentConfig beam_trials(std::vector<BeamSpec> beams, std::vector<MethodSpec> methods) {
  ExperimentConfig cfg;
  cfg.trials = 20;
  cfg.seed_base = 1000;
  cfg.base.start_lateral_offset = 0.03;
  cfg.beams = std::move(beams);
  cfg.methods = std::move(methods);
  cfg.validate();
  return cfg;
}

MethodSpec method(const std::string& name, PolicyVariant v, DisturbanceBounds noise) {
  MethodSpec m;
  m.name = name;
  m.policy.variant = v;
  m.noise = noise;
  return m;
}

BeamSpec beam(double width) {
  BeamSpec b;
  b.width = width;
  b.length = 3.0;
  return b;
}

constexpr DisturbanceBounds kNoise1{0.005, 0.005, 0.0125};
constexpr DisturbanceBounds kNoise2{0.01, 0.01, 0.025};
constexpr DisturbanceBounds kNoise3{0.02, 0.02, 0.05};

void baseline_ordering(Verdict& v) {
  const auto cfg = beam_trials({beam(0.20)}, {method("template_only", PolicyVariant::zero, kNoise3),
                                              method("residual_grid", PolicyVariant::grid_search, kNoise3)});
  const auto res = run_experiment(cfg, 1);
  const auto& t = res[0].report;
  const auto& r = res[1].report;
  const double gap = r.success_rate - t.success_rate;
  const double ratio = r.centerline_dev.mean / t.centerline_dev.mean;
  v.detail << "success template " << pct(t.success_rate) << ", residual " << pct(r.success_rate)
           << " (gap " << gap << " pp); centerline dev " << num(t.centerline_dev.mean) << " -> "
           << num(r.centerline_dev.mean) << " m (ratio " << num(ratio, 3) << ")";
  v.require(gap >= 30.0, "success gap >= 30 pp");
  v.require(ratio < 0.7, "deviation ratio < 0.7");
}

void robustness_ablation(Verdict& v) {
  // Degradation is measured against the same method without touchdown noise.
  const DisturbanceBounds none{};
  const auto cfg = beam_trials(
      {beam(0.20)}, {method("t0", PolicyVariant::zero, none), method("t1", PolicyVariant::zero, kNoise1),
                     method("t2", PolicyVariant::zero, kNoise2), method("t3", PolicyVariant::zero, kNoise3),
                     method("r0", PolicyVariant::grid_search, none),
                     method("r1", PolicyVariant::grid_search, kNoise1),
                     method("r2", PolicyVariant::grid_search, kNoise2),
                     method("r3", PolicyVariant::grid_search, kNoise3)});
  const auto res = run_experiment(cfg, 1);
  double ts[4], rs[4];
  for (int i = 0; i < 4; ++i) {
    ts[i] = res[i].report.success_rate;
    rs[i] = res[4 + i].report.success_rate;
  }
  v.detail << "template success " << pct(ts[0]) << " | " << pct(ts[1]) << " " << pct(ts[2]) << " "
           << pct(ts[3]) << "; residual " << pct(rs[0]) << " | " << pct(rs[1]) << " " << pct(rs[2])
           << " " << pct(rs[3]);
  v.require(ts[1] >= ts[2] && ts[2] >= ts[3] && ts[3] < ts[1], "template success monotone in noise");
  for (int i = 1; i <= 3; ++i) {
    const double dt = ts[0] - ts[i];
    const double dr = rs[0] - rs[i];
    v.require(dr < dt, "residual degrades less at level " + std::to_string(i));
  }
}

void width_sweep(Verdict& v) {
  const auto cfg = beam_trials({beam(0.25), beam(0.20), beam(0.15)},
                               {method("residual_grid", PolicyVariant::grid_search, kNoise3)});
  const auto res = run_experiment(cfg, 1);
  std::size_t checked = 0;
  bool all_on = true;
  for (const auto& cell : res) {
    for (std::size_t t = 0; t < cell.traces.size(); ++t) {
      if (!cell.trials[t].success) continue;
      for (const auto& rec : cell.traces[t].records) {
        ++checked;
        all_on = all_on && check_footfall(rec.footfall, cfg.beams[cell.beam]);
      }
    }
  }
  v.detail << "residual success " << pct(res[0].report.success_rate) << " / "
           << pct(res[1].report.success_rate) << " / " << pct(res[2].report.success_rate)
           << " at 0.25/0.20/0.15 m; " << checked << " footfalls in successful trials checked";
  v.require(res[0].report.success_rate >= res[1].report.success_rate &&
                res[1].report.success_rate >= res[2].report.success_rate,
            "success non-increasing as width shrinks");
  v.require(all_on, "every footfall of a successful trial on the beam");
}

void dynamics_invariants(Verdict& v) {
  std::mt19937_64 rng(20240601);
  std::uniform_real_distribution<double> pos(-0.5, 0.5), vel(-1.0, 1.0), dt(0.0, 1.0),
      height(0.5, 1.2);
  double e_err = 0, s_err = 0, x_err = 0, o_err = 0;
  for (int i = 0; i < 10000; ++i) {
    const PendulumParams p(height(rng));
    const CoMState s{pos(rng), pos(rng), vel(rng), vel(rng)};
    const Vec2 st{pos(rng), pos(rng)};
    const double t1 = dt(rng), t2 = dt(rng);
    const Vec2 e0 = orbital_energy(s, st, p.omega0());
    const Vec2 e1 = orbital_energy(propagate(s, st, p, t1), st, p.omega0());
    e_err = std::max({e_err, std::abs(e0.x - e1.x), std::abs(e0.y - e1.y)});

    const double a = 0.5 * t1, b = 0.5 * t2;
    const CoMState two = propagate(propagate(s, st, p, a), st, p, b);
    const CoMState one = propagate(s, st, p, a + b);
    s_err = std::max({s_err, std::abs(two.x - one.x), std::abs(two.y - one.y),
                      std::abs(two.vx - one.vx), std::abs(two.vy - one.vy)});

    const Vec2 ex = orbital_energy(s, xcom(s, p.omega0()), p.omega0());
    x_err = std::max({x_err, std::abs(ex.x), std::abs(ex.y)});
  }
  // The RK4 oracle at 1e-5 s steps is expensive; a smaller sample suffices.
  std::uniform_real_distribution<double> short_dt(0.0, 0.5);
  for (int i = 0; i < 2000; ++i) {
    const PendulumParams p(height(rng));
    const CoMState s{pos(rng), pos(rng), vel(rng), vel(rng)};
    const Vec2 st{pos(rng), pos(rng)};
    const double t = short_dt(rng);
    const CoMState a = propagate(s, st, p, t);
    const CoMState b = oracle::rk4(s, st, p.omega0(), t);
    o_err = std::max({o_err, std::abs(a.x - b.x), std::abs(a.y - b.y), std::abs(a.vx - b.vx),
                      std::abs(a.vy - b.vy)});
  }
  v.detail << "energy drift " << num(e_err, 2) << ", semigroup " << num(s_err, 2) << ", RK4 gap "
           << num(o_err, 2) << ", capture identity " << num(x_err, 2);
  v.require(e_err < 1e-9, "energy conservation < 1e-9");
  v.require(s_err < 1e-10, "semigroup < 1e-10");
  v.require(o_err < 1e-6, "RK4 oracle < 1e-6");
  v.require(x_err <= 1e-12, "capture identity <= 1e-12");
}

void residual_contracts(Verdict& v) {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> big(-1.0, 1.0), bound(0.0, 0.3), ang(-4.0, 4.0),
      pos(-5.0, 5.0);
  bool sat_ok = true, stance_ok = true;
  double comp_err = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const ResidualBounds S{bound(rng), bound(rng), bound(rng)};
    const Residual r{big(rng), big(rng), big(rng)};
    const Residual s = saturate(r, S);
    sat_ok = sat_ok && S.contains(s) && saturate(s, S) == s &&
             (std::abs(r.dx) > S.sx || s.dx == r.dx) && (std::abs(r.dy) > S.sy || s.dy == r.dy) &&
             (std::abs(r.dpsi) > S.spsi || s.dpsi == r.dpsi);

    const FootTargets temp{make_pose(pos(rng), pos(rng), ang(rng)),
                           make_pose(pos(rng), pos(rng), ang(rng))};
    const Side swing = i % 2 ? Side::left : Side::right;
    const double heading = ang(rng);
    const FootTargets out = apply_residual(temp, swing, r, S, heading);
    stance_ok = stance_ok &&
                std::memcmp(&out[other(swing)], &temp[other(swing)], sizeof(FootPose)) == 0;

    const FootPose c = compose(temp[swing], s, heading);
    const FootPose o = oracle::compose(temp[swing], s.dx, s.dy, s.dpsi, heading);
    comp_err = std::max({comp_err, std::abs(c.x - o.x), std::abs(c.y - o.y),
                         std::abs(std::remainder(c.psi - o.psi, 2 * std::numbers::pi))});
    comp_err = std::max({comp_err, std::abs(out[swing].x - o.x), std::abs(out[swing].y - o.y)});
  }

  // Grid search against every value it evaluated.
  const BeamHeightField field = make_beam_heightfield({});
  std::uniform_real_distribution<double> ty(-0.12, 0.12), vy(-0.3, 0.3), tpsi(-0.2, 0.2);
  std::size_t lattices = 0, evaluated = 0;
  bool grid_ok = true;
  for (int i = 0; i < 200; ++i) {
    StepContext ctx;
    const double sign = i % 2 ? 1.0 : -1.0;
    ctx.stance = {1.0, -sign * 0.04, 0.0};
    ctx.swing = sign > 0 ? Side::left : Side::right;
    ctx.touchdown = {1.05, 0.0, 0.4, vy(rng)};
    const FootPose u{1.1, ty(rng), tpsi(rng)};
    std::vector<std::pair<Residual, double>> seen;
    const auto res = grid_search(
        [&](const Residual& r) {
          StepContext c = ctx;
          c.r = r;
          const double val = step_objective(compose(u, r, 0.0), field, c, {}).total;
          seen.emplace_back(r, val);
          return val;
        },
        {});
    ++lattices;
    evaluated += seen.size();
    grid_ok = grid_ok && seen.size() == 11u * 11u * 7u;
    for (const auto& [r, val] : seen) {
      if (r == res.best) continue;
      grid_ok = grid_ok && !preferred(val, r, res.value, res.best);
    }
  }
  v.detail << "10000 saturations, stance checks and compositions (max oracle gap "
           << num(comp_err, 2) << "); " << lattices << " lattices / " << evaluated
           << " points exhaustively checked";
  v.require(sat_ok, "saturation bounds exact");
  v.require(stance_ok, "stance target bit-identical");
  v.require(comp_err < 1e-12, "compose matches rotation oracle < 1e-12");
  v.require(grid_ok, "grid search optimal over every evaluated point");
}

std::string window_bytes(const std::string& cloud) {
  std::ifstream in(oracle::data(cloud));
  PointCloud c;
  c.points = parse_point_cloud(in);
  std::ostringstream os;
  write_window_flat(os, build_from_pointcloud(c));
  return os.str();
}

void window_conformance(Verdict& v) {
  bool bij = true;
  for (std::size_t i = 0; i < WindowSpec::size; ++i) {
    const GridCell c = grid_cell(i);
    bij = bij && grid_index(c.row, c.col) == i;
  }
  for (std::size_t r = 0; r < WindowSpec::rows; ++r) {
    for (std::size_t c = 0; c < WindowSpec::cols; ++c) {
      bij = bij && grid_cell(grid_index(r, c)) == GridCell{r, c};
    }
  }
  int golden = 0;
  for (const std::string f : {"flat", "empty", "three"}) {
    golden += window_bytes("cloud_" + f + ".txt") ==
              oracle::slurp(oracle::data("window_" + f + ".golden"));
  }
  // Levels chosen so that (level - 0.38) + 0.38 == level in double precision.
  bool constant = true;
  for (double level : {-0.85, -1.1, -1.25}) {
    std::vector<Point3> pts;
    for (int i = 0; i <= 100; ++i) {
      for (int j = 0; j <= 160; ++j) pts.push_back({0.1 + 0.01 * i, -0.8 + 0.01 * j, level - 0.38});
    }
    PointCloud cloud;
    cloud.points = pts;
    const auto a = build_from_pointcloud(cloud);
    const auto b = sample_from_heightfield([level](double, double) { return level; }, {});
    constant = constant && a.heights == b.heights;
  }
  v.detail << "bijection " << (bij ? "ok" : "broken") << ", golden fixtures " << golden
           << "/3, constant-field agreement " << (constant ? "exact" : "inexact");
  v.require(bij, "grid_index bijection");
  v.require(golden == 3, "golden windows");
  v.require(constant, "heightfield and point cloud agree on constant fields");
}

void reward_suite(Verdict& v) {
  const BeamHeightField field = make_beam_heightfield({});
  int rows = 0, ok = 0;
  auto row = [&](bool good) {
    ++rows;
    ok += good;
  };
  auto near = [](double a, double b, double tol) { return std::abs(a - b) <= tol; };
  constexpr double kTol = 1e-9;
  const double pi = std::numbers::pi;

  row(r_footstep_safety({1.0, 0.0, 0.0}, field, -0.2, 0.05) == 0.0);
  row(r_footstep_safety({1.0, 0.5, 0.0}, field, -0.2, 0.05) == -1.0);
  {
    const double m = 3 * -1.4 / 9.0;
    const double var = (6 * m * m + 3 * (-1.4 - m) * (-1.4 - m)) / 9.0;
    const double s = r_footstep_safety({1.0, 0.09, 0.0}, field, -0.2, 0.02);
    row(s < 0.0 && near(s, -var, kTol));
  }
  row(r_beam_balance(0.2, 0.2, 0.1) == 1.0);
  row(near(r_beam_balance(0.1, 0.0, 0.1), std::exp(-1.0), kTol));
  row(r_beam_balance(0.03, 0.0, 0.1) == r_beam_balance(-0.03, 0.0, 0.1));
  row(near(r_forward(1.2, 1.0), 0.2, kTol));
  row(r_forward(0.9, 1.0) == 0.0);
  row(r_forward(1.0, 1.0) == 0.0);
  row(r_face_forward(0.0) == 1.0);
  row(near(r_face_forward(pi), std::exp(-pi), kTol));
  row(r_face_forward(0.7) == r_face_forward(-0.7));
  row(r_feet_prox({0.3, 0.1, 0}, {0.1, -0.1, 0}, 0.1) == 0.0);
  row(near(r_feet_prox({0.3, 0.1, 0}, {0.3, -0.1, 0}, 0.1), -0.1, kTol));
  row(near(r_feet_prox({0.36, 0.1, 0}, {0.3, -0.1, 0}, 0.1), -0.04, kTol));
  {
    StepOutcome o;
    o.footfall = o.target = {0.5, 0.05, 0.1};
    o.contact_right = true;
    row(near(r_sched_tracking(o), 6.5, kTol));
    o.footfall = {1.5, 0.05, 0.1};
    row(near(r_sched_tracking(o), 1.0 + 5.0 * std::exp(-1.0) + 0.5, kTol));
    o.footfall = o.target;
    o.contact_right = false;
    o.contact_left = true;
    row(near(r_sched_tracking(o), -1.0 + 5.5, kTol));
  }
  row(r_action_reg({}, {}) == 0.0);
  row(near(r_action_reg({0.1, 0, 0}, {}), -0.02, kTol));
  {
    const Residual r{0.02, -0.03, 0.1};
    row(r_action_reg(r, r) == -r.squared_norm());
  }
  StepContext ctx;
  ctx.stance = {1.0, -0.04, 0.0};
  ctx.swing = Side::left;
  ctx.touchdown = {1.05, 0.0, 0.4, 0.05};
  {
    RewardWeights zero;
    zero.footstep_safety = zero.beam_balance = zero.forward = zero.face_forward = 0.0;
    zero.feet_prox = zero.sched = zero.mag = zero.smooth = 0.0;
    row(step_objective({1.1, 0.04, 0.0}, field, ctx, zero).total == 0.0);
    row(step_objective({1.1, 0.04, 0.0}, field, ctx, {}).total >
        step_objective({1.1, 0.4, 0.0}, field, ctx, {}).total);
    const RewardWeights w2 = RewardWeights{}.scaled(2.0);
    auto best = [&](const RewardWeights& w) {
      return grid_search(
                 [&](const Residual& r) {
                   StepContext c = ctx;
                   c.r = r;
                   return step_objective(compose({1.1, 0.08, 0.0}, r, 0.0), field, c, w).total;
                 },
                 {})
          .best;
    };
    row(step_objective({1.1, 0.04, 0.0}, field, ctx, w2).total ==
            2.0 * step_objective({1.1, 0.04, 0.0}, field, ctx, {}).total &&
        best({}) == best(w2));
  }

  // Safety dominance on constructed edge-proximal instances.
  std::mt19937_64 rng(555);
  std::uniform_real_distribution<double> inset(-0.02, 0.02), vy(-0.3, 0.3), px(0.95, 1.2);
  int inside = 0;
  for (int i = 0; i < 50; ++i) {
    const double sign = i % 2 ? 1.0 : -1.0;
    StepContext c0;
    c0.stance = {1.0, -sign * 0.04, 0.0};
    c0.swing = sign > 0 ? Side::left : Side::right;
    c0.touchdown = {1.05, 0.0, 0.4, vy(rng)};
    const FootPose u{px(rng), sign * (0.1 + inset(rng)), 0.0};
    const auto res = grid_search(
        [&](const Residual& r) {
          StepContext c = c0;
          c.r = r;
          return step_objective(compose(u, r, 0.0), field, c, {}).total;
        },
        {});
    inside += std::abs(compose(u, res.best, 0.0).y) < 0.1;
  }
  v.detail << ok << "/" << rows << " example rows reproduced; maximizer strictly on-beam in "
           << inside << "/50 edge instances";
  v.require(ok == rows, "all example rows");
  v.require(inside == 50, "safety dominance on 50 instances");
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string("BEAMSTEP_LOG=quiet ") + BEAMSTEP_CLI + " " + args + " > /dev/null";
  const int st = std::system(cmd.c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

std::map<std::string, std::string> tree_bytes(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = oracle::slurp(e.path().string());
  }
  return out;
}

void determinism(Verdict& v) {
  const std::string cfg = std::string(BEAMSTEP_SOURCE_DIR) + "/configs/beam_comparison.json";
  const fs::path base = fs::temp_directory_path() / "beamstep_acceptance";
  fs::remove_all(base);
  const fs::path a = base / "jobs1_a", b = base / "jobs1_b", c = base / "jobs8";
  int rc = run_cli("run --config " + cfg + " --jobs 1 --out-dir " + a.string());
  rc |= run_cli("run --config " + cfg + " --jobs 1 --out-dir " + b.string());
  rc |= run_cli("run --config " + cfg + " --jobs 8 --out-dir " + c.string());
  v.require(rc == 0, "CLI runs exit 0");
  if (rc != 0) return;
  const auto ta = tree_bytes(a), tb = tree_bytes(b), tc = tree_bytes(c);
  v.detail << ta.size() << " output files compared (report.csv + traces) across 3 invocations";
  v.require(ta.count("report.csv") == 1 && ta.size() > 2, "CSV and traces written");
  v.require(ta == tb, "two --jobs 1 runs byte-identical");
  v.require(ta == tc, "--jobs 1 and --jobs 8 byte-identical");
  fs::remove_all(base);
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double budget_s;
    std::function<void(Verdict&)> check;
  };
  const std::vector<Criterion> criteria = {
      {1, "baseline ordering", 60, baseline_ordering},
      {2, "robustness to touchdown noise", 120, robustness_ablation},
      {3, "beam-width sweep", 0, width_sweep},
      {4, "dynamics invariants", 10, dynamics_invariants},
      {5, "residual interface contracts", 0, residual_contracts},
      {6, "elevation window conformance", 5, window_conformance},
      {7, "reward terms", 0, reward_suite},
      {8, "end-to-end determinism", 0, determinism},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    Verdict v;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      c.check(v);
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail << " [exception: " << e.what() << "]";
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.budget_s > 0 && secs >= c.budget_s) {
      v.pass = false;
      v.detail << " [over time budget " << c.budget_s << " s]";
    }
    failed += v.pass ? 0 : 1;
    std::cout << "criterion " << c.id << " " << (v.pass ? "PASS" : "FAIL") << " " << c.name << ": "
              << v.detail.str() << " (" << std::fixed << std::setprecision(2) << secs << " s)"
              << std::defaultfloat << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
