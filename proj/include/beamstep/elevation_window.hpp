#pragma once

// Forward elevation window: an 11 x 17 body-frame height grid flattened
// column-major (near-to-far within a column, columns from y_min to y_max).
// The heightfield sampler and the point-cloud builder share WindowSpec and
// grid_index, so both paths emit the same layout.

#include <algorithm>
#include <array>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "beamstep/footstep_template.hpp"
#include "beamstep/text_io.hpp"

namespace beamstep {

struct WindowSpec {
  static constexpr double x_min = 0.1;
  static constexpr double x_max = 1.1;
  static constexpr double y_min = -0.8;
  static constexpr double y_max = 0.8;
  static constexpr double spacing = 0.1;
  static constexpr std::size_t rows = 11;  // forward
  static constexpr std::size_t cols = 17;  // lateral
  static constexpr std::size_t size = rows * cols;

  static double row_x(std::size_t row) { return x_min + spacing * static_cast<double>(row); }
  static double col_y(std::size_t col) { return y_min + spacing * static_cast<double>(col); }
};

static_assert(WindowSpec::size == 187);

struct GridCell {
  std::size_t row;
  std::size_t col;
  friend bool operator==(const GridCell&, const GridCell&) = default;
};

inline std::size_t grid_index(std::size_t row, std::size_t col) {
  if (row >= WindowSpec::rows || col >= WindowSpec::cols) {
    throw std::out_of_range("grid_index: cell (" + std::to_string(row) + ", " +
                            std::to_string(col) + ") outside the 11x17 window");
  }
  return col * WindowSpec::rows + row;
}

inline GridCell grid_cell(std::size_t index) {
  if (index >= WindowSpec::size) {
    throw std::out_of_range("grid_cell: index " + std::to_string(index) + " outside 0..186");
  }
  return {index % WindowSpec::rows, index / WindowSpec::rows};
}

/// Body-frame coordinates of a window cell center.
inline Vec2 cell_center(std::size_t index) {
  const auto c = grid_cell(index);
  return {WindowSpec::row_x(c.row), WindowSpec::col_y(c.col)};
}

struct BodyPose {
  double x{0.0};
  double y{0.0};
  double heading{0.0};
};

inline std::array<Vec2, WindowSpec::size> window_points(const BodyPose& pose) {
  std::array<Vec2, WindowSpec::size> pts{};
  for (std::size_t i = 0; i < WindowSpec::size; ++i) {
    pts[i] = Vec2{pose.x, pose.y} + rotate(cell_center(i), pose.heading);
  }
  return pts;
}

enum class WindowProvenance { heightfield, pointcloud };

struct ElevationWindow {
  std::array<double, WindowSpec::size> heights{};
  WindowProvenance provenance{WindowProvenance::heightfield};

  double at(std::size_t row, std::size_t col) const { return heights[grid_index(row, col)]; }
  friend bool operator==(const ElevationWindow&, const ElevationWindow&) = default;
};

/// Total height query over the world plane.
template <class F>
concept HeightField = requires(const F& f, double x, double y) {
  { f(x, y) } -> std::convertible_to<double>;
};

template <HeightField F>
ElevationWindow sample_from_heightfield(const F& field, const BodyPose& pose) {
  ElevationWindow w;
  w.provenance = WindowProvenance::heightfield;
  const auto pts = window_points(pose);
  for (std::size_t i = 0; i < WindowSpec::size; ++i) {
    w.heights[i] = static_cast<double>(field(pts[i].x, pts[i].y));
  }
  return w;
}

// ---------------------------------------------------------------------------
// Point-cloud path

struct Point3 {
  double x{0.0};
  double y{0.0};
  double z{0.0};
};

/// Rigid transform p' = R p + t, used for the IMU gravity alignment.
struct RigidTransform {
  std::array<double, 9> rotation{1, 0, 0, 0, 1, 0, 0, 0, 1};  // row-major
  Point3 translation{};

  static RigidTransform identity() { return {}; }

  /// Z-Y-X (yaw, pitch, roll) Euler angles.
  static RigidTransform from_rpy(double roll, double pitch, double yaw, Point3 t = {}) {
    const double cr = std::cos(roll), sr = std::sin(roll);
    const double cp = std::cos(pitch), sp = std::sin(pitch);
    const double cy = std::cos(yaw), sy = std::sin(yaw);
    RigidTransform tf;
    tf.rotation = {cy * cp, cy * sp * sr - sy * cr, cy * sp * cr + sy * sr,
                   sy * cp, sy * sp * sr + cy * cr, sy * sp * cr - cy * sr,
                   -sp,     cp * sr,                cp * cr};
    tf.translation = t;
    return tf;
  }

  Point3 apply(const Point3& p) const {
    const auto& r = rotation;
    return {r[0] * p.x + r[1] * p.y + r[2] * p.z + translation.x,
            r[3] * p.x + r[4] * p.y + r[5] * p.z + translation.y,
            r[6] * p.x + r[7] * p.y + r[8] * p.z + translation.z};
  }
};

struct PointCloud {
  std::vector<Point3> points;
  RigidTransform gravity_transform{};
};

/// One "x y z" triple per line, see parse_triples.
inline std::vector<Point3> parse_point_cloud(std::istream& in) {
  std::vector<Point3> pts;
  for (const auto& t : parse_triples(in)) pts.push_back({t[0], t[1], t[2]});
  return pts;
}

struct CloudBinning {
  double initial_bin{0.10};
  double bin_step{0.05};
  double max_bin{0.30};
  double z_offset{0.38};
  double clamp_min{-1.4};
  double clamp_max{-0.7};
};

inline ElevationWindow build_from_pointcloud(const PointCloud& cloud,
                                             const CloudBinning& cfg = {}) {
  // Gravity alignment, then crop to the window coverage.
  std::vector<Point3> roi;
  roi.reserve(cloud.points.size());
  for (const auto& raw : cloud.points) {
    const Point3 p = cloud.gravity_transform.apply(raw);
    if (p.x >= WindowSpec::x_min && p.x <= WindowSpec::x_max && p.y >= WindowSpec::y_min &&
        p.y <= WindowSpec::y_max) {
      roi.push_back(p);
    }
  }

  // Bin sides 0.10, 0.15, ..., 0.30, built by integer steps to avoid drift.
  std::vector<double> sides;
  for (int k = 0;; ++k) {
    const double side = cfg.initial_bin + cfg.bin_step * k;
    if (side > cfg.max_bin + 1e-12) break;
    sides.push_back(side);
  }

  ElevationWindow w;
  w.provenance = WindowProvenance::pointcloud;
  for (std::size_t i = 0; i < WindowSpec::size; ++i) {
    const Vec2 c = cell_center(i);
    double value = cfg.clamp_min;
    for (const double side : sides) {
      const double half = 0.5 * side;
      double zmax = -std::numeric_limits<double>::infinity();
      bool hit = false;
      for (const auto& p : roi) {
        if (std::abs(p.x - c.x) <= half && std::abs(p.y - c.y) <= half) {
          zmax = std::max(zmax, p.z);
          hit = true;
        }
      }
      if (hit) {
        value = std::clamp(zmax + cfg.z_offset, cfg.clamp_min, cfg.clamp_max);
        break;
      }
    }
    w.heights[i] = value;
  }
  return w;
}

// ---------------------------------------------------------------------------
// Text output

inline void write_window_flat(std::ostream& os, const ElevationWindow& w) {
  std::ostringstream buf;
  buf.imbue(std::locale::classic());
  buf.setf(std::ios::fixed);
  buf.precision(4);
  for (double h : w.heights) buf << h << '\n';
  os << buf.str();
}

/// Rows far-to-near (top of the page is forward), columns y_min to y_max.
inline void write_window_grid(std::ostream& os, const ElevationWindow& w) {
  std::ostringstream buf;
  buf.imbue(std::locale::classic());
  buf.setf(std::ios::fixed);
  buf.precision(2);
  buf << "# rows: x = 1.1 (top) .. 0.1 (bottom); cols: y = -0.8 .. 0.8\n";
  for (std::size_t r = WindowSpec::rows; r-- > 0;) {
    for (std::size_t c = 0; c < WindowSpec::cols; ++c) {
      if (c) buf << ' ';
      buf.width(6);
      buf << w.at(r, c);
    }
    buf << '\n';
  }
  os << buf.str();
}

inline std::vector<double> read_window_flat(std::istream& in) {
  std::vector<double> v;
  in.imbue(std::locale::classic());
  double h;
  while (in >> h) v.push_back(h);
  return v;
}

}  // namespace beamstep
