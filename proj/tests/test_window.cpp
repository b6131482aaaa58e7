#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "beamstep/beam_sim.hpp"
#include "beamstep/elevation_window.hpp"
#include "oracles.hpp"

using namespace beamstep;

TEST(GridIndex, Ordering) {
  EXPECT_EQ(grid_index(0, 0), 0u);
  EXPECT_EQ(grid_index(10, 0), 10u);
  EXPECT_EQ(grid_index(0, 1), 11u);
  EXPECT_EQ(grid_index(10, 16), 186u);
  EXPECT_DOUBLE_EQ(cell_center(0).x, 0.1);
  EXPECT_DOUBLE_EQ(cell_center(0).y, -0.8);
  EXPECT_DOUBLE_EQ(cell_center(11).y, -0.7);
}

TEST(GridIndex, Bijection) {
  std::set<std::size_t> seen;
  for (std::size_t i = 0; i < WindowSpec::size; ++i) {
    const GridCell c = grid_cell(i);
    ASSERT_EQ(grid_index(c.row, c.col), i);
    seen.insert(i);
  }
  for (std::size_t r = 0; r < WindowSpec::rows; ++r) {
    for (std::size_t c = 0; c < WindowSpec::cols; ++c) {
      const GridCell g = grid_cell(grid_index(r, c));
      ASSERT_EQ(g.row, r);
      ASSERT_EQ(g.col, c);
    }
  }
  EXPECT_EQ(seen.size(), 187u);
}

TEST(GridIndex, OutOfRangeThrows) {
  EXPECT_THROW(grid_index(11, 0), std::out_of_range);
  EXPECT_THROW(grid_index(0, 17), std::out_of_range);
  EXPECT_THROW(grid_cell(187), std::out_of_range);
}

TEST(WindowPoints, IdentityPose) {
  const auto pts = window_points({0, 0, 0});
  ASSERT_EQ(pts.size(), 187u);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    EXPECT_DOUBLE_EQ(pts[i].x, cell_center(i).x);
    EXPECT_DOUBLE_EQ(pts[i].y, cell_center(i).y);
  }
}

TEST(WindowPoints, HalfTurn) {
  const auto pts = window_points({1.0, 2.0, std::numbers::pi});
  EXPECT_NEAR(pts[0].x - 1.0, -0.1, 1e-15);
  EXPECT_NEAR(pts[0].y - 2.0, 0.8, 1e-15);
}

TEST(HeightfieldWindow, FlatPlane) {
  const auto w = sample_from_heightfield([](double, double) { return 0.0; }, {3, 1, 0.4});
  for (double h : w.heights) EXPECT_EQ(h, 0.0);
  EXPECT_EQ(w.provenance, WindowProvenance::heightfield);
}

TEST(HeightfieldWindow, BeamColumns) {
  const auto field = make_beam_heightfield({});
  const auto w = sample_from_heightfield(field, {1.0, 0.0, 0.0});
  for (std::size_t r = 0; r < WindowSpec::rows; ++r) {
    for (std::size_t c = 0; c < WindowSpec::cols; ++c) {
      const double y = WindowSpec::col_y(c);
      EXPECT_EQ(w.at(r, c), std::abs(y) <= 0.1 + 1e-12 ? 0.0 : -1.4) << r << "," << c;
    }
  }
}

TEST(HeightfieldWindow, TranslatesWithBody) {
  auto ramp = [](double x, double y) { return 0.3 * x - 0.2 * y; };
  const auto a = sample_from_heightfield(ramp, {0.0, 0.0, 0.0});
  const auto b = sample_from_heightfield(ramp, {0.5, -0.25, 0.0});
  for (std::size_t i = 0; i < WindowSpec::size; ++i) {
    EXPECT_NEAR(b.heights[i] - a.heights[i], 0.3 * 0.5 + 0.2 * 0.25, 1e-12);
  }
}

namespace {
ElevationWindow from_points(std::vector<Point3> pts) {
  PointCloud c;
  c.points = std::move(pts);
  return build_from_pointcloud(c);
}
}  // namespace

TEST(PointCloudWindow, ClampsHighPoints) {
  // Both points in the first bin of cell (4, 8) at (0.5, 0.0).
  const auto w = from_points({{0.5, 0.0, -1.05}, {0.51, 0.01, -1.12}});
  EXPECT_NEAR(w.at(4, 8), -0.70, 1e-12);
  EXPECT_EQ(w.provenance, WindowProvenance::pointcloud);
}

TEST(PointCloudWindow, ExpandsBin) {
  // 0.07 m off the cell center: outside the 0.10 bin, inside the 0.15 bin.
  const auto w = from_points({{0.5, 0.07, -1.30}});
  EXPECT_NEAR(w.at(4, 8), -0.92, 1e-12);
}

TEST(PointCloudWindow, EmptyFillsFloor) {
  const auto w = from_points({});
  for (double h : w.heights) EXPECT_EQ(h, -1.4);
}

TEST(PointCloudWindow, ValuesStayInClampRange) {
  std::vector<Point3> pts;
  for (int i = 0; i < 500; ++i) {
    pts.push_back({0.1 + 0.002 * i, -0.8 + 0.0032 * i, -3.0 + 0.01 * i});
  }
  const auto w = from_points(pts);
  for (double h : w.heights) {
    EXPECT_GE(h, -1.4);
    EXPECT_LE(h, -0.7);
  }
}

TEST(PointCloudWindow, GravityTransformAppliedBeforeCrop) {
  // Point sits behind the robot in the sensor frame; a half turn brings it in.
  PointCloud c;
  c.points = {{-0.5, 0.0, -1.2}};
  EXPECT_EQ(build_from_pointcloud(c).at(4, 8), -1.4);
  c.gravity_transform = RigidTransform::from_rpy(0, 0, std::numbers::pi);
  EXPECT_NEAR(build_from_pointcloud(c).at(4, 8), -0.82, 1e-12);
}

TEST(PointCloudWindow, ConstantFieldAgreesWithHeightfield) {
  for (double c : {-0.85, -1.1, -1.25}) {
    const double z = c - 0.38;
    ASSERT_EQ(z + 0.38, c) << "fixture level must survive the offset round trip";
    std::vector<Point3> pts;
    for (int i = 0; i <= 100; ++i) {
      for (int j = 0; j <= 160; ++j) pts.push_back({0.1 + 0.01 * i, -0.8 + 0.01 * j, z});
    }
    const auto cloud = from_points(pts);
    const auto field = sample_from_heightfield([c](double, double) { return c; }, {0, 0, 0});
    EXPECT_EQ(cloud.heights, field.heights);
  }
}

TEST(PointCloudWindow, ParseErrorNamesLine) {
  std::istringstream in("0.1 0.2 0.3\n# note\n0.1 oops 0.3\n");
  try {
    parse_point_cloud(in);
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  std::istringstream extra("0.1 0.2 0.3 0.4\n");
  EXPECT_THROW(parse_point_cloud(extra), ParseError);
  std::istringstream nan("nan 0 0\n");
  EXPECT_THROW(parse_point_cloud(nan), ParseError);
}

namespace {
std::string window_text(const std::string& cloud_file) {
  std::ifstream in(oracle::data(cloud_file));
  PointCloud c;
  c.points = parse_point_cloud(in);
  std::ostringstream os;
  write_window_flat(os, build_from_pointcloud(c));
  return os.str();
}
}  // namespace

TEST(PointCloudGolden, FlatPlaneAtClampCeiling) {
  EXPECT_EQ(window_text("cloud_flat.txt"), oracle::slurp(oracle::data("window_flat.golden")));
}

TEST(PointCloudGolden, EmptyCloud) {
  EXPECT_EQ(window_text("cloud_empty.txt"), oracle::slurp(oracle::data("window_empty.golden")));
}

TEST(PointCloudGolden, ThreePoints) {
  EXPECT_EQ(window_text("cloud_three.txt"), oracle::slurp(oracle::data("window_three.golden")));
}

TEST(WindowText, FlatRoundTrip) {
  const auto w = from_points({{0.5, 0.07, -1.30}});
  std::stringstream ss;
  write_window_flat(ss, w);
  const auto v = read_window_flat(ss);
  ASSERT_EQ(v.size(), 187u);
  for (std::size_t i = 0; i < v.size(); ++i) EXPECT_NEAR(v[i], w.heights[i], 5e-5);
}

TEST(WindowText, GridHasFarRowFirst) {
  const auto w = from_points({{1.1, -0.8, -1.0}});
  std::ostringstream os;
  write_window_grid(os, w);
  std::istringstream in(os.str());
  std::string header, first;
  std::getline(in, header);
  std::getline(in, first);
  EXPECT_EQ(first.substr(0, 6), " -0.70");
}
