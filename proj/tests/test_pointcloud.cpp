// Copyright 2026 The Veria Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <doctest.h>

#include <cmath>
#include <map>
#include <set>

#include "support.hpp"
#include "veria/error.hpp"
#include "veria/pointcloud.hpp"

using namespace veria;
using namespace veria::pointcloud;

namespace {

geometry::CameraIntrinsics cam500() {
  geometry::CameraIntrinsics c;
  c.fx = c.fy = 500;
  c.cx = 50;
  c.cy = 40;
  c.width = 100;
  c.height = 80;
  return c;
}

DepthMap plane(int w, int h, double d) {
  DepthMap out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) out.set(x, y, d);
  }
  return out;
}

geometry::PixelMask rect_mask(int w, int h, int l, int t, int r, int b) {
  geometry::PixelMask m(w, h);
  for (int y = t; y < b; ++y) {
    for (int x = l; x < r; ++x) m.set(x, y);
  }
  return m;
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::kInvalidArgument;
}

Vec3 spherical(double r, double elev, double az) {
  return {r * std::cos(elev) * std::cos(az), r * std::cos(elev) * std::sin(az),
          r * std::sin(elev)};
}

}  // namespace

TEST_SUITE("pointcloud") {

TEST_CASE("backprojection of a plane patch") {
  const auto cam = cam500();
  const auto mask = rect_mask(100, 80, 45, 35, 55, 45);
  const auto cloud = backproject_region(plane(100, 80, 10.0), mask, cam);
  REQUIRE(cloud.size() == 100);
  REQUIRE(cloud.source_px.size() == 100);
  std::set<double> xs, ys;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto& p = cloud.points[i];
    CHECK(p.z() == 10.0);
    const auto [px, py] = cloud.source_px[i];
    CHECK(p.x() == doctest::Approx((px + 0.5 - 50) / 500 * 10));
    CHECK(p.y() == doctest::Approx((py + 0.5 - 40) / 500 * 10));
    xs.insert(std::round(p.x() * 1e9) / 1e9);
    ys.insert(std::round(p.y() * 1e9) / 1e9);
  }
  CHECK(xs.size() == 10);
  CHECK(*std::next(xs.begin()) - *xs.begin() == doctest::Approx(0.02));
  CHECK(*std::next(ys.begin()) - *ys.begin() == doctest::Approx(0.02));
}

TEST_CASE("backprojection errors") {
  const auto cam = cam500();
  CHECK(code_of([&] {
          backproject_region(plane(100, 80, 10), geometry::PixelMask(100, 80), cam);
        }) == ErrorCode::kEmptyCloud);
  CHECK(code_of([&] {
          backproject_region(DepthMap(100, 80), rect_mask(100, 80, 0, 0, 5, 5), cam);
        }) == ErrorCode::kEmptyCloud);
}

TEST_CASE("contour filter keeps a uniform plane") {
  const auto cam = cam500();
  const auto mask = rect_mask(100, 80, 20, 20, 60, 50);
  const auto depth = plane(100, 80, 12.0);
  const auto cloud = backproject_region(depth, mask, cam);
  CHECK(contour_band_filter(cloud, mask, depth).size() == cloud.size());
  ContourFilterConfig none;
  none.band_px = 0;
  CHECK(contour_band_filter(cloud, mask, depth, none).size() == cloud.size());
}

TEST_CASE("contour filter removes exactly a deviating ring") {
  const auto cam = cam500();
  const int l = 20, t = 20, r = 60, b = 50;
  const auto mask = rect_mask(100, 80, l, t, r, b);
  DepthMap depth = plane(100, 80, 10.0);
  std::set<std::pair<int, int>> ring;
  for (int y = t; y < b; ++y) {
    for (int x = l; x < r; ++x) {
      if (x - l < 2 || r - 1 - x < 2 || y - t < 2 || b - 1 - y < 2) {
        ring.insert({x, y});
        depth.set(x, y, 15.0);
      }
    }
  }
  const auto cloud = backproject_region(depth, mask, cam);
  const auto kept = contour_band_filter(cloud, mask, depth);
  std::set<std::pair<int, int>> kept_px, removed;
  for (const auto& px : kept.source_px) kept_px.insert({px.x, px.y});
  for (const auto& px : cloud.source_px) {
    if (!kept_px.count({px.x, px.y})) removed.insert({px.x, px.y});
  }
  CHECK(removed == ring);
  CHECK(kept.size() == cloud.size() - ring.size());
}

TEST_CASE("anchor scale") {
  PointCloud c;
  c.points = {{0, 0, 0}, {1, 2, 0.8}, {-1, 0.5, 0.2}};
  const auto s = anchor_scale(c, 1.6);
  for (std::size_t i = 0; i < c.size(); ++i) CHECK(s.points[i] == 2.0 * c.points[i]);
  const auto same = anchor_scale(c, 0.8);
  for (std::size_t i = 0; i < c.size(); ++i) {
    CHECK((same.points[i] - c.points[i]).norm() < 1e-15);
  }
  PointCloud flat;
  flat.points = {{0, 0, 1}, {1, 0, 1}, {0, 1, 1 + 1e-6}};
  CHECK(code_of([&] { anchor_scale(flat, 1.0); }) == ErrorCode::kDegenerateExtent);
  CHECK(code_of([&] { anchor_scale(c, 0.0); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("anchor scale along an arbitrary up axis") {
  RandomStream rng(12);
  for (int i = 0; i < 200; ++i) {
    PointCloud c;
    for (int k = 0; k < 50; ++k) c.points.push_back(test::random_point(rng, -3, 3));
    Vec3 up = test::random_point(rng, -1, 1).normalized();
    const double target = rng.uniform(0.3, 5.0);
    const auto s = anchor_scale(c, target, up);
    double lo = 1e300, hi = -1e300;
    for (const auto& p : s.points) {
      lo = std::min(lo, p.dot(up));
      hi = std::max(hi, p.dot(up));
    }
    CHECK(std::abs((hi - lo) - target) <= 1e-9 * target);
  }
}

TEST_CASE("sensor presets") {
  const auto s32 = SensorSpec::beam32();
  const auto s64 = SensorSpec::beam64();
  CHECK(s32.rows() == 32);
  CHECK(s64.rows() == 64);
  CHECK_NOTHROW(s32.validate());
  CHECK(SensorSpec::preset("32-beam")->rows() == 32);
  CHECK_FALSE(SensorSpec::preset("16-beam").has_value());
  // cols = ceil(FOV / resolution)
  CHECK(s32.cols() == static_cast<int>(std::ceil((s32.fov_max - s32.fov_min) /
                                                 s32.azimuth_resolution - 1e-9)));
  for (int c = 0; c < s32.cols(); ++c) {
    const double a = s32.column_azimuth(c);
    CHECK(a >= s32.fov_min);
    CHECK(a < s32.fov_max);
  }
}

TEST_CASE("single point lands in its beam cell") {
  const auto s = SensorSpec::beam32();
  PointCloud c;
  c.points.push_back(spherical(10, s.elevations[5], 0.0));
  c.intensity.push_back(0.75);
  const auto ri = to_range_image(c, s);
  REQUIRE(ri.valid_count() == 1);
  const int col = static_cast<int>(std::floor((0.0 - s.fov_min) / s.azimuth_resolution));
  const auto k = ri.index(5, col);
  CHECK(ri.valid[k]);
  CHECK(ri.range[k] == doctest::Approx(10.0));
  CHECK(ri.intensity[k] == 0.75f);
}

TEST_CASE("nearest range wins a cell") {
  const auto s = SensorSpec::beam32();
  PointCloud c;
  c.points.push_back(spherical(12, s.elevations[7], 0.3));
  c.points.push_back(spherical(10, s.elevations[7], 0.3));
  const auto ri = to_range_image(c, s);
  REQUIRE(ri.valid_count() == 1);
  for (std::size_t k = 0; k < ri.range.size(); ++k) {
    if (ri.valid[k]) CHECK(ri.range[k] == doctest::Approx(10.0));
  }
}

TEST_CASE("rasterization equals brute-force grouping") {
  const auto s = SensorSpec::beam32();
  RandomStream rng(21);
  PointCloud c;
  for (int i = 0; i < 10000; ++i) {
    const double elev = rng.uniform(s.elevations.front(), s.elevations.back());
    const double az = rng.uniform(-0.5, 0.5);
    c.points.push_back(spherical(rng.uniform(1, 60), elev, az));
  }
  std::map<std::pair<int, int>, double> best;
  for (const auto& p : c.points) {
    const auto cell = sensor_cell(p, s);
    if (!cell) continue;
    const auto key = std::make_pair(cell->row, cell->col);
    const double r = static_cast<float>(cell->range);
    auto it = best.find(key);
    if (it == best.end() || r < it->second) best[key] = r;
  }
  const auto ri = to_range_image(c, s);
  CHECK(ri.valid_count() == best.size());
  for (const auto& [key, r] : best) {
    const auto k = ri.index(key.first, key.second);
    CHECK(ri.valid[k]);
    CHECK(ri.range[k] == static_cast<float>(r));
  }
}

TEST_CASE("points outside the sensor envelope are dropped") {
  const auto s = SensorSpec::beam32();
  PointCloud c;
  c.points.push_back(spherical(0.2, s.elevations[3], 0.0));   // too close
  c.points.push_back(spherical(500, s.elevations[3], 0.0));   // too far
  c.points.push_back(spherical(10, s.elevations.back() + 0.2, 0.0));  // above
  c.points.push_back(spherical(10, s.elevations.front() - 0.2, 0.0)); // below
  CHECK(to_range_image(c, s).valid_count() == 0);
  auto narrow = s;
  narrow.fov_min = -0.5;
  narrow.fov_max = 0.5;
  PointCloud side;
  side.points.push_back(spherical(10, s.elevations[3], 1.0));
  CHECK(to_range_image(side, narrow).valid_count() == 0);
}

TEST_CASE("single cell backprojects analytically") {
  const auto s = SensorSpec::beam64();
  RangeImage ri(s.rows(), s.cols(), false);
  const int row = 10, col = 123;
  ri.range[ri.index(row, col)] = 17.25f;
  ri.valid[ri.index(row, col)] = 1;
  const auto c = from_range_image(ri, s);
  REQUIRE(c.size() == 1);
  const double e = s.elevations[row];
  const double a = s.fov_min + (col + 0.5) * s.azimuth_resolution;
  CHECK((c.points[0] - spherical(17.25, e, a)).norm() < 1e-9);
  CHECK(from_range_image(RangeImage(s.rows(), s.cols(), false), s).empty());
}

TEST_CASE("raster fixed point and beam fidelity") {
  for (const auto& s : {SensorSpec::beam32(), SensorSpec::beam64()}) {
    RandomStream rng(s.rows());
    for (int trial = 0; trial < 20; ++trial) {
      RangeImage ri(s.rows(), s.cols(), true);
      for (std::size_t k = 0; k < ri.range.size(); ++k) {
        if (rng.uniform01() < 0.2) {
          ri.valid[k] = 1;
          ri.range[k] = static_cast<float>(rng.uniform(s.r_min, s.r_max));
          ri.intensity[k] = static_cast<float>(rng.uniform01());
        }
      }
      const auto cloud = from_range_image(ri, s);
      CHECK(to_range_image(cloud, s) == ri);
      std::set<double> elevations;
      for (const auto& p : cloud.points) {
        elevations.insert(std::round(std::atan2(p.z(), std::hypot(p.x(), p.y())) * 1e9));
      }
      CHECK(static_cast<int>(elevations.size()) <= s.rows());
    }
  }
}

TEST_CASE("plane target gets sparser with range") {
  const auto s = SensorSpec::beam32();
  std::size_t prev = std::numeric_limits<std::size_t>::max();
  for (double d = 10; d <= 50; d += 2) {
    PointCloud c;
    for (double y = -1.0; y <= 1.0; y += 0.01) {
      for (double z = -1.0; z <= 1.0; z += 0.01) c.points.push_back({d, y, z});
    }
    const auto n = to_range_image(c, s).valid_count();
    CHECK(n <= prev);
    prev = n;
  }
}

TEST_CASE("normals on a plane face the origin") {
  PointCloud c;
  for (int i = 0; i < 10; ++i) {
    for (int j = 0; j < 10; ++j) c.points.push_back({i * 0.1, j * 0.1, 5.0});
  }
  for (const auto& n : estimate_normals(c, 8)) {
    CHECK(n.z() == doctest::Approx(-1.0));
  }
  PointCloud three;
  three.points = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
  CHECK(code_of([&] { estimate_normals(three, 8); }) == ErrorCode::kTooFewPoints);
}

TEST_CASE("normals on a sphere are radial") {
  // Fibonacci lattice: near-uniform samples of the sphere surface.
  PointCloud c;
  const Vec3 center(0, 0, 20);
  const int n = 1000;
  const double golden = M_PI * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < n; ++i) {
    const double z = 1.0 - 2.0 * (i + 0.5) / n;
    const double rho = std::sqrt(1.0 - z * z);
    c.points.push_back(center + 2.0 * Vec3(rho * std::cos(golden * i),
                                           rho * std::sin(golden * i), z));
  }
  const auto normals = estimate_normals(c, 8, Vec3::Zero());
  for (std::size_t i = 0; i < c.size(); ++i) {
    const Vec3 radial = (c.points[i] - center).normalized();
    const double cosang = std::abs(normals[i].dot(radial));
    CHECK(cosang >= std::cos(5.0 * M_PI / 180.0));
    CHECK(normals[i].dot(Vec3::Zero() - c.points[i]) >= 0.0);
    CHECK(normals[i].norm() == doctest::Approx(1.0));
  }
}

TEST_CASE("intensity model") {
  PointCloud c;
  c.points = {{10, 0, 0}, {10, 0, 0}, {20, 0, 0}};
  const std::vector<double> gray{0.5, 0.5, 1.0};
  const std::vector<Vec3> normals{{-1, 0, 0}, {0, 1, 0}, {-1, 0, 0}};
  const auto out = simulate_intensity(c, gray, normals, Vec3::Zero(), 10.0);
  CHECK(out.intensity[0] == doctest::Approx(0.5));
  CHECK(out.intensity[1] == 0.0);
  CHECK(out.intensity[2] == doctest::Approx(0.25));
  const auto k = constant_intensity(c, 0.3);
  for (double v : k.intensity) CHECK(v == 0.3);
}

TEST_CASE("cloud persistence") {
  test::TempDir dir;
  RandomStream rng(5);
  PointCloud c;
  for (int i = 0; i < 100; ++i) {
    c.points.push_back(test::random_point(rng, -40, 40));
    c.intensity.push_back(rng.uniform01());
  }
  const auto bytes = encode_cloud(c);
  CHECK(bytes.size() == 1600);
  const auto back = decode_cloud(bytes);
  CHECK(back.points == quantize_f32(c).points);
  CHECK(back.intensity == quantize_f32(c).intensity);
  write_cloud(dir / "c.bin", c, "sensor", "32-beam");
  CHECK(std::filesystem::exists(dir / "c.json"));
  CHECK(read_cloud(dir / "c.bin").points == back.points);
  CHECK_THROWS_AS(decode_cloud(std::vector<std::uint8_t>(15)), Error);
}

TEST_CASE("range image persistence") {
  const auto s = SensorSpec::beam32();
  RangeImage ri(s.rows(), s.cols(), true);
  ri.range[5] = 3.5f;
  ri.valid[5] = 1;
  ri.intensity[5] = 0.25f;
  const auto j = encode_range_image(ri);
  CHECK(j.at("rows") == s.rows());
  CHECK(decode_range_image(j) == ri);
  RangeImage plain(s.rows(), s.cols(), false);
  plain.range[9] = 8.0f;
  plain.valid[9] = 1;
  const auto jp = encode_range_image(plain);
  CHECK(jp.at("intensity_f32_le").is_null());
  CHECK(decode_range_image(jp) == plain);
}

TEST_CASE("cloud validation") {
  PointCloud c;
  c.points = {{0, 0, std::nan("")}};
  CHECK_THROWS_AS(c.validate(), Error);
  c.points = {{0, 0, 1}};
  c.intensity = {1.5};
  CHECK_THROWS_AS(c.validate(), Error);
}

}  // TEST_SUITE
