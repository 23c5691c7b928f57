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

#pragma once

#include <atomic>
#include <cmath>
#include <filesystem>
#include <string>

#include <unistd.h>

#include "veria/geometry.hpp"
#include "veria/pointcloud.hpp"
#include "veria/random.hpp"

namespace veria::test {

namespace fs = std::filesystem;

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            ("veria-test-" + std::to_string(::getpid()) + "-" +
             std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

inline geometry::Vec3 random_point(RandomStream& rng, double lo, double hi) {
  return {rng.uniform(lo, hi), rng.uniform(lo, hi), rng.uniform(lo, hi)};
}

/// Standard normal via Box-Muller.
inline double gaussian(RandomStream& rng) {
  const double u1 = 1.0 - rng.uniform01();
  const double u2 = rng.uniform01();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

/// Points on the six faces of a box, area weighted, in the sensor frame.
inline pointcloud::PointCloud box_surface(const geometry::Box3D& box, int n,
                                          RandomStream& rng) {
  const geometry::Vec3 s = box.size;
  const double areas[3] = {s.y() * s.z(), s.x() * s.z(), s.x() * s.y()};
  const double total = areas[0] + areas[1] + areas[2];
  const auto rot = geometry::RigidTransform::rotation_z(box.yaw).rotation;
  pointcloud::PointCloud cloud;
  cloud.points.reserve(n);
  for (int i = 0; i < n; ++i) {
    double pick = rng.uniform01() * total;
    int axis = 0;
    while (axis < 2 && pick >= areas[axis]) pick -= areas[axis++];
    geometry::Vec3 local(rng.uniform(-0.5, 0.5) * s.x(),
                         rng.uniform(-0.5, 0.5) * s.y(),
                         rng.uniform(-0.5, 0.5) * s.z());
    local[axis] = (rng.uniform01() < 0.5 ? -0.5 : 0.5) * s[axis];
    cloud.points.push_back(rot * local + box.center);
  }
  return cloud;
}

/// Smallest absolute difference between two angles modulo pi.
inline double angle_diff_mod_pi(double a, double b) {
  double d = std::fmod(a - b, M_PI);
  if (d < 0) d += M_PI;
  return std::min(d, M_PI - d);
}

}  // namespace veria::test
