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

// Parallel kernels against their serial references. The argument is the
// OpenMP thread count; 0 runs the serial reference.

#include <benchmark/benchmark.h>

#include <cmath>

#include "veria/compose.hpp"
#include "veria/parallel.hpp"
#include "veria/pointcloud.hpp"
#include "veria/random.hpp"
#include "veria/reference.hpp"

namespace {

using namespace veria;

geometry::CameraIntrinsics camera() {
  geometry::CameraIntrinsics c;
  c.fx = c.fy = 700;
  c.cx = 320;
  c.cy = 240;
  c.width = 640;
  c.height = 480;
  return c;
}

const DepthMap& depth_map() {
  static const DepthMap d = [] {
    RandomStream rng(1);
    DepthMap out(640, 480);
    for (int y = 0; y < 480; ++y) {
      for (int x = 0; x < 640; ++x) {
        if (rng.uniform01() < 0.97) out.set(x, y, 8.0 + 0.01 * x + rng.uniform(-0.5, 0.5));
      }
    }
    return out;
  }();
  return d;
}

const geometry::PixelMask& blob() {
  static const geometry::PixelMask m = [] {
    geometry::PixelMask out(640, 480);
    for (int y = 0; y < 480; ++y) {
      for (int x = 0; x < 640; ++x) {
        const double dx = (x - 320) / 250.0, dy = (y - 240) / 180.0;
        if (dx * dx + dy * dy < 1.0) out.set(x, y);
      }
    }
    return out;
  }();
  return m;
}

pointcloud::PointCloud scatter(int n, std::uint64_t seed, double r0, double r1) {
  RandomStream rng(seed);
  pointcloud::PointCloud c;
  for (int i = 0; i < n; ++i) {
    const double r = rng.uniform(r0, r1);
    const double az = rng.uniform(-M_PI, M_PI);
    const double el = rng.uniform(-0.5, 0.17);
    c.points.push_back({r * std::cos(el) * std::cos(az), r * std::cos(el) * std::sin(az),
                        r * std::sin(el)});
    c.intensity.push_back(rng.uniform01());
  }
  return c;
}

// Sets the thread count for the parallel variant; restores it afterwards.
struct Threads {
  int saved = parallel::max_threads();
  explicit Threads(int n) { parallel::set_threads(n); }
  ~Threads() { parallel::set_threads(saved); }
};

void BM_Backproject(benchmark::State& state) {
  const int threads = static_cast<int>(state.range(0));
  Threads scope(std::max(threads, 1));
  for (auto _ : state) {
    auto c = threads == 0 ? reference::backproject_region(depth_map(), blob(), camera())
                          : pointcloud::backproject_region(depth_map(), blob(), camera());
    benchmark::DoNotOptimize(c.points.data());
  }
}

void BM_ContourFilter(benchmark::State& state) {
  const int threads = static_cast<int>(state.range(0));
  Threads scope(std::max(threads, 1));
  const auto cloud = pointcloud::backproject_region(depth_map(), blob(), camera());
  const pointcloud::ContourFilterConfig cfg;
  for (auto _ : state) {
    auto c = threads == 0 ? reference::contour_band_filter(cloud, blob(), depth_map(), cfg)
                          : pointcloud::contour_band_filter(cloud, blob(), depth_map(), cfg);
    benchmark::DoNotOptimize(c.points.data());
  }
}

void BM_RangeImage(benchmark::State& state) {
  const int threads = static_cast<int>(state.range(0));
  Threads scope(std::max(threads, 1));
  const auto cloud = scatter(200000, 2, 1, 80);
  const auto sensor = pointcloud::SensorSpec::beam64();
  for (auto _ : state) {
    auto ri = threads == 0 ? reference::to_range_image(cloud, sensor)
                           : pointcloud::to_range_image(cloud, sensor);
    benchmark::DoNotOptimize(ri.range.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(cloud.size()));
}

void BM_Normals(benchmark::State& state) {
  const int threads = static_cast<int>(state.range(0));
  Threads scope(std::max(threads, 1));
  const auto cloud = scatter(20000, 3, 8, 12);
  for (auto _ : state) {
    auto n = threads == 0 ? reference::estimate_normals(cloud, 8, geometry::Vec3::Zero())
                          : pointcloud::estimate_normals(cloud, 8);
    benchmark::DoNotOptimize(n.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(cloud.size()));
}

void BM_Occlusion(benchmark::State& state) {
  const int threads = static_cast<int>(state.range(0));
  Threads scope(std::max(threads, 1));
  const auto scene = scatter(100000, 4, 1, 80);
  const auto inserted = scatter(5000, 5, 5, 10);
  const auto sensor = pointcloud::SensorSpec::beam32();
  for (auto _ : state) {
    auto r = threads == 0 ? reference::remove_occluded(scene, {&inserted}, sensor)
                          : compose::remove_occluded(scene, {&inserted}, sensor);
    benchmark::DoNotOptimize(r.removed.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(scene.size()));
}

void thread_args(benchmark::internal::Benchmark* b) {
  b->ArgName("threads")->Arg(0)->Arg(1)->Arg(2)->Arg(4)->UseRealTime()->Unit(
      benchmark::kMillisecond);
}

BENCHMARK(BM_Backproject)->Apply(thread_args);
BENCHMARK(BM_ContourFilter)->Apply(thread_args);
BENCHMARK(BM_RangeImage)->Apply(thread_args);
BENCHMARK(BM_Normals)->Apply(thread_args);
BENCHMARK(BM_Occlusion)->Apply(thread_args);

}  // namespace

BENCHMARK_MAIN();
