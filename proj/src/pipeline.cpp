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

#include "veria/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>

#include "veria/error.hpp"
#include "veria/geoverify.hpp"
#include "veria/http_provider.hpp"
#include "veria/image_io.hpp"
#include "veria/parallel.hpp"
#include "veria/placement.hpp"
#include "veria/pointcloud.hpp"
#include "veria/prompts.hpp"
#include "veria/random.hpp"

namespace veria::pipeline {

using analytics::CandidateRecord;
using analytics::CandidateStatus;
using providers::Stage;

ProviderSet make_stub_providers(const dataset_io::RunConfig& cfg) {
  const auto outcome = providers::StubOutcomeModel::preset(cfg.stub.preset);
  if (!outcome) {
    throw Error(ErrorCode::kConfigError, "unknown stub preset: " + cfg.stub.preset);
  }
  const providers::StubLatencies lat;
  providers::StubDepthScene scene;
  scene.kind = providers::StubDepthScene::Kind::kBox;
  scene.outcome = *outcome;
  scene.scale_min = cfg.stub.depth_scale_min;
  scene.scale_max = cfg.stub.depth_scale_max;
  ProviderSet p;
  p.subclass = std::make_shared<providers::StubSubclassSource>(lat.subclass);
  p.inpainter = std::make_shared<providers::StubInpainter>(lat.inpaint);
  p.segmenter = std::make_shared<providers::StubSegmenter>(lat.segment);
  p.depth = std::make_shared<providers::StubDepthEstimator>(scene, lat.depth);
  p.verifier = std::make_shared<providers::StubSemanticVerifier>(*outcome, lat.verify);
  return p;
}

ProviderSet make_http_providers(const dataset_io::RunConfig& cfg) {
  auto client = std::make_shared<providers::HttpProvider>(cfg.endpoint,
                                                          cfg.max_new_tokens);
  ProviderSet p;
  p.subclass = std::make_shared<providers::StubSubclassSource>();
  p.inpainter = client;
  p.segmenter = client;
  p.depth = client;
  p.verifier = client;
  return p;
}

ProviderSet make_providers(const dataset_io::RunConfig& cfg) {
  return cfg.provider_mode == "http" ? make_http_providers(cfg)
                                     : make_stub_providers(cfg);
}

std::string candidate_id(const std::string& scene_id, const std::string& category,
                         int index) {
  std::string slug = category;
  std::replace(slug.begin(), slug.end(), ' ', '_');
  char num[16];
  std::snprintf(num, sizeof num, "%05d", index);
  return scene_id + "/" + slug + "/" + num;
}

Pipeline::Pipeline(dataset_io::RunConfig cfg, ProviderSet providers)
    : cfg_(std::move(cfg)),
      providers_(std::move(providers)),
      sensor_(cfg_.sensor_spec()),
      in_flight_(std::make_unique<std::counting_semaphore<>>(cfg_.max_in_flight)) {
  cfg_.validate();
  if (!providers_.subclass || !providers_.inpainter || !providers_.segmenter ||
      !providers_.depth || !providers_.verifier) {
    throw Error(ErrorCode::kConfigError, "incomplete provider set");
  }
  for (const auto& [name, c] : cfg_.categories) category_names_.push_back(name);
}

template <class Fn>
auto Pipeline::timed(const providers::Provider& p, Stage stage, CandidateRecord& rec,
                     Fn&& fn) {
  in_flight_->acquire();
  struct Release {
    std::counting_semaphore<>* s;
    ~Release() { s->release(); }
  } release{in_flight_.get()};
  const auto start = std::chrono::steady_clock::now();
  auto result = fn();
  const auto modeled = p.modeled_latency_s();
  const double secs =
      modeled ? *modeled
              : std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                    .count();
  rec.timings[std::string(providers::to_string(stage))] += secs;
  return result;
}

namespace {

bool is_reconstruction_failure(ErrorCode c) {
  switch (c) {
    case ErrorCode::kEmptySegmentation:
    case ErrorCode::kEmptyCloud:
    case ErrorCode::kDegenerateExtent:
    case ErrorCode::kDegenerateCloud:
    case ErrorCode::kTooFewPoints:
      return true;
    default:
      return false;
  }
}

constexpr Rgb kMarkerRed{255, 0, 0};
constexpr int kHintPad = 2;

}  // namespace

CandidateResult Pipeline::run_candidate(const compose::SceneSample& scene,
                                        const std::string& category, int index) {
  CandidateResult out;
  CandidateRecord& rec = out.record;
  rec.candidate_id = candidate_id(scene.scene_id, category, index);
  rec.scene_id = scene.scene_id;
  rec.category = category;

  providers::ProviderContext ctx;
  ctx.candidate_id = rec.candidate_id;
  ctx.seed = cfg_.run_seed;
  ctx.camera = scene.camera;
  ctx.sensor_to_camera = scene.sensor_to_camera;
  RandomStream stream(cfg_.run_seed, fnv1a64(rec.candidate_id));

  const auto& cat_cfg = cfg_.categories.at(category);
  std::string stage = "subclass";
  long reconstructed_points = 0;
  std::optional<std::array<double, 3>> target;

  try {
    // Subclass description and size prior; fall back to the category default
    // when the response is unusable.
    prompts::SubclassSpec spec;
    const std::string prompt = prompts::build_subclass_prompt(category, category_names_);
    const std::string raw = timed(*providers_.subclass, Stage::kSubclass, rec, [&] {
      return providers_.subclass->subclass_response(category, prompt, ctx);
    });
    try {
      spec = prompts::parse_subclass_response(raw, category);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kMalformedResponse &&
          e.code() != ErrorCode::kImplausibleDimensions) {
        throw;
      }
      spec.category = category;
      spec.subclass_name = category;
      spec.description = category;
      spec.size_prior = cat_cfg.size_prior;
    }
    rec.subclass = spec.subclass_name;

    stage = "placement";
    std::optional<geometry::Box3D> box;
    for (int attempt = 0; attempt < cfg_.max_placement_attempts; ++attempt) {
      const auto b = placement::sample_box(spec.size_prior, cfg_.region, stream);
      if (placement::visibility_gate(b, scene.camera, scene.sensor_to_camera,
                                     cfg_.visibility)) {
        box = b;
        break;
      }
    }
    if (!box) {
      throw Error(ErrorCode::kNotVisible, "no visible placement within attempt budget");
    }
    rec.box7 = box->to_array();
    target = std::array<double, 3>{box->size.x(), box->size.y(), box->size.z()};
    ctx.box = box;

    const auto mask = geometry::box_to_mask(*box, scene.camera, scene.sensor_to_camera);
    const auto crop = placement::inpaint_crop(mask, cfg_.crop_margin);
    const auto patch = scene.image.crop(crop);
    const auto crop_mask = mask.crop(crop);
    providers::ProviderContext crop_ctx = ctx;
    crop_ctx.camera =
        scene.camera.cropped(crop.left, crop.top, crop.width(), crop.height());

    stage = "inpaint";
    const std::string condition = spec.subclass_name + ": " + spec.description;
    const ImageBuffer inpainted = timed(*providers_.inpainter, Stage::kInpaint, rec, [&] {
      return providers_.inpainter->inpaint(patch, condition, crop_mask, crop_ctx);
    });
    if (inpainted.width != patch.width || inpainted.height != patch.height) {
      throw Error(ErrorCode::kMalformedResponse, "inpainted patch size changed");
    }

    stage = "verify";
    ImageBuffer marked = scene.image;
    marked.paste(inpainted, crop.left, crop.top);
    marked.draw_outline(*mask.bounds(), cfg_.marker_width, kMarkerRed);
    const auto turns = prompts::build_verification_turns("scene_marked", "crop");
    prompts::SemanticVerdict verdict;
    for (int attempt = 0;; ++attempt) {
      try {
        verdict = timed(*providers_.verifier, Stage::kVerify, rec, [&] {
          return providers_.verifier->verify_semantic(marked, inpainted, turns, ctx);
        });
        break;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kMalformedResponse || attempt >= 1) throw;
      }
    }
    rec.semantic = verdict;
    const bool sem_pass = prompts::decide(verdict).passed;
    if (!sem_pass && !cfg_.full_marginals) {
      rec.status = analytics::derive_status(rec);
      return out;
    }

    stage = "segment";
    // The hint box gets the same slack a box prompt usually carries.
    auto hint = *crop_mask.bounds();
    hint = geometry::PixelRect{hint.left - kHintPad, hint.top - kHintPad,
                               hint.right + kHintPad, hint.bottom + kHintPad}
               .intersect({0, 0, inpainted.width, inpainted.height});
    const auto seg = timed(*providers_.segmenter, Stage::kSegment, rec, [&] {
      return providers_.segmenter->segment(inpainted, hint, crop_ctx);
    });
    if (seg.width() != inpainted.width || seg.height() != inpainted.height) {
      throw Error(ErrorCode::kMalformedResponse, "segmentation size mismatch");
    }
    if (seg.empty()) throw Error(ErrorCode::kEmptySegmentation, "empty mask");

    stage = "depth";
    const auto depth = timed(*providers_.depth, Stage::kDepth, rec, [&] {
      return providers_.depth->estimate_depth(inpainted, crop_ctx);
    });
    if (depth.width != inpainted.width || depth.height != inpainted.height) {
      throw Error(ErrorCode::kMalformedResponse, "depth size mismatch");
    }

    stage = "reconstruct";
    auto cloud = pointcloud::backproject_region(depth, seg, crop_ctx.camera);
    reconstructed_points = static_cast<long>(cloud.size());
    cloud = pointcloud::contour_band_filter(
        cloud, seg, depth, {cfg_.band_px, cfg_.tau_edge, 5});
    reconstructed_points = static_cast<long>(cloud.size());
    cloud.intensity.resize(cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      cloud.intensity[i] = inpainted.gray(cloud.source_px[i].x, cloud.source_px[i].y);
    }
    const geometry::Vec3 up_cam = scene.sensor_to_camera.rotation * geometry::Vec3::UnitZ();
    const auto scaled = pointcloud::anchor_scale(cloud, box->size.z(), up_cam);
    const auto sensor_cloud = scaled.transformed(scene.sensor_to_camera.inverse());

    stage = "geoverify";
    rec.geometric = geoverify::verify_geometry(sensor_cloud, *target,
                                               {cfg_.lambda, cfg_.p_n});
    rec.status = analytics::derive_status(rec);
    if (rec.status != CandidateStatus::kPass) return out;

    stage = "raster";
    const auto ri = pointcloud::to_range_image(sensor_cloud, sensor_);
    auto lidar = pointcloud::from_range_image(ri, sensor_);
    if (lidar.empty()) throw Error(ErrorCode::kEmptyCloud, "no points inside the sensor grid");
    if (cfg_.intensity.constant) {
      lidar = pointcloud::constant_intensity(lidar, cfg_.intensity.value);
    } else {
      std::vector<geometry::Vec3> normals;
      if (static_cast<int>(lidar.size()) > cfg_.intensity.normal_k) {
        normals = pointcloud::estimate_normals(lidar, cfg_.intensity.normal_k);
      } else {
        for (const auto& p : lidar.points) normals.push_back(-p.normalized());
      }
      const std::vector<double> gray = lidar.intensity;
      lidar = pointcloud::simulate_intensity(lidar, gray, normals,
                                             geometry::Vec3::Zero(), cfg_.intensity.r_ref);
    }

    compose::InstanceAsset asset;
    asset.category = category;
    asset.subclass = spec.subclass_name;
    asset.rgb = inpainted;
    asset.mask = seg;
    asset.left = crop.left;
    asset.top = crop.top;
    asset.cloud = lidar;
    asset.source_scene = scene.scene_id;
    try {
      asset.box = compose::recover_box(lidar);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kDegenerateCloud) throw;
      asset.box = compose::recover_box(sensor_cloud);
    }
    asset.center_range = asset.box.center.norm();
    out.asset = std::move(asset);
  } catch (const Error& e) {
    rec.error = analytics::StageError{stage, std::string(to_string(e.code())), e.what()};
    if (is_reconstruction_failure(e.code()) && rec.semantic && !rec.geometric && target) {
      geoverify::GeoVerdict g;
      g.passed = false;
      g.point_count = reconstructed_points;
      g.target_sizes = geoverify::canonical_sizes(*target);
      g.fail_reason = geoverify::GeoFailReason::kTooFewPoints;
      rec.geometric = g;
    }
    rec.status = analytics::derive_status(rec);
  } catch (const std::exception& e) {
    rec.error = analytics::StageError{stage, "internal", e.what()};
    rec.status = analytics::derive_status(rec);
  }
  return out;
}

std::vector<CandidateTask> plan_candidates(const dataset_io::RunConfig& cfg,
                                           const std::vector<compose::SceneSample>& scenes) {
  std::vector<CandidateTask> out;
  for (std::size_t s = 0; s < scenes.size(); ++s) {
    for (const auto& [cat, c] : cfg.categories) {
      for (int i = 0; i < c.candidates_per_scene; ++i) {
        out.push_back({s, cat, i, candidate_id(scenes[s].scene_id, cat, i)});
      }
    }
  }
  std::sort(out.begin(), out.end(),
            [](const CandidateTask& a, const CandidateTask& b) { return a.id < b.id; });
  return out;
}

namespace {

int resolve_workers(int workers) {
  return workers > 0 ? workers : parallel::max_threads();
}

}  // namespace

std::vector<CandidateRecord> run_records(const dataset_io::RunConfig& cfg,
                                         const std::vector<compose::SceneSample>& scenes,
                                         const ProviderSet& providers, int workers) {
  Pipeline pipe(cfg, providers);
  const auto tasks = plan_candidates(cfg, scenes);
  std::vector<CandidateRecord> out(tasks.size());
  const auto n = static_cast<std::int64_t>(tasks.size());
#pragma omp parallel for schedule(dynamic, 4) num_threads(resolve_workers(workers))
  for (std::int64_t i = 0; i < n; ++i) {
    const auto& t = tasks[i];
    out[i] = pipe.run_candidate(scenes[t.scene], t.category, t.index).record;
  }
  return out;
}

GenerateSummary generate(const dataset_io::RunConfig& cfg,
                         const std::vector<compose::SceneSample>& scenes,
                         const fs::path& run_dir, const ProviderSet& providers,
                         const GenerateOptions& opts) {
  cfg.validate();
  fs::create_directories(run_dir / "assets");
  const std::string cfg_text = dataset_io::to_json(cfg).dump(2) + "\n";
  image_io::write_file_atomic(
      run_dir / "config.json",
      std::span(reinterpret_cast<const std::uint8_t*>(cfg_text.data()), cfg_text.size()));

  const fs::path log_path = run_dir / "candidates.jsonl";
  const auto done = dataset_io::logged_ids(log_path);
  // Drop any torn trailing line before appending.
  if (fs::exists(log_path)) dataset_io::canonicalize_log(log_path);

  GenerateSummary summary;
  std::vector<CandidateTask> todo;
  for (auto& t : plan_candidates(cfg, scenes)) {
    ++summary.planned;
    if (done.count(t.id)) {
      ++summary.skipped;
    } else {
      todo.push_back(std::move(t));
    }
  }

  Pipeline pipe(cfg, providers);
  dataset_io::LogWriter log(log_path);
  const auto n = static_cast<std::int64_t>(todo.size());
  long passed = 0, assets = 0, errors = 0;
#pragma omp parallel for schedule(dynamic, 1) num_threads(resolve_workers(opts.workers)) \
    reduction(+ : passed, assets, errors)
  for (std::int64_t i = 0; i < n; ++i) {
    const auto& t = todo[i];
    auto result = pipe.run_candidate(scenes[t.scene], t.category, t.index);
    auto& rec = result.record;
    if (result.asset && opts.persist_assets) {
      try {
        rec.asset_id = dataset_io::store_asset(*result.asset, run_dir / "assets");
        ++assets;
      } catch (const Error& e) {
        rec.error = analytics::StageError{"store", std::string(to_string(e.code())),
                                          e.what()};
      }
    }
    passed += rec.status == CandidateStatus::kPass;
    errors += rec.status == CandidateStatus::kProviderError;
    log.append(rec);
  }
  summary.executed = n;
  summary.passed = passed;
  summary.assets = assets;
  summary.provider_errors = errors;
  dataset_io::canonicalize_log(log_path);
  return summary;
}

ComposeSummary compose_run(const dataset_io::RunConfig& cfg,
                           const std::vector<compose::SceneSample>& scenes,
                           const fs::path& run_dir, int workers) {
  const auto db = dataset_io::load_assets(run_dir / "assets");
  compose::ComposeConfig ccfg;
  ccfg.caps = cfg.caps();
  ccfg.p_n = cfg.p_n;
  ccfg.cross_scene = cfg.cross_scene;

  std::vector<compose::ComposedScene> results(scenes.size());
  const auto n = static_cast<std::int64_t>(scenes.size());
#pragma omp parallel for schedule(dynamic, 1) num_threads(resolve_workers(workers))
  for (std::int64_t i = 0; i < n; ++i) {
    RandomStream stream(cfg.run_seed, fnv1a64(scenes[i].scene_id + "/compose"));
    results[i] = compose::compose_scene(scenes[i], db, ccfg, stream);
    const fs::path dir = run_dir / "scenes_out" / scenes[i].scene_id;
    fs::create_directories(dir);
    image_io::write_png(dir / "image.png", results[i].image);
    pointcloud::write_cloud(dir / "cloud.bin", results[i].cloud, "sensor",
                            scenes[i].sensor.id);
    nlohmann::json meta = {{"labels", compose::labels_to_json(results[i].labels)},
                           {"inserted", results[i].inserted_ids},
                           {"dropped", results[i].dropped_ids},
                           {"removed_points", results[i].removed_points}};
    const std::string text = meta.dump(2) + "\n";
    image_io::write_file_atomic(
        dir / "labels.json",
        std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
  }
  ComposeSummary s;
  for (const auto& r : results) {
    ++s.scenes;
    s.inserted += static_cast<long>(r.inserted_ids.size());
    s.dropped += static_cast<long>(r.dropped_ids.size());
    s.removed_points += static_cast<long>(r.removed_points);
  }
  return s;
}

}  // namespace veria::pipeline
