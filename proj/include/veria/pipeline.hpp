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

#include <filesystem>
#include <memory>
#include <optional>
#include <semaphore>
#include <string>
#include <vector>

#include "veria/analytics.hpp"
#include "veria/compose.hpp"
#include "veria/dataset_io.hpp"
#include "veria/providers.hpp"

namespace veria::pipeline {

namespace fs = std::filesystem;

struct ProviderSet {
  std::shared_ptr<providers::SubclassSource> subclass;
  std::shared_ptr<providers::Inpainter> inpainter;
  std::shared_ptr<providers::Segmenter> segmenter;
  std::shared_ptr<providers::DepthEstimator> depth;
  std::shared_ptr<providers::SemanticVerifier> verifier;
};

/// Stubs driven by the configured outcome preset; depth renders the sampled
/// box.
ProviderSet make_stub_providers(const dataset_io::RunConfig& cfg);
/// Gateway client for the four generative stages; subclass texts come from
/// the built-in catalog (the wire protocol has no subclass endpoint).
ProviderSet make_http_providers(const dataset_io::RunConfig& cfg);
ProviderSet make_providers(const dataset_io::RunConfig& cfg);

struct CandidateResult {
  analytics::CandidateRecord record;
  std::optional<compose::InstanceAsset> asset;
};

/// "<scene_id>/<category slug>/<index, 5 digits>"
std::string candidate_id(const std::string& scene_id, const std::string& category,
                         int index);

class Pipeline {
 public:
  Pipeline(dataset_io::RunConfig cfg, ProviderSet providers);

  /// Runs every stage for one candidate. Never throws for per-candidate
  /// failures; they are reported in the record.
  CandidateResult run_candidate(const compose::SceneSample& scene,
                                const std::string& category, int index);

  const dataset_io::RunConfig& config() const { return cfg_; }

 private:
  dataset_io::RunConfig cfg_;
  ProviderSet providers_;
  pointcloud::SensorSpec sensor_;
  std::vector<std::string> category_names_;
  std::unique_ptr<std::counting_semaphore<>> in_flight_;

  // Holds an in-flight slot for the call and adds its latency to rec.timings.
  template <class Fn>
  auto timed(const providers::Provider& p, providers::Stage stage,
             analytics::CandidateRecord& rec, Fn&& fn);
};

struct CandidateTask {
  std::size_t scene = 0;
  std::string category;
  int index = 0;
  std::string id;
};

/// All candidates of all scenes in canonical order.
std::vector<CandidateTask> plan_candidates(const dataset_io::RunConfig& cfg,
                                           const std::vector<compose::SceneSample>& scenes);

/// In-memory run; records come back sorted by candidate_id.
std::vector<analytics::CandidateRecord> run_records(
    const dataset_io::RunConfig& cfg, const std::vector<compose::SceneSample>& scenes,
    const ProviderSet& providers, int workers);

struct GenerateOptions {
  int workers = 0;  // 0: all available threads
  bool persist_assets = true;
};

struct GenerateSummary {
  long planned = 0;
  long skipped = 0;  // already present in the log (resume)
  long executed = 0;
  long passed = 0;
  long assets = 0;
  long provider_errors = 0;
};

/// Writes <run_dir>/{config.json, candidates.jsonl, assets/}. The log is
/// canonicalized (sorted by candidate_id) at the end.
GenerateSummary generate(const dataset_io::RunConfig& cfg,
                         const std::vector<compose::SceneSample>& scenes,
                         const fs::path& run_dir, const ProviderSet& providers,
                         const GenerateOptions& opts = {});

struct ComposeSummary {
  long scenes = 0;
  long inserted = 0;
  long dropped = 0;
  long removed_points = 0;
};

/// Composes every scene from <run_dir>/assets into <run_dir>/scenes_out/.
ComposeSummary compose_run(const dataset_io::RunConfig& cfg,
                           const std::vector<compose::SceneSample>& scenes,
                           const fs::path& run_dir, int workers = 0);

}  // namespace veria::pipeline
