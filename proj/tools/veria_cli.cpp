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

// veria: candidate generation, verification, composition and reporting.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "veria/analytics.hpp"
#include "veria/dataset_io.hpp"
#include "veria/error.hpp"
#include "veria/http_provider.hpp"
#include "veria/pipeline.hpp"

namespace {

namespace fs = std::filesystem;
using veria::Error;
using veria::ErrorCode;

enum Exit { kOk = 0, kFailure = 1, kConfig = 2, kUnreachable = 3, kEmpty = 4 };

struct Common {
  std::string config;
  std::string scenes;
  std::string out = "runs/default";
  std::optional<std::uint64_t> seed;
  int workers = 0;
  bool stub = false;
  std::optional<bool> full_marginals;
  std::optional<double> lambda;
};

veria::dataset_io::RunConfig resolve_config(const Common& c) {
  auto cfg = c.config.empty() ? veria::dataset_io::RunConfig::defaults()
                              : veria::dataset_io::load_config(c.config);
  if (c.seed) cfg.run_seed = *c.seed;
  if (c.stub) cfg.provider_mode = "stub";
  if (c.full_marginals) cfg.full_marginals = *c.full_marginals;
  if (c.lambda) cfg.lambda = *c.lambda;
  cfg.validate();
  return cfg;
}

std::vector<veria::compose::SceneSample> load_scenes(const std::string& dir) {
  if (dir.empty()) throw Error(ErrorCode::kConfigError, "--scenes is required");
  std::vector<veria::compose::SceneSample> out;
  for (const auto& m : veria::dataset_io::load_manifests(dir)) {
    out.push_back(veria::dataset_io::load_scene(m));
  }
  return out;
}

void check_health(const veria::dataset_io::RunConfig& cfg) {
  if (cfg.provider_mode != "http") return;
  veria::providers::HttpProvider client(cfg.endpoint, cfg.max_new_tokens);
  const auto h = client.health();
  std::cerr << "gateway " << cfg.endpoint.base_url << ": " << h.dump() << "\n";
}

fs::path log_path(const std::string& log, const std::string& out) {
  return log.empty() ? fs::path(out) / "candidates.jsonl" : fs::path(log);
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::kMissingAsset, "cannot write " + path);
  f << text;
}

std::vector<double> parse_grid(const std::string& text) {
  if (text.empty()) return veria::analytics::default_lambda_grid();
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw Error(ErrorCode::kConfigError, "bad lambda value: " + item);
    }
  }
  return out;
}

int exit_code_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::kConfigError:
    case ErrorCode::kParseError:
    case ErrorCode::kMissingAsset:
      return kConfig;
    case ErrorCode::kProviderUnavailable:
    case ErrorCode::kTimeout:
      return kUnreachable;
    case ErrorCode::kEmptyLog:
      return kEmpty;
    default:
      return kFailure;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"veria: verified synthetic instance generation for camera-LiDAR data"};
  app.require_subcommand(1);

  Common common;
  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", common.config, "Run configuration (JSON)");
    cmd->add_option("--scenes", common.scenes, "Directory of scene manifests");
    cmd->add_option("--out", common.out, "Run directory");
    cmd->add_option("--seed", common.seed, "Run seed (default 42)");
    cmd->add_option("--workers", common.workers, "Worker threads (0: all cores)");
    cmd->add_flag("--stub", common.stub, "Use stub providers");
    cmd->add_option("--full-marginals", common.full_marginals,
                    "Reconstruct semantically rejected candidates too (default true)");
    cmd->add_option("--lambda", common.lambda, "Size tolerance");
  };

  auto* gen = app.add_subcommand("generate", "Generate and verify candidates");
  add_common(gen);
  auto* comp = app.add_subcommand("compose", "Compose verified instances into scenes");
  add_common(comp);

  std::string log, format = "markdown", output, svg, grid;
  auto* rep = app.add_subcommand("report", "Yield report from a candidate log");
  add_common(rep);
  rep->add_option("--log", log, "Candidate log (default <out>/candidates.jsonl)");
  rep->add_option("--format", format, "markdown or csv")
      ->check(CLI::IsMember({"markdown", "csv"}));
  rep->add_option("--output", output, "Write the report here instead of stdout");

  auto* sw = app.add_subcommand("sweep", "Joint yield as a function of lambda");
  add_common(sw);
  sw->add_option("--log", log, "Candidate log (default <out>/candidates.jsonl)");
  sw->add_option("--grid", grid, "Comma-separated lambda values");
  sw->add_option("--format", format, "markdown or csv")
      ->check(CLI::IsMember({"markdown", "csv"}));
  sw->add_option("--svg", svg, "Also write an SVG plot");

  auto* val = app.add_subcommand("validate", "Check configuration, scenes and providers");
  add_common(val);

  int demo_count = 4;
  auto* demo = app.add_subcommand("init-demo", "Write procedural demo scenes");
  add_common(demo);
  demo->add_option("--count", demo_count, "Number of scenes");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      const auto cfg = resolve_config(common);
      check_health(cfg);
      const auto scenes = load_scenes(common.scenes);
      const auto providers = veria::pipeline::make_providers(cfg);
      const auto s = veria::pipeline::generate(cfg, scenes, common.out, providers,
                                               {common.workers, true});
      std::cerr << "planned " << s.planned << ", resumed " << s.skipped << ", ran "
                << s.executed << ", passed " << s.passed << ", assets " << s.assets
                << ", provider errors " << s.provider_errors << "\n";
      return s.planned == 0 ? kEmpty : kOk;
    }
    if (comp->parsed()) {
      const auto cfg = resolve_config(common);
      const auto scenes = load_scenes(common.scenes);
      const auto s = veria::pipeline::compose_run(cfg, scenes, common.out, common.workers);
      std::cerr << "scenes " << s.scenes << ", inserted " << s.inserted << ", dropped "
                << s.dropped << ", removed points " << s.removed_points << "\n";
      return s.inserted == 0 ? kEmpty : kOk;
    }
    if (rep->parsed()) {
      const auto cfg = resolve_config(common);
      const auto records = veria::analytics::read_log(log_path(log, common.out));
      const auto fmt = format == "csv" ? veria::analytics::ReportFormat::kCsv
                                       : veria::analytics::ReportFormat::kMarkdown;
      write_text(output, veria::analytics::report(records, fmt, cfg.p_n));
      return kOk;
    }
    if (sw->parsed()) {
      const auto cfg = resolve_config(common);
      const auto records = veria::analytics::read_log(log_path(log, common.out));
      const auto sweep = veria::analytics::lambda_sweep(records, parse_grid(grid), cfg.p_n);
      const auto fmt = format == "csv" ? veria::analytics::ReportFormat::kCsv
                                       : veria::analytics::ReportFormat::kMarkdown;
      std::cout << veria::analytics::sweep_table(sweep, fmt);
      if (!svg.empty()) write_text(svg, veria::analytics::sweep_svg(sweep));
      return kOk;
    }
    if (val->parsed()) {
      const auto cfg = resolve_config(common);
      std::cout << "config: ok (" << cfg.categories.size() << " categories, sensor "
                << cfg.sensor << ", lambda " << cfg.lambda << ", p_n " << cfg.p_n
                << ")\n";
      for (const auto& [name, c] : cfg.categories) {
        const auto mid = c.size_prior.midpoint();
        std::cout << "  " << name << ": prior midpoint " << mid[0] << " x " << mid[1]
                  << " x " << mid[2] << " m, cap " << c.max_per_class << "\n";
      }
      if (!common.scenes.empty()) {
        const auto manifests = veria::dataset_io::load_manifests(common.scenes);
        std::cout << "scenes: " << manifests.size() << " manifests ok\n";
      }
      if (cfg.provider_mode == "http") {
        check_health(cfg);
        std::cout << "providers: gateway reachable\n";
      } else {
        std::cout << "providers: stub (" << cfg.stub.preset << ")\n";
      }
      return kOk;
    }
    if (demo->parsed()) {
      if (common.scenes.empty()) throw Error(ErrorCode::kConfigError, "--scenes is required");
      const auto cfg = resolve_config(common);
      const auto sensor = cfg.sensor_spec();
      for (int i = 0; i < demo_count; ++i) {
        char id[32];
        std::snprintf(id, sizeof id, "scene-%04d", i);
        const auto scene = veria::dataset_io::make_demo_scene(id, cfg.run_seed, sensor);
        veria::dataset_io::write_scene(common.scenes, scene, cfg.region.z_ground);
      }
      std::cerr << "wrote " << demo_count << " scenes to " << common.scenes << "\n";
      return kOk;
    }
  } catch (const Error& e) {
    std::cerr << "veria: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "veria: " << e.what() << "\n";
    return kFailure;
  }
  return kOk;
}
