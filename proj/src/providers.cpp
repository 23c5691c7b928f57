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

#include "veria/providers.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "veria/error.hpp"
#include "veria/random.hpp"

namespace veria::providers {

void ProviderEndpoint::validate() const {
  if (base_url.empty() || !(timeout_s > 0.0) || max_retries < 0) {
    throw Error(ErrorCode::kConfigError, "invalid provider endpoint");
  }
}

std::string_view to_string(Stage s) {
  switch (s) {
    case Stage::kSubclass: return "subclass";
    case Stage::kInpaint: return "inpaint";
    case Stage::kVerify: return "verify";
    case Stage::kSegment: return "segment";
    case Stage::kDepth: return "depth";
  }
  return "unknown";
}

void StubOutcomeModel::validate() const {
  auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
  const double sem = p_sem();
  if (!prob(q1_yes) || !prob(q2_yes) || !prob(q3_none) || !prob(p_geo) ||
      !prob(p_joint) || p_joint > std::min(sem, p_geo) + 1e-12 ||
      p_joint < sem + p_geo - 1.0 - 1e-12) {
    throw Error(ErrorCode::kConfigError,
                "stub outcome rates violate probability bounds");
  }
}

double StubOutcomeModel::latent(const ProviderContext& ctx) const {
  return unit_double(
      mix64(fnv1a64(ctx.candidate_id) ^ mix64(ctx.seed ^ mix64(salt))));
}

bool StubOutcomeModel::geo_good(double u) const {
  const double sem = p_sem();
  const double joint = std::min(p_joint, std::min(sem, p_geo));
  return u < joint || (u >= sem && u < sem + (p_geo - joint));
}

StubOutcomeModel StubOutcomeModel::from_rates(double sem_pct, double geo_pct,
                                              double joint_pct) {
  StubOutcomeModel m;
  const double q = std::cbrt(sem_pct / 100.0);
  m.q1_yes = m.q2_yes = m.q3_none = q;
  m.p_geo = geo_pct / 100.0;
  m.p_joint = joint_pct / 100.0;
  m.validate();
  return m;
}

namespace {

struct RateRow {
  const char* name;
  double sem, geo, joint;
};

// Stage-wise acceptance rates (percent) for the four verifier/depth pairings
// on the two datasets.
constexpr RateRow kReferenceRates[] = {
    {"nuscenes/internvl3/unidepth2", 81.29, 81.73, 71.42},
    {"nuscenes/internvl3/moge2", 81.29, 83.60, 72.05},
    {"nuscenes/qwen3vl/unidepth2", 91.71, 81.73, 75.99},
    {"nuscenes/qwen3vl/moge2", 91.71, 83.60, 76.76},
    {"lyft/internvl3/unidepth2", 89.33, 79.52, 71.17},
    {"lyft/internvl3/moge2", 89.33, 89.27, 79.87},
    {"lyft/qwen3vl/unidepth2", 86.24, 79.52, 70.61},
    {"lyft/qwen3vl/moge2", 86.24, 89.27, 77.16},
};

}  // namespace

std::optional<StubOutcomeModel> StubOutcomeModel::preset(std::string_view name) {
  for (const auto& row : kReferenceRates) {
    if (name == row.name) return from_rates(row.sem, row.geo, row.joint);
  }
  if (name == "all-pass") return StubOutcomeModel{};
  return std::nullopt;
}

std::vector<std::string> StubOutcomeModel::preset_names() {
  std::vector<std::string> out;
  for (const auto& row : kReferenceRates) out.emplace_back(row.name);
  out.emplace_back("all-pass");
  return out;
}

}  // namespace veria::providers
