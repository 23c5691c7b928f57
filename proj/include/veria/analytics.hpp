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

#include <array>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "veria/geoverify.hpp"
#include "veria/prompts.hpp"

namespace veria::analytics {

inline constexpr const char* kSchemaName = "veria.candidate.v1";

enum class CandidateStatus { kPass, kFailSemantic, kFailGeometric, kProviderError };

std::string_view to_string(CandidateStatus s);
CandidateStatus parse_status(std::string_view s);

struct StageError {
  std::string stage;
  std::string code;
  std::string message;
  bool operator==(const StageError&) const = default;
};

struct CandidateRecord {
  std::string candidate_id;
  std::string scene_id;
  std::string category;
  std::string subclass;
  std::array<double, 7> box7{};
  std::optional<prompts::SemanticVerdict> semantic;
  std::optional<geoverify::GeoVerdict> geometric;
  std::map<std::string, double> timings;  // stage -> seconds
  CandidateStatus status = CandidateStatus::kProviderError;
  std::optional<StageError> error;
  std::optional<std::string> asset_id;

  bool semantic_passed() const;
  bool geometric_passed() const;
};

/// pass iff both events hold; fail_semantic when the semantic verdict
/// rejects; fail_geometric when only geometry rejects; provider_error when a
/// stage failed before the verdicts needed for a decision were available.
CandidateStatus derive_status(const CandidateRecord& r);

nlohmann::json to_json(const CandidateRecord& r);
/// Throws ParseError on schema violations.
CandidateRecord record_from_json(const nlohmann::json& j);

nlohmann::json log_header();
/// Streams the records of a JSON Lines log (header line optional). Blank
/// lines are skipped; a malformed line throws ParseError with its number.
void for_each_record(const std::filesystem::path& log,
                     const std::function<void(CandidateRecord&&)>& fn);
std::vector<CandidateRecord> read_log(const std::filesystem::path& log);

struct EventCounts {
  long n = 0;
  long sem = 0;
  long geo = 0;
  long joint = 0;
  bool operator==(const EventCounts&) const = default;
};

/// Exact integer counts; merge is associative and commutative.
struct YieldCounts {
  EventCounts total;
  long provider_errors = 0;
  // Semantically rejected candidates without a geometric verdict; when
  // non-zero the log was produced without full marginals.
  long geo_skipped = 0;
  std::map<std::string, EventCounts> per_category;
  std::map<std::string, long> semantic_fail_reasons;
  std::map<std::string, long> geometric_fail_reasons;

  void add(const CandidateRecord& r);
  void merge(const YieldCounts& other);
  bool operator==(const YieldCounts&) const = default;
};

/// 100 * count / n rounded half-to-even at 2 decimals, computed in integers.
std::string percent_string(long count, long n);
double percent(long count, long n);

struct YieldReport {
  long n = 0;
  double p_sem = 0.0;
  double p_geo = 0.0;
  double p_joint = 0.0;
  bool geo_conditional = false;  // p_geo is P(S_geo | S_sem)
  YieldCounts counts;
};

/// Throws EmptyLog when no records were seen.
YieldReport yield_decomposition(const YieldCounts& counts);
YieldReport yield_decomposition(const std::vector<CandidateRecord>& records);

/// Geometric pass recomputed at tolerance lambda from the stored sizes.
/// Throws MissingRatios for records whose geometric verdict lacks them and
/// did not fail on point count.
bool geo_pass_at(const CandidateRecord& r, double lambda, int p_n);

struct SweepPoint {
  double lambda = 0.0;
  long geo = 0;
  long joint = 0;
  long n = 0;
  double joint_pct() const { return percent(joint, n); }
  double geo_pct() const { return percent(geo, n); }
};

std::vector<SweepPoint> lambda_sweep(const std::vector<CandidateRecord>& records,
                                     std::vector<double> lambda_grid,
                                     int p_n = 5);

std::vector<double> default_lambda_grid();

enum class ReportFormat { kMarkdown, kCsv };

std::string report(const std::vector<CandidateRecord>& records, ReportFormat fmt,
                   int p_n = 5);
std::string sweep_table(const std::vector<SweepPoint>& sweep, ReportFormat fmt);
std::string sweep_svg(const std::vector<SweepPoint>& sweep);

}  // namespace veria::analytics
