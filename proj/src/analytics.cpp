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

#include "veria/analytics.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "veria/error.hpp"

namespace veria::analytics {

using nlohmann::json;

std::string_view to_string(CandidateStatus s) {
  switch (s) {
    case CandidateStatus::kPass: return "pass";
    case CandidateStatus::kFailSemantic: return "fail_semantic";
    case CandidateStatus::kFailGeometric: return "fail_geometric";
    case CandidateStatus::kProviderError: return "provider_error";
  }
  return "provider_error";
}

CandidateStatus parse_status(std::string_view s) {
  for (auto v : {CandidateStatus::kPass, CandidateStatus::kFailSemantic,
                 CandidateStatus::kFailGeometric, CandidateStatus::kProviderError}) {
    if (s == to_string(v)) return v;
  }
  throw Error(ErrorCode::kParseError, "unknown status: " + std::string(s));
}

bool CandidateRecord::semantic_passed() const {
  return semantic && prompts::decide(*semantic).passed;
}

bool CandidateRecord::geometric_passed() const {
  return geometric && geometric->passed;
}

CandidateStatus derive_status(const CandidateRecord& r) {
  if (!r.semantic) return CandidateStatus::kProviderError;
  if (!r.semantic_passed()) return CandidateStatus::kFailSemantic;
  if (!r.geometric) return CandidateStatus::kProviderError;
  return r.geometric->passed ? CandidateStatus::kPass
                             : CandidateStatus::kFailGeometric;
}

// ---------------------------------------------------------------------------
// JSON

namespace {

json optional_sizes(const std::optional<std::array<double, 3>>& s) {
  return s ? json(*s) : json(nullptr);
}

std::optional<std::array<double, 3>> read_sizes(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<std::array<double, 3>>();
}

}  // namespace

json to_json(const CandidateRecord& r) {
  json j;
  j["candidate_id"] = r.candidate_id;
  j["scene_id"] = r.scene_id;
  j["category"] = r.category;
  j["subclass"] = r.subclass;
  j["box7"] = r.box7;
  if (r.semantic) {
    const auto d = prompts::decide(*r.semantic);
    j["semantic"] = {
        {"q1", std::string(prompts::to_string(r.semantic->q1_category_match))},
        {"q2", std::string(prompts::to_string(r.semantic->q2_scene_plausible))},
        {"q3", std::string(prompts::to_string(r.semantic->q3_artifact_severity))},
        {"q4", r.semantic->q4_comment},
        {"passed", d.passed},
        {"fail_reason", std::string(prompts::to_string(d.fail_reason))}};
  } else {
    j["semantic"] = nullptr;
  }
  if (r.geometric) {
    const auto& g = *r.geometric;
    j["geometric"] = {{"passed", g.passed},
                      {"fitted_sizes", optional_sizes(g.fitted_sizes)},
                      {"target_sizes", optional_sizes(g.target_sizes)},
                      {"size_ratios", optional_sizes(g.size_ratios)},
                      {"point_count", g.point_count},
                      {"fail_reason", std::string(geoverify::to_string(g.fail_reason))}};
  } else {
    j["geometric"] = nullptr;
  }
  j["timings"] = r.timings;
  j["status"] = std::string(to_string(r.status));
  j["error"] = r.error ? json{{"stage", r.error->stage},
                              {"code", r.error->code},
                              {"message", r.error->message}}
                       : json(nullptr);
  j["asset_id"] = r.asset_id ? json(*r.asset_id) : json(nullptr);
  return j;
}

CandidateRecord record_from_json(const json& j) {
  try {
    CandidateRecord r;
    r.candidate_id = j.at("candidate_id").get<std::string>();
    r.scene_id = j.value("scene_id", std::string());
    r.category = j.at("category").get<std::string>();
    r.subclass = j.value("subclass", std::string());
    r.box7 = j.at("box7").get<std::array<double, 7>>();
    if (const auto& s = j.at("semantic"); !s.is_null()) {
      r.semantic = prompts::parse_verdict(
          s.at("q1").get<std::string>(), s.at("q2").get<std::string>(),
          s.at("q3").get<std::string>(), s.value("q4", std::string()));
    }
    if (const auto& g = j.at("geometric"); !g.is_null()) {
      geoverify::GeoVerdict v;
      v.passed = g.at("passed").get<bool>();
      v.fitted_sizes = read_sizes(g, "fitted_sizes");
      v.target_sizes = read_sizes(g, "target_sizes");
      v.size_ratios = read_sizes(g, "size_ratios");
      v.point_count = g.at("point_count").get<long>();
      v.fail_reason =
          geoverify::parse_geo_fail_reason(g.at("fail_reason").get<std::string>());
      r.geometric = v;
    }
    if (j.contains("timings")) {
      r.timings = j.at("timings").get<std::map<std::string, double>>();
    }
    r.status = parse_status(j.at("status").get<std::string>());
    if (j.contains("error") && !j.at("error").is_null()) {
      const auto& e = j.at("error");
      r.error = StageError{e.at("stage").get<std::string>(),
                           e.at("code").get<std::string>(),
                           e.value("message", std::string())};
    }
    if (j.contains("asset_id") && !j.at("asset_id").is_null()) {
      r.asset_id = j.at("asset_id").get<std::string>();
    }
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, std::string("candidate record: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kParseError) throw;
    throw Error(ErrorCode::kParseError, e.what());
  }
}

json log_header() { return {{"schema", kSchemaName}}; }

void for_each_record(const std::filesystem::path& log,
                     const std::function<void(CandidateRecord&&)>& fn) {
  std::ifstream in(log);
  if (!in) throw Error(ErrorCode::kMissingAsset, "cannot open log " + log.string());
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kParseError,
                  log.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
    if (j.contains("schema")) {
      if (j.at("schema") != kSchemaName) {
        throw Error(ErrorCode::kParseError, "unsupported log schema");
      }
      continue;
    }
    try {
      fn(record_from_json(j));
    } catch (const Error& e) {
      throw Error(ErrorCode::kParseError,
                  log.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

std::vector<CandidateRecord> read_log(const std::filesystem::path& log) {
  std::vector<CandidateRecord> out;
  for_each_record(log, [&](CandidateRecord&& r) { out.push_back(std::move(r)); });
  return out;
}

// ---------------------------------------------------------------------------
// Counting

namespace {

void add_events(EventCounts& c, bool sem, bool geo) {
  ++c.n;
  c.sem += sem;
  c.geo += geo;
  c.joint += sem && geo;
}

void merge_events(EventCounts& a, const EventCounts& b) {
  a.n += b.n;
  a.sem += b.sem;
  a.geo += b.geo;
  a.joint += b.joint;
}

}  // namespace

void YieldCounts::add(const CandidateRecord& r) {
  const bool sem = r.semantic_passed();
  const bool geo = r.geometric_passed();
  add_events(total, sem, geo);
  add_events(per_category[r.category], sem, geo);
  if (r.status == CandidateStatus::kProviderError) ++provider_errors;
  if (r.semantic && !sem && !r.geometric && !r.error) ++geo_skipped;
  if (r.semantic) {
    ++semantic_fail_reasons[std::string(
        prompts::to_string(prompts::decide(*r.semantic).fail_reason))];
  }
  if (r.geometric) {
    ++geometric_fail_reasons[std::string(
        geoverify::to_string(r.geometric->fail_reason))];
  }
}

void YieldCounts::merge(const YieldCounts& other) {
  merge_events(total, other.total);
  provider_errors += other.provider_errors;
  geo_skipped += other.geo_skipped;
  for (const auto& [k, v] : other.per_category) merge_events(per_category[k], v);
  for (const auto& [k, v] : other.semantic_fail_reasons) semantic_fail_reasons[k] += v;
  for (const auto& [k, v] : other.geometric_fail_reasons) geometric_fail_reasons[k] += v;
}

std::string percent_string(long count, long n) {
  if (n <= 0) throw Error(ErrorCode::kEmptyLog, "no candidates");
  if (count < 0 || count > n) {
    throw Error(ErrorCode::kInvalidArgument, "count outside [0, n]");
  }
  // Hundredths of a percent: count * 10000 / n, rounded half to even.
  const auto num = static_cast<__int128>(count) * 10000;
  auto q = static_cast<long long>(num / n);
  const auto twice_rem = 2 * (num % n);
  if (twice_rem > n || (twice_rem == n && q % 2 == 1)) ++q;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%lld.%02lld", q / 100, q % 100);
  return buf;
}

double percent(long count, long n) { return std::stod(percent_string(count, n)); }

YieldReport yield_decomposition(const YieldCounts& counts) {
  if (counts.total.n == 0) throw Error(ErrorCode::kEmptyLog, "no candidate records");
  YieldReport r;
  r.n = counts.total.n;
  r.counts = counts;
  r.p_sem = percent(counts.total.sem, r.n);
  r.p_joint = percent(counts.total.joint, r.n);
  r.geo_conditional = counts.geo_skipped > 0;
  r.p_geo = r.geo_conditional
                ? (counts.total.sem > 0 ? percent(counts.total.joint, counts.total.sem)
                                        : 0.0)
                : percent(counts.total.geo, r.n);
  return r;
}

YieldReport yield_decomposition(const std::vector<CandidateRecord>& records) {
  YieldCounts c;
  for (const auto& r : records) c.add(r);
  return yield_decomposition(c);
}

// ---------------------------------------------------------------------------
// Lambda sweep

bool geo_pass_at(const CandidateRecord& r, double lambda, int p_n) {
  if (!r.geometric) return false;
  const auto& g = *r.geometric;
  if (g.point_count < p_n) return false;
  if (!g.fitted_sizes || !g.target_sizes) {
    if (g.fail_reason == geoverify::GeoFailReason::kTooFewPoints) return false;
    throw Error(ErrorCode::kMissingRatios,
                "record " + r.candidate_id + " lacks fitted sizes");
  }
  return geoverify::size_rule(*g.fitted_sizes, *g.target_sizes, lambda) ==
         geoverify::GeoFailReason::kNone;
}

std::vector<SweepPoint> lambda_sweep(const std::vector<CandidateRecord>& records,
                                     std::vector<double> lambda_grid, int p_n) {
  if (records.empty()) throw Error(ErrorCode::kEmptyLog, "no candidate records");
  std::sort(lambda_grid.begin(), lambda_grid.end());
  std::vector<SweepPoint> out;
  for (double lambda : lambda_grid) {
    if (!(lambda >= 0.0)) {
      throw Error(ErrorCode::kInvalidArgument, "lambda must be non-negative");
    }
    SweepPoint p;
    p.lambda = lambda;
    for (const auto& r : records) {
      const bool geo = geo_pass_at(r, lambda, p_n);
      ++p.n;
      p.geo += geo;
      p.joint += geo && r.semantic_passed();
    }
    out.push_back(p);
  }
  return out;
}

std::vector<double> default_lambda_grid() {
  return {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
}

// ---------------------------------------------------------------------------
// Reports

namespace {

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

constexpr const char* kStageOrder[] = {"subclass", "inpaint", "verify", "segment",
                                       "depth"};

std::vector<std::pair<std::string, double>> timing_means(
    const std::vector<CandidateRecord>& records) {
  std::map<std::string, std::pair<double, long>> acc;
  for (const auto& r : records) {
    for (const auto& [stage, s] : r.timings) {
      acc[stage].first += s;
      ++acc[stage].second;
    }
  }
  std::vector<std::pair<std::string, double>> out;
  for (const char* stage : kStageOrder) {
    if (auto it = acc.find(stage); it != acc.end()) {
      out.emplace_back(stage, it->second.first / it->second.second);
      acc.erase(it);
    }
  }
  for (const auto& [stage, v] : acc) out.emplace_back(stage, v.first / v.second);
  return out;
}

}  // namespace

std::string sweep_table(const std::vector<SweepPoint>& sweep, ReportFormat fmt) {
  std::ostringstream os;
  if (fmt == ReportFormat::kMarkdown) {
    os << "| lambda | P(S_geo) % | Joint % |\n|---|---|---|\n";
    for (const auto& p : sweep) {
      os << "| " << fixed(p.lambda, 2) << " | " << percent_string(p.geo, p.n)
         << " | " << percent_string(p.joint, p.n) << " |\n";
    }
  } else {
    os << "lambda,geo_pct,joint_pct\n";
    for (const auto& p : sweep) {
      os << fixed(p.lambda, 2) << "," << percent_string(p.geo, p.n) << ","
         << percent_string(p.joint, p.n) << "\n";
    }
  }
  return os.str();
}

std::string report(const std::vector<CandidateRecord>& records, ReportFormat fmt,
                   int p_n) {
  const YieldReport y = yield_decomposition(records);
  const auto& c = y.counts;
  const std::string geo_label = y.geo_conditional ? "P(S_geo | S_sem)" : "P(S_geo)";
  const std::string geo_pct = y.geo_conditional
                                  ? (c.total.sem > 0
                                         ? percent_string(c.total.joint, c.total.sem)
                                         : std::string("0.00"))
                                  : percent_string(c.total.geo, y.n);
  const auto timings = timing_means(records);
  std::vector<SweepPoint> sweep;
  bool sweep_available = true;
  try {
    sweep = lambda_sweep(records, default_lambda_grid(), p_n);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kMissingRatios) throw;
    sweep_available = false;
  }

  std::ostringstream os;
  if (fmt == ReportFormat::kMarkdown) {
    os << "# Yield report\n\n";
    os << "Candidates: " << y.n << " (provider errors: " << c.provider_errors
       << ", counted in N and in no pass event)\n\n";
    os << "| Event | Count | Percent |\n|---|---|---|\n";
    os << "| P(S_sem) | " << c.total.sem << " | " << percent_string(c.total.sem, y.n)
       << " |\n";
    os << "| " << geo_label << " | " << c.total.geo << " | " << geo_pct << " |\n";
    os << "| P(S_sem and S_geo) | " << c.total.joint << " | "
       << percent_string(c.total.joint, y.n) << " |\n\n";
    if (y.geo_conditional) {
      os << "Geometry was evaluated only on semantic passes; the geometric "
            "marginal is conditional.\n\n";
    }
    os << "## Per category\n\n| Category | N | P(S_sem) | P(S_geo) | Joint |\n"
          "|---|---|---|---|---|\n";
    for (const auto& [cat, e] : c.per_category) {
      os << "| " << cat << " | " << e.n << " | " << percent_string(e.sem, e.n)
         << " | " << percent_string(e.geo, e.n) << " | "
         << percent_string(e.joint, e.n) << " |\n";
    }
    os << "\n## Fail reasons\n\n| Stage | Reason | Count |\n|---|---|---|\n";
    for (const auto& [k, v] : c.semantic_fail_reasons) {
      os << "| semantic | " << k << " | " << v << " |\n";
    }
    for (const auto& [k, v] : c.geometric_fail_reasons) {
      os << "| geometric | " << k << " | " << v << " |\n";
    }
    os << "\n## Mean stage time (s)\n\n| Stage | Mean |\n|---|---|\n";
    for (const auto& [stage, mean] : timings) {
      os << "| " << stage << " | " << fixed(mean, 2) << " |\n";
    }
    if (sweep_available) {
      os << "\n## Lambda sweep\n\n" << sweep_table(sweep, fmt);
    }
  } else {
    os << "section,key,count,percent\n";
    os << "yield,n," << y.n << ",\n";
    os << "yield,provider_errors," << c.provider_errors << ",\n";
    os << "yield,sem," << c.total.sem << "," << percent_string(c.total.sem, y.n) << "\n";
    os << "yield," << (y.geo_conditional ? "geo_given_sem" : "geo") << ","
       << c.total.geo << "," << geo_pct << "\n";
    os << "yield,joint," << c.total.joint << ","
       << percent_string(c.total.joint, y.n) << "\n";
    for (const auto& [cat, e] : c.per_category) {
      os << "category_joint," << cat << "," << e.joint << ","
         << percent_string(e.joint, e.n) << "\n";
    }
    for (const auto& [k, v] : c.semantic_fail_reasons) {
      os << "semantic_fail," << k << "," << v << ",\n";
    }
    for (const auto& [k, v] : c.geometric_fail_reasons) {
      os << "geometric_fail," << k << "," << v << ",\n";
    }
    for (const auto& [stage, mean] : timings) {
      os << "stage_time_mean," << stage << ",," << fixed(mean, 2) << "\n";
    }
    if (sweep_available) {
      for (const auto& p : sweep) {
        os << "lambda_joint," << fixed(p.lambda, 2) << "," << p.joint << ","
           << percent_string(p.joint, p.n) << "\n";
      }
    }
  }
  return os.str();
}

std::string sweep_svg(const std::vector<SweepPoint>& sweep) {
  constexpr int kW = 480, kH = 320, kPad = 48;
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW
     << "\" height=\"" << kH << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<line x1=\"" << kPad << "\" y1=\"" << kH - kPad << "\" x2=\"" << kW - kPad
     << "\" y2=\"" << kH - kPad << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << kPad << "\" y1=\"" << kPad << "\" x2=\"" << kPad
     << "\" y2=\"" << kH - kPad << "\" stroke=\"black\"/>\n";
  os << "<text x=\"" << kW / 2 << "\" y=\"" << kH - 12
     << "\" text-anchor=\"middle\" font-size=\"12\">lambda</text>\n";
  os << "<text x=\"14\" y=\"" << kH / 2
     << "\" font-size=\"12\" transform=\"rotate(-90 14 " << kH / 2
     << ")\" text-anchor=\"middle\">joint yield (%)</text>\n";
  if (!sweep.empty()) {
    const double lmax = std::max(1.0, sweep.back().lambda);
    os << "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\" points=\"";
    for (const auto& p : sweep) {
      const double x = kPad + (kW - 2 * kPad) * (p.lambda / lmax);
      const double y = (kH - kPad) - (kH - 2 * kPad) * (p.joint_pct() / 100.0);
      os << fixed(x, 1) << "," << fixed(y, 1) << " ";
    }
    os << "\"/>\n";
    for (const auto& p : sweep) {
      const double x = kPad + (kW - 2 * kPad) * (p.lambda / lmax);
      const double y = (kH - kPad) - (kH - 2 * kPad) * (p.joint_pct() / 100.0);
      os << "<circle cx=\"" << fixed(x, 1) << "\" cy=\"" << fixed(y, 1)
         << "\" r=\"3\" fill=\"steelblue\"/>\n";
    }
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace veria::analytics
