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

#include "veria/prompts.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <regex>
#include <sstream>

#include <nlohmann/json.hpp>

#include "prompt_templates.hpp"
#include "veria/error.hpp"

namespace veria::prompts {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::string leading_token(std::string_view answer) {
  const std::string s = lower(trim(answer));
  std::size_t end = 0;
  while (end < s.size() && std::isalpha(static_cast<unsigned char>(s[end]))) {
    ++end;
  }
  return s.substr(0, end);
}

[[noreturn]] void malformed(const std::string& what) {
  throw Error(ErrorCode::kMalformedResponse, what);
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  return std::string(buf, ptr);
}

struct VerificationTemplate {
  std::string preamble;
  std::vector<std::string> questions;
};

const VerificationTemplate& verification_template() {
  static const VerificationTemplate tpl = [] {
    VerificationTemplate t;
    std::istringstream in(templates::kVerificationV1);
    std::string line;
    while (std::getline(in, line)) {
      const auto body = trim(line);
      if (body.empty()) continue;
      if (t.preamble.empty()) {
        t.preamble = std::string(body);
      } else {
        t.questions.emplace_back(body);
      }
    }
    return t;
  }();
  return tpl;
}

void check_plausible(const placement::SizePrior& prior) {
  for (int i = 0; i < 3; ++i) {
    if (!(prior.min[i] > 0.0) || prior.min[i] > prior.max[i]) {
      malformed("dimension range must satisfy 0 < min <= max");
    }
    if (prior.max[i] / prior.min[i] > 10.0 || prior.max[i] > 30.0) {
      throw Error(ErrorCode::kImplausibleDimensions,
                  "dimension range " + format_double(prior.min[i]) + ".." +
                      format_double(prior.max[i]) + " m");
    }
  }
}

// Parses "2.0-2.2", "2.0 – 2.2 m", "2 to 2.5" or "1.8" into (min, max).
std::optional<std::pair<double, double>> parse_range(std::string_view text) {
  static const std::regex kRange(
      R"(([0-9]+(?:\.[0-9]+)?(?:[eE][-+]?[0-9]+)?)\s*(?:m\b)?\s*(?:(?:-|–|—|to)\s*([0-9]+(?:\.[0-9]+)?(?:[eE][-+]?[0-9]+)?))?)");
  std::cmatch m;
  if (!std::regex_search(text.data(), text.data() + text.size(), m, kRange)) {
    return std::nullopt;
  }
  const double lo = std::stod(m[1].str());
  const double hi = m[2].matched ? std::stod(m[2].str()) : lo;
  return std::make_pair(lo, hi);
}

constexpr std::array<const char*, 3> kAxes = {"length", "width", "height"};

SubclassSpec parse_json_response(std::string_view text,
                                 std::string_view category) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    malformed(e.what());
  }
  SubclassSpec spec;
  spec.category = std::string(category);
  auto str_field = [&](std::initializer_list<const char*> keys) {
    for (const char* k : keys) {
      if (j.contains(k) && j[k].is_string()) return j[k].get<std::string>();
    }
    return std::string{};
  };
  spec.subclass_name = str_field({"subclass_name", "subclass"});
  spec.description = str_field({"description"});
  spec.reference_product = str_field({"reference_product"});
  if (spec.subclass_name.empty() || spec.description.empty()) {
    malformed("missing subclass name or description");
  }
  if (!j.contains("dimensions") || !j["dimensions"].is_object()) {
    malformed("missing dimensions");
  }
  const auto& dims = j["dimensions"];
  for (int i = 0; i < 3; ++i) {
    if (!dims.contains(kAxes[i])) malformed(std::string("missing ") + kAxes[i]);
    const auto& d = dims[kAxes[i]];
    std::optional<std::pair<double, double>> r;
    if (d.is_number()) {
      r = std::make_pair(d.get<double>(), d.get<double>());
    } else if (d.is_array() && d.size() == 2 && d[0].is_number() &&
               d[1].is_number()) {
      r = std::make_pair(d[0].get<double>(), d[1].get<double>());
    } else if (d.is_string()) {
      r = parse_range(d.get<std::string>());
    }
    if (!r) malformed(std::string("unparseable ") + kAxes[i]);
    spec.size_prior.min[i] = r->first;
    spec.size_prior.max[i] = r->second;
  }
  if (is_two_wheeler(category)) {
    spec.rider_included =
        j.contains("rider_included") && j["rider_included"].is_boolean() &&
        j["rider_included"].get<bool>();
  }
  return spec;
}

}  // namespace

bool is_two_wheeler(std::string_view category) {
  return category == "bicycle" || category == "motorcycle";
}

std::string_view to_string(YesNo v) { return v == YesNo::kYes ? "yes" : "no"; }

std::string_view to_string(Severity s) {
  switch (s) {
    case Severity::kNone: return "none";
    case Severity::kMinor: return "minor";
    case Severity::kMedium: return "medium";
    case Severity::kSevere: return "severe";
  }
  return "severe";
}

YesNo parse_yes_no(std::string_view answer) {
  const std::string tok = leading_token(answer);
  if (tok == "yes") return YesNo::kYes;
  if (tok == "no") return YesNo::kNo;
  malformed("expected yes/no, got '" + std::string(answer) + "'");
}

Severity parse_severity(std::string_view answer) {
  const std::string tok = leading_token(answer);
  if (tok == "none") return Severity::kNone;
  if (tok == "minor") return Severity::kMinor;
  if (tok == "medium") return Severity::kMedium;
  if (tok == "severe") return Severity::kSevere;
  malformed("expected none/minor/medium/severe, got '" + std::string(answer) +
            "'");
}

SemanticVerdict parse_verdict(std::string_view q1, std::string_view q2,
                              std::string_view q3, std::string_view q4) {
  SemanticVerdict v;
  v.q1_category_match = parse_yes_no(q1);
  v.q2_scene_plausible = parse_yes_no(q2);
  v.q3_artifact_severity = parse_severity(q3);
  v.q4_comment = std::string(trim(q4));
  return v;
}

std::string_view to_string(SemanticFailReason r) {
  switch (r) {
    case SemanticFailReason::kNone: return "none";
    case SemanticFailReason::kCategory: return "category";
    case SemanticFailReason::kScale: return "scale";
    case SemanticFailReason::kArtifact: return "artifact";
  }
  return "none";
}

SemanticFailReason parse_semantic_fail_reason(std::string_view s) {
  if (s == "none") return SemanticFailReason::kNone;
  if (s == "category") return SemanticFailReason::kCategory;
  if (s == "scale") return SemanticFailReason::kScale;
  if (s == "artifact") return SemanticFailReason::kArtifact;
  throw Error(ErrorCode::kParseError, "unknown fail reason " + std::string(s));
}

VerificationDecision decide(const SemanticVerdict& v) {
  if (v.q1_category_match != YesNo::kYes) {
    return {false, SemanticFailReason::kCategory};
  }
  if (v.q2_scene_plausible != YesNo::kYes) {
    return {false, SemanticFailReason::kScale};
  }
  if (v.q3_artifact_severity != Severity::kNone) {
    return {false, SemanticFailReason::kArtifact};
  }
  return {true, SemanticFailReason::kNone};
}

std::string build_subclass_prompt(std::string_view category,
                                  std::span<const std::string> configured) {
  if (category.empty() ||
      std::find(configured.begin(), configured.end(), category) ==
          configured.end()) {
    throw Error(ErrorCode::kUnknownCategory,
                "'" + std::string(category) + "' is not configured");
  }
  std::string text = templates::kSubclassV1;
  static constexpr std::string_view kSlot = "{TARGET_LABEL}";
  for (auto pos = text.find(kSlot); pos != std::string::npos;
       pos = text.find(kSlot, pos + category.size())) {
    text.replace(pos, kSlot.size(), category);
  }
  return text;
}

SubclassSpec parse_subclass_response(std::string_view text,
                                     std::string_view category) {
  const std::string_view body = trim(text);
  SubclassSpec spec;
  if (!body.empty() && body.front() == '{') {
    spec = parse_json_response(body, category);
    check_plausible(spec.size_prior);
    return spec;
  }

  spec.category = std::string(category);
  std::array<bool, 3> seen{false, false, false};
  bool rider_seen = false;
  std::istringstream in{std::string(body)};
  std::string line;
  static const std::regex kAxis(R"(\b(length|width|height)\b\s*[:=]?\s*)",
                                std::regex::icase);
  while (std::getline(in, line)) {
    const auto colon = line.find(':');
    const std::string key =
        colon == std::string::npos ? "" : lower(trim(line.substr(0, colon)));
    const std::string value =
        colon == std::string::npos ? "" : std::string(trim(line.substr(colon + 1)));
    if (key == "subclass" || key == "subclass name") {
      spec.subclass_name = value;
    } else if (key == "description") {
      spec.description = value;
    } else if (key == "reference product") {
      spec.reference_product = value;
    } else if (key == "rider included" || key == "rider") {
      rider_seen = true;
      spec.rider_included = parse_yes_no(value) == YesNo::kYes;
    }
    // Dimension mentions may appear on any line except free-text fields.
    const bool free_text = key == "subclass" || key == "subclass name" ||
                           key == "description" || key == "reference product";
    if (free_text) continue;
    for (auto it = std::sregex_iterator(line.begin(), line.end(), kAxis);
         it != std::sregex_iterator(); ++it) {
      const std::string axis = lower((*it)[1].str());
      const int i = axis == "length" ? 0 : axis == "width" ? 1 : 2;
      const auto tail = std::string_view(line).substr(it->position() + it->length());
      const auto r = parse_range(tail.substr(0, std::min<std::size_t>(tail.size(), 40)));
      if (!r || seen[i]) continue;
      seen[i] = true;
      spec.size_prior.min[i] = r->first;
      spec.size_prior.max[i] = r->second;
    }
  }
  if (spec.subclass_name.empty()) malformed("missing subclass name");
  if (spec.description.empty()) malformed("missing description");
  for (int i = 0; i < 3; ++i) {
    if (!seen[i]) malformed(std::string("missing ") + kAxes[i]);
  }
  if (is_two_wheeler(category)) {
    if (!rider_seen) spec.rider_included = false;
  } else {
    spec.rider_included.reset();
  }
  check_plausible(spec.size_prior);
  return spec;
}

std::string serialize_subclass_response(const SubclassSpec& spec) {
  std::string out;
  out += "Subclass: " + spec.subclass_name + "\n";
  out += "Description: " + spec.description + "\n";
  out += "Reference product: " + spec.reference_product + "\n";
  out += "Dimensions:";
  for (int i = 0; i < 3; ++i) {
    out += std::string(i == 0 ? " " : ", ") + kAxes[i] + " " +
           format_double(spec.size_prior.min[i]) + "-" +
           format_double(spec.size_prior.max[i]) + " m";
  }
  out += "\n";
  if (spec.rider_included) {
    out += std::string("Rider included: ") + (*spec.rider_included ? "yes" : "no") +
           "\n";
  }
  return out;
}

std::span<const std::string> verification_questions() {
  return verification_template().questions;
}

std::string_view verification_preamble() {
  return verification_template().preamble;
}

std::vector<ConversationTurn> build_verification_turns(
    std::string_view scene_marked_ref, std::string_view crop_ref,
    std::span<const std::string> prior_answers) {
  const auto& tpl = verification_template();
  std::vector<ConversationTurn> turns;
  turns.reserve(tpl.questions.size());
  for (std::size_t k = 0; k < tpl.questions.size(); ++k) {
    ConversationTurn turn;
    turn.index = static_cast<int>(k) + 1;
    turn.text = k == 0 ? tpl.preamble + "\n\n" + tpl.questions[k]
                       : tpl.questions[k];
    for (std::size_t j = 0; j < k; ++j) {
      turn.history.push_back(
          {tpl.questions[j],
           j < prior_answers.size() ? prior_answers[j] : std::string{}});
    }
    if (k == 0) {
      turn.attachments = {std::string(scene_marked_ref), std::string(crop_ref)};
    }
    turns.push_back(std::move(turn));
  }
  return turns;
}

}  // namespace veria::prompts
