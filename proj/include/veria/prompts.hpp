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

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "veria/placement.hpp"

namespace veria::prompts {

/// Subclass description and size prior returned by the language model.
struct SubclassSpec {
  std::string category;
  std::string subclass_name;
  std::string description;
  placement::SizePrior size_prior;
  std::optional<bool> rider_included;  // bicycle / motorcycle only
  std::string reference_product;

  bool operator==(const SubclassSpec&) const = default;
};

bool is_two_wheeler(std::string_view category);

enum class YesNo { kNo, kYes };
enum class Severity { kNone, kMinor, kMedium, kSevere };

std::string_view to_string(YesNo v);
std::string_view to_string(Severity s);
YesNo parse_yes_no(std::string_view answer);      // throws MalformedResponse
Severity parse_severity(std::string_view answer);  // throws MalformedResponse

struct SemanticVerdict {
  YesNo q1_category_match = YesNo::kNo;
  YesNo q2_scene_plausible = YesNo::kNo;
  Severity q3_artifact_severity = Severity::kSevere;
  std::string q4_comment;

  bool operator==(const SemanticVerdict&) const = default;
};

/// Builds a verdict from four raw answers using leading-token matching.
SemanticVerdict parse_verdict(std::string_view q1, std::string_view q2,
                              std::string_view q3, std::string_view q4);

enum class SemanticFailReason { kNone, kCategory, kScale, kArtifact };
std::string_view to_string(SemanticFailReason r);
SemanticFailReason parse_semantic_fail_reason(std::string_view s);

struct VerificationDecision {
  bool passed = false;
  SemanticFailReason fail_reason = SemanticFailReason::kCategory;
};

/// Passes only for (yes, yes, none); otherwise the first failing question
/// in Q1, Q2, Q3 order determines the reason.
VerificationDecision decide(const SemanticVerdict& v);

/// Subclass specification prompt for a configured category.
std::string build_subclass_prompt(std::string_view category,
                                  std::span<const std::string> configured);

/// Parses a subclass response. Accepts the line-oriented text produced by
/// serialize_subclass_response or a JSON object with the same fields.
/// Dimension ranges may be written "a-b", "a–b" or "a to b"; single values
/// become min == max.
SubclassSpec parse_subclass_response(std::string_view text,
                                     std::string_view category);

std::string serialize_subclass_response(const SubclassSpec& spec);

struct QuestionAnswer {
  std::string question;
  std::string answer;
};

struct ConversationTurn {
  int index = 0;  // 1-based
  std::string text;
  std::vector<QuestionAnswer> history;  // index - 1 prior pairs
  std::vector<std::string> attachments;  // image references, turn 1 only
};

/// The four question texts, verbatim.
std::span<const std::string> verification_questions();
std::string_view verification_preamble();

/// Four sequential turns. prior_answers[k] fills the answer of question k+1
/// in later turns' history; missing answers are left empty for the provider
/// to fill as the conversation proceeds.
std::vector<ConversationTurn> build_verification_turns(
    std::string_view scene_marked_ref, std::string_view crop_ref,
    std::span<const std::string> prior_answers = {});

}  // namespace veria::prompts
