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

#include <doctest.h>

#include <string>
#include <vector>

#include "support.hpp"
#include "veria/error.hpp"
#include "veria/prompts.hpp"

using namespace veria;
using namespace veria::prompts;

namespace {

const std::vector<std::string> kConfigured{"construction vehicle", "motorcycle",
                                           "bicycle"};

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::kInvalidArgument;
}

bool contains(const std::string& hay, std::string_view needle) {
  return hay.find(needle) != std::string::npos;
}

}  // namespace

TEST_SUITE("prompts") {

TEST_CASE("subclass prompt substitutes the label") {
  const auto text = build_subclass_prompt("bicycle", kConfigured);
  CHECK(contains(text, "Provide one subclass of bicycle."));
  CHECK(contains(text, "If the target label is 'bicycle' or 'motorcycle', provide a "
                       "description either without a rider reporting only the vehicle "
                       "dimensions, or with a seated rider reporting the bounding box "
                       "dimensions enclosing both the vehicle and person."));
  CHECK_FALSE(contains(text, "{TARGET_LABEL}"));

  const auto cv = build_subclass_prompt("construction vehicle", kConfigured);
  CHECK(contains(cv, "Provide one subclass of construction vehicle."));
  CHECK(contains(cv, "reference a concrete real-world product model and report its "
                     "official specifications"));
  CHECK(contains(cv, "typical physical dimensions in meters (length, width, height) "
                     "as a realistic range"));
}

TEST_CASE("unknown categories are rejected") {
  CHECK(code_of([] { build_subclass_prompt("", kConfigured); }) ==
        ErrorCode::kUnknownCategory);
  CHECK(code_of([] { build_subclass_prompt("car", kConfigured); }) ==
        ErrorCode::kUnknownCategory);
}

TEST_CASE("verification questions are verbatim") {
  const auto q = verification_questions();
  REQUIRE(q.size() == 4);
  CHECK(q[0] == "Q1) Does the object match the intended subclass category? (Yes/No)");
  CHECK(q[1] ==
        "Q2) Are the object's scale, placement, and orientation plausible given the "
        "surrounding scene context? (Yes/No)");
  CHECK(q[2] ==
        "Q3) How severe are visible artifacts in the object region? "
        "(none/minor/medium/severe)");
  CHECK(q[3] == "Q4) Provide a brief diagnostic comment explaining your assessment.");
  CHECK(verification_preamble() ==
        "You are given two images: a full driving scene with a red bounding box "
        "indicating a synthesized object region, and a cropped close-up of the "
        "boxed region.");
}

TEST_CASE("verification turns are sequential") {
  const std::vector<std::string> answers{"Yes", "No"};
  const auto turns = build_verification_turns("scene.png", "crop.png", answers);
  REQUIRE(turns.size() == 4);
  CHECK(contains(turns[0].text, "Does the object match the intended subclass category?"));
  CHECK(contains(turns[2].text, "none/minor/medium/severe"));
  CHECK_FALSE(contains(turns[1].text, "Q1)"));
  CHECK(turns[0].attachments == std::vector<std::string>{"scene.png", "crop.png"});
  for (std::size_t k = 0; k < turns.size(); ++k) {
    CHECK(turns[k].index == static_cast<int>(k) + 1);
    CHECK(turns[k].history.size() == k);
    if (k > 0) CHECK(turns[k].attachments.empty());
  }
  CHECK(turns[1].history[0].answer == "Yes");
  CHECK(turns[2].history[1].answer == "No");
  CHECK(turns[3].history[2].answer.empty());
}

TEST_CASE("answer normalization") {
  CHECK(parse_yes_no("  Yes, clearly.") == YesNo::kYes);
  CHECK(parse_yes_no("NO") == YesNo::kNo);
  CHECK(parse_severity("Minor artifacts near the wheels") == Severity::kMinor);
  CHECK(parse_severity("none") == Severity::kNone);
  CHECK(parse_severity("Severe.") == Severity::kSevere);
  CHECK(code_of([] { parse_yes_no("maybe"); }) == ErrorCode::kMalformedResponse);
  CHECK(code_of([] { parse_severity("moderate"); }) == ErrorCode::kMalformedResponse);
  const auto v = parse_verdict("yes", "yes", "medium", "  odd shadow ");
  CHECK(v.q3_artifact_severity == Severity::kMedium);
  CHECK_FALSE(v.q4_comment.empty());
}

TEST_CASE("decision rule examples") {
  SemanticVerdict v{YesNo::kYes, YesNo::kYes, Severity::kNone, ""};
  CHECK(decide(v).passed);
  CHECK(decide(v).fail_reason == SemanticFailReason::kNone);
  v.q3_artifact_severity = Severity::kMinor;
  CHECK_FALSE(decide(v).passed);
  CHECK(decide(v).fail_reason == SemanticFailReason::kArtifact);
  v = {YesNo::kNo, YesNo::kNo, Severity::kSevere, ""};
  CHECK(decide(v).fail_reason == SemanticFailReason::kCategory);
}

TEST_CASE("decision rule over all sixteen combinations") {
  int passes = 0;
  for (YesNo q1 : {YesNo::kNo, YesNo::kYes}) {
    for (YesNo q2 : {YesNo::kNo, YesNo::kYes}) {
      for (Severity q3 : {Severity::kNone, Severity::kMinor, Severity::kMedium,
                          Severity::kSevere}) {
        const auto d = decide({q1, q2, q3, "c"});
        const bool expect = q1 == YesNo::kYes && q2 == YesNo::kYes && q3 == Severity::kNone;
        CHECK(d.passed == expect);
        CHECK((d.fail_reason == SemanticFailReason::kNone) == d.passed);
        if (q1 == YesNo::kNo) {
          CHECK(d.fail_reason == SemanticFailReason::kCategory);
        } else if (q2 == YesNo::kNo) {
          CHECK(d.fail_reason == SemanticFailReason::kScale);
        } else if (q3 != Severity::kNone) {
          CHECK(d.fail_reason == SemanticFailReason::kArtifact);
        }
        passes += d.passed;
      }
    }
  }
  CHECK(passes == 1);
}

TEST_CASE("subclass response parsing") {
  const std::string text =
      "Subclass: road bike\n"
      "Description: lightweight frame with drop handlebars and thin tyres\n"
      "Reference product: Example Roadster 3\n"
      "Dimensions: length 2.0\xe2\x80\x93" "2.2 m, width 0.7 to 0.8 m, height 1.0-1.4 m\n";
  const auto spec = parse_subclass_response(text, "bicycle");
  CHECK(spec.subclass_name == "road bike");
  CHECK(spec.size_prior.min == std::array<double, 3>{2.0, 0.7, 1.0});
  CHECK(spec.size_prior.max == std::array<double, 3>{2.2, 0.8, 1.4});
  REQUIRE(spec.rider_included.has_value());
  CHECK_FALSE(*spec.rider_included);

  const std::string single =
      "Subclass: skid steer\nDescription: compact loader\n"
      "Dimensions: length 3.4 m, width 1.8 m, height 2.0 m\n";
  const auto s = parse_subclass_response(single, "construction vehicle");
  CHECK(s.size_prior.min == s.size_prior.max);
  CHECK_FALSE(s.rider_included.has_value());
}

TEST_CASE("subclass response errors") {
  const std::string missing =
      "Subclass: road bike\nDescription: thin tyres\n"
      "Dimensions: length 2.0-2.2 m, width 0.7-0.8 m\n";
  CHECK(code_of([&] { parse_subclass_response(missing, "bicycle"); }) ==
        ErrorCode::kMalformedResponse);
  const std::string tall =
      "Subclass: road bike\nDescription: thin tyres\n"
      "Dimensions: length 2.0-2.2 m, width 0.7-0.8 m, height 45 m\n";
  CHECK(code_of([&] { parse_subclass_response(tall, "bicycle"); }) ==
        ErrorCode::kImplausibleDimensions);
  const std::string wide =
      "Subclass: road bike\nDescription: thin tyres\n"
      "Dimensions: length 0.5-6 m, width 0.7-0.8 m, height 1-1.2 m\n";
  CHECK(code_of([&] { parse_subclass_response(wide, "bicycle"); }) ==
        ErrorCode::kImplausibleDimensions);
}

TEST_CASE("serialize and parse round trip") {
  RandomStream rng(4);
  for (int i = 0; i < 200; ++i) {
    SubclassSpec spec;
    spec.category = i % 2 ? "motorcycle" : "construction vehicle";
    spec.subclass_name = "variant " + std::to_string(i);
    spec.description = "description number " + std::to_string(i);
    spec.reference_product = "Model " + std::to_string(i * 7);
    for (int a = 0; a < 3; ++a) {
      const double lo = std::round(rng.uniform(0.5, 5.0) * 100) / 100;
      spec.size_prior.min[a] = lo;
      spec.size_prior.max[a] = std::round(rng.uniform(lo, 2 * lo) * 100) / 100;
    }
    if (spec.category == "motorcycle") spec.rider_included = i % 4 == 1;
    const auto back =
        parse_subclass_response(serialize_subclass_response(spec), spec.category);
    CHECK(back == spec);
  }
}

TEST_CASE("json subclass responses") {
  const std::string json = R"({"subclass_name": "excavator", "description": "tracked digger",
    "reference_product": "X1",
    "dimensions": {"length": [6, 9.5], "width": "2.5 to 3.2", "height": 3.4}})";
  const auto spec = parse_subclass_response(json, "construction vehicle");
  CHECK(spec.subclass_name == "excavator");
  CHECK(spec.size_prior.max[0] == 9.5);
  CHECK(spec.size_prior.min[1] == 2.5);
  CHECK(spec.size_prior.min[2] == spec.size_prior.max[2]);
}

}  // TEST_SUITE
