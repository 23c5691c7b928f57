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

#include "veria/error.hpp"

namespace veria {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNotVisible: return "NotVisible";
    case ErrorCode::kInvalidDepth: return "InvalidDepth";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kUnknownCategory: return "UnknownCategory";
    case ErrorCode::kMalformedResponse: return "MalformedResponse";
    case ErrorCode::kImplausibleDimensions: return "ImplausibleDimensions";
    case ErrorCode::kProviderUnavailable: return "ProviderUnavailable";
    case ErrorCode::kProviderRejected: return "ProviderRejected";
    case ErrorCode::kTimeout: return "Timeout";
    case ErrorCode::kEmptySegmentation: return "EmptySegmentation";
    case ErrorCode::kEmptyCloud: return "EmptyCloud";
    case ErrorCode::kDegenerateExtent: return "DegenerateExtent";
    case ErrorCode::kTooFewPoints: return "TooFewPoints";
    case ErrorCode::kDegenerateCloud: return "DegenerateCloud";
    case ErrorCode::kEmptyLog: return "EmptyLog";
    case ErrorCode::kMissingRatios: return "MissingRatios";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kMissingAsset: return "MissingAsset";
    case ErrorCode::kConfigError: return "ConfigError";
  }
  return "Unknown";
}

}  // namespace veria
