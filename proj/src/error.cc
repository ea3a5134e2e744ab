// Copyright 2026 The dnsexfil Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dnsexfil/error.h"

namespace dnsexfil {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMalformedLine: return "MalformedLine";
    case ErrorCode::kEmptyQname: return "EmptyQname";
    case ErrorCode::kMismatchedDomain: return "MismatchedDomain";
    case ErrorCode::kUnknownDomain: return "UnknownDomain";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kInsufficientSamples: return "InsufficientSamples";
    case ErrorCode::kQuantileOutOfRange: return "QuantileOutOfRange";
    case ErrorCode::kVersionMismatch: return "VersionMismatch";
    case ErrorCode::kCorruptModel: return "CorruptModel";
    case ErrorCode::kCorruptCheckpoint: return "CorruptCheckpoint";
    case ErrorCode::kIoFailure: return "IoFailure";
    case ErrorCode::kLabelConflict: return "LabelConflict";
    case ErrorCode::kInsufficientBaseline: return "InsufficientBaseline";
    case ErrorCode::kInsufficientWindow: return "InsufficientWindow";
    case ErrorCode::kFeatureOrderMismatch: return "FeatureOrderMismatch";
  }
  return "Unknown";
}

}  // namespace dnsexfil
