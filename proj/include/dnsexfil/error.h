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

#ifndef DNSEXFIL_ERROR_H_
#define DNSEXFIL_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace dnsexfil {

enum class ErrorCode {
  kMalformedLine,
  kEmptyQname,
  kMismatchedDomain,
  kUnknownDomain,
  kInvalidConfig,
  kInsufficientSamples,
  kQuantileOutOfRange,
  kVersionMismatch,
  kCorruptModel,
  kCorruptCheckpoint,
  kIoFailure,
  kLabelConflict,
  kInsufficientBaseline,
  kInsufficientWindow,
  kFeatureOrderMismatch,
};

std::string_view ErrorCodeName(ErrorCode code);

// Every recoverable failure in the library surfaces as this exception; callers
// that need to keep going (log readers, detection cycles) switch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace dnsexfil

#endif  // DNSEXFIL_ERROR_H_
