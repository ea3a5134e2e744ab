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

#ifndef DNSEXFIL_DNS_RECORD_H_
#define DNSEXFIL_DNS_RECORD_H_

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace dnsexfil {

enum class RrType : uint8_t {
  kA = 0,
  kAAAA,
  kTXT,
  kNULL,
  kSRV,
  kPTR,
  kCNAME,
  kMX,
  kOther,
};

inline constexpr size_t kNumRrTypes = 9;

std::string_view RrTypeName(RrType type);

// Case-insensitive. Unknown tokens map to kOther.
RrType ParseRrType(std::string_view token);

inline bool IsIpType(RrType type) {
  return type == RrType::kA || type == RrType::kAAAA;
}

// One resolver log line: query name, response values, query type and time.
struct DnsLogRecord {
  // Canonical form: original label case, exactly one trailing dot.
  std::string qname;
  // Empty for NXDOMAIN.
  std::vector<std::string> responses;
  RrType rrtype = RrType::kA;
  // Original token when rrtype is kOther; empty otherwise.
  std::string rrtype_token;
  // Milliseconds since the Unix epoch, UTC.
  int64_t ts_ms = 0;

  std::string_view TypeToken() const {
    return rrtype == RrType::kOther ? std::string_view(rrtype_token)
                                    : RrTypeName(rrtype);
  }

  // Length in characters, excluding the trailing root dot.
  size_t QnameLength() const { return qname.empty() ? 0 : qname.size() - 1; }

  friend bool operator==(const DnsLogRecord&, const DnsLogRecord&) = default;
};

enum class LogFormat { kCsv, kJsonLines };

// Appends a trailing dot if missing and collapses repeated trailing dots.
// Throws Error(kEmptyQname) when nothing but dots remain.
std::string CanonicalizeQname(std::string_view qname);

// Parses "ts,qname,rrtype,responses" (responses ';'-joined) or a JSON object
// with the same field names. Throws Error(kMalformedLine) or
// Error(kEmptyQname).
DnsLogRecord ParseLogLine(std::string_view line, LogFormat format);

// Inverse of ParseLogLine; no trailing newline.
std::string FormatLogLine(const DnsLogRecord& record, LogFormat format);

inline constexpr std::string_view kCsvHeader = "ts,qname,rrtype,responses";

}  // namespace dnsexfil

#endif  // DNSEXFIL_DNS_RECORD_H_
