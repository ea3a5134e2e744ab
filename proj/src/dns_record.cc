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

#include "dnsexfil/dns_record.h"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>

#include "dnsexfil/error.h"
#include "json.hpp"

namespace dnsexfil {
namespace {

constexpr std::array<std::string_view, kNumRrTypes> kRrTypeNames = {
    "A", "AAAA", "TXT", "NULL", "SRV", "PTR", "CNAME", "MX", "OTHER"};

bool EqualsIgnoreCase(std::string_view a, std::string_view b) {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::toupper(static_cast<unsigned char>(x)) ==
                  std::toupper(static_cast<unsigned char>(y));
         });
}

std::string_view Trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
    s.remove_prefix(1);
  }
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
    s.remove_suffix(1);
  }
  return s;
}

[[noreturn]] void Malformed(std::string_view line, std::string_view why) {
  std::string shown(line.substr(0, 80));
  throw Error(ErrorCode::kMalformedLine, std::string(why) + " in '" + shown + "'");
}

// Decimal seconds with up to millisecond precision, parsed without going
// through floating point so bucket arithmetic is exact.
int64_t ParseSecondsToMillis(std::string_view text, std::string_view line) {
  text = Trim(text);
  bool negative = false;
  if (!text.empty() && text.front() == '-') {
    negative = true;
    text.remove_prefix(1);
  }
  const size_t dot = text.find('.');
  std::string_view whole = text.substr(0, dot);
  std::string_view frac =
      dot == std::string_view::npos ? std::string_view() : text.substr(dot + 1);
  if (whole.empty() || frac.size() > 9) Malformed(line, "bad timestamp");
  int64_t seconds = 0;
  auto [p, ec] = std::from_chars(whole.data(), whole.data() + whole.size(), seconds);
  if (ec != std::errc() || p != whole.data() + whole.size()) {
    Malformed(line, "bad timestamp");
  }
  int64_t millis = 0;
  for (size_t i = 0; i < 3; ++i) {
    millis *= 10;
    if (i < frac.size()) {
      if (!std::isdigit(static_cast<unsigned char>(frac[i]))) {
        Malformed(line, "bad timestamp");
      }
      millis += frac[i] - '0';
    }
  }
  for (size_t i = 3; i < frac.size(); ++i) {
    if (!std::isdigit(static_cast<unsigned char>(frac[i]))) {
      Malformed(line, "bad timestamp");
    }
  }
  if (seconds > std::numeric_limits<int64_t>::max() / 1000 - 1) {
    Malformed(line, "timestamp out of range");
  }
  const int64_t total = seconds * 1000 + millis;
  return negative ? -total : total;
}

std::string FormatMillis(int64_t ts_ms) {
  const bool negative = ts_ms < 0;
  const uint64_t abs_ms = negative ? static_cast<uint64_t>(-(ts_ms + 1)) + 1
                                   : static_cast<uint64_t>(ts_ms);
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%s%llu.%03llu", negative ? "-" : "",
                static_cast<unsigned long long>(abs_ms / 1000),
                static_cast<unsigned long long>(abs_ms % 1000));
  return buf;
}

std::vector<std::string> SplitResponses(std::string_view field) {
  std::vector<std::string> out;
  field = Trim(field);
  if (field.empty()) return out;
  size_t start = 0;
  while (true) {
    const size_t semi = field.find(';', start);
    std::string_view part = Trim(field.substr(start, semi - start));
    if (!part.empty()) out.emplace_back(part);
    if (semi == std::string_view::npos) break;
    start = semi + 1;
  }
  return out;
}

DnsLogRecord ParseCsv(std::string_view line) {
  // The responses column is last and may itself contain commas (TXT data), so
  // only the first three separators are structural.
  std::array<std::string_view, 3> head;
  size_t pos = 0;
  for (auto& field : head) {
    const size_t comma = line.find(',', pos);
    if (comma == std::string_view::npos) Malformed(line, "expected 4 columns");
    field = line.substr(pos, comma - pos);
    pos = comma + 1;
  }
  DnsLogRecord record;
  record.ts_ms = ParseSecondsToMillis(head[0], line);
  record.qname = CanonicalizeQname(Trim(head[1]));
  const std::string_view type_token = Trim(head[2]);
  if (type_token.empty()) Malformed(line, "missing rrtype");
  record.rrtype = ParseRrType(type_token);
  if (record.rrtype == RrType::kOther) record.rrtype_token = std::string(type_token);
  record.responses = SplitResponses(line.substr(pos));
  return record;
}

DnsLogRecord ParseJson(std::string_view line) {
  nlohmann::json doc = nlohmann::json::parse(line, nullptr, /*allow_exceptions=*/false);
  if (!doc.is_object()) Malformed(line, "not a JSON object");
  DnsLogRecord record;
  const auto ts = doc.find("ts");
  if (ts == doc.end()) Malformed(line, "missing ts");
  if (ts->is_string()) {
    record.ts_ms = ParseSecondsToMillis(ts->get<std::string>(), line);
  } else if (ts->is_number_integer()) {
    record.ts_ms = ts->get<int64_t>() * 1000;
  } else if (ts->is_number_float()) {
    const double seconds = ts->get<double>();
    if (!std::isfinite(seconds)) Malformed(line, "bad timestamp");
    record.ts_ms = std::llround(seconds * 1000.0);
  } else {
    Malformed(line, "bad timestamp");
  }
  const auto qname = doc.find("qname");
  if (qname == doc.end() || !qname->is_string()) Malformed(line, "missing qname");
  record.qname = CanonicalizeQname(qname->get<std::string>());
  const auto type = doc.find("rrtype");
  if (type == doc.end() || !type->is_string()) Malformed(line, "missing rrtype");
  const std::string token = type->get<std::string>();
  if (Trim(token).empty()) Malformed(line, "missing rrtype");
  record.rrtype = ParseRrType(Trim(token));
  if (record.rrtype == RrType::kOther) record.rrtype_token = std::string(Trim(token));
  const auto responses = doc.find("responses");
  if (responses != doc.end() && !responses->is_null()) {
    if (responses->is_string()) {
      record.responses = SplitResponses(responses->get<std::string>());
    } else if (responses->is_array()) {
      for (const auto& value : *responses) {
        if (!value.is_string()) Malformed(line, "non-string response");
        if (!value.get<std::string>().empty()) {
          record.responses.push_back(value.get<std::string>());
        }
      }
    } else {
      Malformed(line, "bad responses");
    }
  }
  return record;
}

}  // namespace

std::string_view RrTypeName(RrType type) {
  return kRrTypeNames[static_cast<size_t>(type)];
}

RrType ParseRrType(std::string_view token) {
  for (size_t i = 0; i + 1 < kNumRrTypes; ++i) {
    if (EqualsIgnoreCase(token, kRrTypeNames[i])) return static_cast<RrType>(i);
  }
  return RrType::kOther;
}

std::string CanonicalizeQname(std::string_view qname) {
  qname = Trim(qname);
  while (!qname.empty() && qname.back() == '.') qname.remove_suffix(1);
  if (qname.empty()) throw Error(ErrorCode::kEmptyQname, "query name is empty");
  std::string out(qname);
  out.push_back('.');
  return out;
}

DnsLogRecord ParseLogLine(std::string_view line, LogFormat format) {
  while (!line.empty() && (line.back() == '\n' || line.back() == '\r')) {
    line.remove_suffix(1);
  }
  return format == LogFormat::kCsv ? ParseCsv(line) : ParseJson(line);
}

std::string FormatLogLine(const DnsLogRecord& record, LogFormat format) {
  if (format == LogFormat::kCsv) {
    std::string out = FormatMillis(record.ts_ms);
    out += ',';
    out += record.qname;
    out += ',';
    out += record.TypeToken();
    out += ',';
    for (size_t i = 0; i < record.responses.size(); ++i) {
      if (i > 0) out += ';';
      out += record.responses[i];
    }
    return out;
  }
  nlohmann::ordered_json doc;
  doc["ts"] = FormatMillis(record.ts_ms);
  doc["qname"] = record.qname;
  doc["rrtype"] = std::string(record.TypeToken());
  doc["responses"] = record.responses;
  return doc.dump();
}

}  // namespace dnsexfil
