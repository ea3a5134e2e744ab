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

#include "dnsexfil/detector.h"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <thread>

#include "dnsexfil/error.h"
#include "json.hpp"

namespace dnsexfil {
namespace {

constexpr int64_t kDayMillis = int64_t{86400} * 1000;
constexpr size_t kParallelThreshold = 64;

std::string_view Trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string NormalizeDomain(std::string_view domain) {
  std::string out = CanonicalizeQname(domain);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string WithoutRootDot(const std::string& domain) {
  return domain.empty() || domain.back() != '.' ? domain : domain.substr(0, domain.size() - 1);
}

template <typename Fn>
void ParallelFor(size_t n, Fn&& fn) {
  const size_t workers =
      n < kParallelThreshold ? 1 : std::clamp<size_t>(std::thread::hardware_concurrency(), 1, 8);
  if (workers <= 1) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const size_t chunk = (n + workers - 1) / workers;
  std::vector<std::jthread> pool;
  for (size_t w = 0; w < workers; ++w) {
    const size_t first = w * chunk;
    const size_t last = std::min(n, first + chunk);
    if (first >= last) break;
    pool.emplace_back([&fn, first, last] {
      for (size_t i = first; i < last; ++i) fn(i);
    });
  }
}

int64_t FloorDiv(int64_t a, int64_t b) {
  int64_t q = a / b;
  if (a % b != 0 && a < 0) --q;
  return q;
}

}  // namespace

Whitelist Whitelist::Parse(std::string_view text) {
  Whitelist list;
  size_t pos = 0;
  while (pos <= text.size()) {
    size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    if (const size_t hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = Trim(line);
    if (line.empty()) continue;
    size_t split = 0;
    while (split < line.size() && !std::isspace(static_cast<unsigned char>(line[split]))) ++split;
    list.Add(line.substr(0, split), std::string(Trim(line.substr(split))));
  }
  return list;
}

Whitelist Whitelist::Load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoFailure, "cannot open whitelist " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return Parse(text.str());
}

void Whitelist::Add(std::string_view domain, std::string note) {
  entries_[NormalizeDomain(domain)] = std::move(note);
}

bool Blocklist::Add(BlocklistEntry entry) {
  if (Contains(entry.domain)) return false;
  index_.emplace(entry.domain, entries_.size());
  entries_.push_back(std::move(entry));
  return true;
}

BlocklistFormat ParseBlocklistFormat(std::string_view name) {
  if (name == "plain") return BlocklistFormat::kPlain;
  if (name == "rpz") return BlocklistFormat::kRpz;
  throw Error(ErrorCode::kInvalidConfig, "unknown blocklist format '" + std::string(name) + "'");
}

std::string EmitBlocklist(const Blocklist& blocklist, BlocklistFormat format) {
  std::string out;
  if (format == BlocklistFormat::kPlain) {
    out = "# dnsexfil blocklist: one domain per line, descendants included\n";
    for (const BlocklistEntry& e : blocklist.entries()) out += WithoutRootDot(e.domain) + "\n";
    return out;
  }
  out =
      "$TTL 300\n"
      "@ IN SOA localhost. hostmaster.localhost. 1 3600 600 86400 300\n"
      "@ IN NS localhost.\n";
  for (const BlocklistEntry& e : blocklist.entries()) {
    const std::string name = WithoutRootDot(e.domain);
    out += name + " CNAME .\n";
    out += "*." + name + " CNAME .\n";
  }
  return out;
}

void WriteBlocklist(const std::string& path, const Blocklist& blocklist, BlocklistFormat format) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << EmitBlocklist(blocklist, format);
  out.close();
  if (!out) throw Error(ErrorCode::kIoFailure, "cannot write blocklist " + path);
}

std::vector<std::string> ParseBlocklist(std::string_view text) {
  std::vector<std::string> domains;
  std::set<std::string> seen;
  size_t pos = 0;
  while (pos < text.size()) {
    size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = Trim(text.substr(pos, end - pos));
    pos = end + 1;
    if (line.empty() || line.front() == '#' || line.front() == ';' || line.front() == '$' ||
        line.front() == '@') {
      continue;
    }
    size_t split = 0;
    while (split < line.size() && !std::isspace(static_cast<unsigned char>(line[split]))) ++split;
    std::string_view name = line.substr(0, split);
    if (name.starts_with("*.")) name.remove_prefix(2);
    const std::string domain = NormalizeDomain(name);
    if (seen.insert(domain).second) domains.push_back(domain);
  }
  return domains;
}

std::string VerdictToJson(const Verdict& v) {
  nlohmann::ordered_json doc;
  doc["domain"] = v.domain;
  doc["t_now"] = v.t_now;
  doc["score"] = v.score;
  doc["threshold"] = v.threshold;
  doc["anomalous"] = v.anomalous;
  doc["whitelisted"] = v.whitelisted;
  doc["blocked"] = v.blocked;
  nlohmann::ordered_json features;
  const auto values = v.features.Values();
  for (size_t i = 0; i < kNumFeatures; ++i) {
    if (kFeatureNames[i] == "vol") {
      features["vol"] = v.features.vol;
    } else {
      features[std::string(kFeatureNames[i])] = values[i];
    }
  }
  doc["features"] = std::move(features);
  return doc.dump();
}

Verdict VerdictFromJson(std::string_view line) {
  const nlohmann::json doc = nlohmann::json::parse(line, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    throw Error(ErrorCode::kMalformedLine, "verdict line is not a JSON object");
  }
  try {
    Verdict v;
    v.domain = doc.at("domain").get<std::string>();
    v.t_now = doc.at("t_now").get<int64_t>();
    v.score = doc.at("score").get<double>();
    v.threshold = doc.at("threshold").get<double>();
    v.anomalous = doc.at("anomalous").get<bool>();
    v.whitelisted = doc.value("whitelisted", false);
    v.blocked = doc.value("blocked", false);
    const auto& f = doc.at("features");
    v.features.domain = v.domain;
    v.features.t_now = v.t_now;
    v.features.ent = f.at("ent").get<double>();
    v.features.ni = f.at("ni").get<double>();
    v.features.uniq = f.at("uniq").get<double>();
    v.features.vol = f.at("vol").get<uint64_t>();
    v.features.len = f.at("len").get<double>();
    v.features.lmw = f.at("lmw").get<double>();
    return v;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kMalformedLine, e.what());
  }
}

std::vector<Verdict> LoadVerdictLog(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoFailure, "cannot open verdict log " + path);
  std::vector<Verdict> out;
  std::string line;
  while (std::getline(in, line)) {
    if (Trim(line).empty()) continue;
    out.push_back(VerdictFromJson(line));
  }
  return out;
}

Detector::Detector(const IsolationForestModel& model, const WindowConfig& config,
                   const PublicSuffixList& suffixes, const Dictionary& dict)
    : model_(model),
      dict_(dict),
      driver_(config, suffixes, [this](const WindowStore& store) { RunCycle(store); }) {
  if (!model.feature_names.empty() &&
      !std::equal(model.feature_names.begin(), model.feature_names.end(), kFeatureNames.begin(),
                  kFeatureNames.end())) {
    throw Error(ErrorCode::kFeatureOrderMismatch, "model features do not match the extractor");
  }
}

void Detector::Feed(const DnsLogRecord& record) {
  driver_.Feed(record);
  ++records_fed_;
}

void Detector::Finish() { driver_.Finish(); }

void Detector::RunCycle(const WindowStore& store) {
  CycleReport report = RunDetectionCycle(store, model_, dict_, whitelist_, blocklist_);
  ++cycles_run_;
  verdict_count_ += report.verdicts.size();
  if (sink_) {
    for (const Verdict& v : report.verdicts) sink_(v);
  }
  if (cycle_sink_) cycle_sink_(report);
}

CycleReport RunDetectionCycle(const WindowStore& store, const IsolationForestModel& model,
                              const Dictionary& dict, const Whitelist& whitelist,
                              Blocklist& blocklist) {
  CycleReport report;
  report.t_now = store.t_now();
  std::vector<std::string> domains;
  for (std::string& d : store.CandidateDomains()) {
    if (blocklist.Contains(d)) {
      ++report.skipped_blocked;
    } else {
      domains.push_back(std::move(d));
    }
  }
  report.candidates = domains.size() + report.skipped_blocked;

  std::vector<std::optional<Verdict>> results(domains.size());
  std::vector<std::string> failures(domains.size());
  ParallelFor(domains.size(), [&](size_t i) {
    try {
      results[i] = Classify(model, ExtractFeatures(store.AssembleWindow(domains[i]), dict));
    } catch (const std::exception& e) {
      failures[i] = domains[i] + ": " + e.what();
    }
  });

  const int64_t cycle_end = CycleEndMillis(report.t_now, store.config().lambda_minutes);
  for (size_t i = 0; i < domains.size(); ++i) {
    if (!results[i]) {
      report.errors.push_back(std::move(failures[i]));
      continue;
    }
    Verdict& v = *results[i];
    v.whitelisted = whitelist.Contains(v.domain);
    if (v.anomalous && !v.whitelisted) {
      v.blocked = blocklist.Add({v.domain, cycle_end, v.t_now, v.score});
    }
    report.verdicts.push_back(std::move(v));
  }
  return report;
}

std::vector<uint64_t> FalsePositivesPerDay(const std::vector<Verdict>& verdicts,
                                           const LabelMap& labels, int lambda_minutes,
                                           int64_t first_day_ms, size_t min_days) {
  const int64_t first_day = FloorDiv(first_day_ms, kDayMillis);
  const int64_t bucket_ms = int64_t{lambda_minutes} * 60 * 1000;
  std::map<std::string, int64_t> first_flag;
  for (const Verdict& v : verdicts) {
    if (!v.anomalous || IsMalicious(labels.TagOrBenign(v.domain))) continue;
    const int64_t day = FloorDiv(v.t_now * bucket_ms, kDayMillis) - first_day;
    auto [it, inserted] = first_flag.emplace(v.domain, day);
    if (!inserted) it->second = std::min(it->second, day);
  }
  std::vector<uint64_t> series(min_days, 0);
  for (const auto& [domain, day] : first_flag) {
    if (day < 0) continue;
    if (static_cast<size_t>(day) >= series.size()) series.resize(day + 1, 0);
    ++series[day];
  }
  return series;
}

}  // namespace dnsexfil
