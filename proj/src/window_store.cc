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

#include "dnsexfil/window_store.h"

#include <algorithm>
#include <unordered_set>

#include "dnsexfil/error.h"
#include "json.hpp"

namespace dnsexfil {
namespace {

constexpr int kCheckpointVersion = 1;
constexpr std::string_view kCheckpointFormat = "dnsexfil-window-store";

}  // namespace

void WindowConfig::Validate() const {
  if (lambda_minutes <= 0) throw Error(ErrorCode::kInvalidConfig, "lambda must be positive");
  if (n_s <= 0) throw Error(ErrorCode::kInvalidConfig, "n_s must be positive");
  if (!(nu > 0.0 && nu < 1.0)) throw Error(ErrorCode::kInvalidConfig, "nu must lie in (0, 1)");
  if (min_subdomains <= 0) {
    throw Error(ErrorCode::kInvalidConfig, "min_subdomains must be positive");
  }
}

int64_t BucketIndex(int64_t ts_ms, int lambda_minutes) {
  const int64_t width = int64_t{lambda_minutes} * 60 * 1000;
  int64_t q = ts_ms / width;
  if (ts_ms % width != 0 && ts_ms < 0) --q;
  return q;
}

uint64_t DomainWindow::RecordCount() const {
  uint64_t total = 0;
  for (const Bucket* b : buckets) total += b->records;
  return total;
}

std::vector<WindowEntry> DomainWindow::Entries() const {
  std::vector<WindowEntry> entries;
  if (buckets.size() == 1) {
    entries.reserve(buckets.front()->qnames.size());
    for (const auto& [qname, stats] : buckets.front()->qnames) {
      entries.push_back({qname, stats});
    }
  } else {
    std::unordered_map<std::string_view, QnameStats> merged;
    for (const Bucket* b : buckets) {
      for (const auto& [qname, stats] : b->qnames) merged[qname].Merge(stats);
    }
    entries.reserve(merged.size());
    for (const auto& [qname, stats] : merged) entries.push_back({qname, stats});
  }
  std::sort(entries.begin(), entries.end(),
            [](const WindowEntry& a, const WindowEntry& b) { return a.qname < b.qname; });
  return entries;
}

size_t DomainWindow::DistinctQnames() const {
  if (buckets.size() == 1) return buckets.front()->qnames.size();
  std::unordered_set<std::string_view> seen;
  for (const Bucket* b : buckets) {
    for (const auto& entry : b->qnames) seen.insert(entry.first);
  }
  return seen.size();
}

WindowStore::WindowStore(WindowConfig config) : config_(config) { config_.Validate(); }

WindowStore::IngestResult WindowStore::Ingest(const DnsLogRecord& record,
                                              const PrimaryDomain& primary) {
  const int64_t t = BucketIndex(record.ts_ms, config_.lambda_minutes);
  if (!t_now_) t_now_ = t;
  if (t <= *t_now_ - config_.n_s) {
    ++dropped_late_;
    return IngestResult::kLate;
  }
  auto& buckets = domains_[primary.name];
  auto [it, inserted] = buckets.try_emplace(t);
  Bucket& bucket = it->second;
  if (inserted) {
    bucket.domain = primary.name;
    bucket.t = t;
  }
  bucket.qnames[record.qname].Add(record.rrtype);
  ++bucket.records;
  ++ingested_;
  return IngestResult::kAccepted;
}

std::vector<std::string> WindowStore::Advance(int64_t to_bucket) {
  if (t_now_ && to_bucket < *t_now_) {
    throw Error(ErrorCode::kInvalidConfig, "cannot advance the store backwards");
  }
  t_now_ = to_bucket;
  const int64_t horizon = to_bucket - config_.n_s;
  for (auto it = domains_.begin(); it != domains_.end();) {
    auto& buckets = it->second;
    buckets.erase(buckets.begin(), buckets.upper_bound(horizon));
    if (buckets.empty()) {
      it = domains_.erase(it);
    } else {
      ++it;
    }
  }
  return CandidateDomains();
}

DomainWindow WindowStore::AssembleWindow(std::string_view domain) const {
  const auto it = domains_.find(std::string(domain));
  if (it == domains_.end()) {
    throw Error(ErrorCode::kUnknownDomain, std::string(domain));
  }
  DomainWindow window;
  window.domain = it->first;
  window.t_now = t_now();
  for (const auto& [t, bucket] : it->second) {
    if (InWindow(t)) window.buckets.push_back(&bucket);
  }
  return window;
}

size_t WindowStore::WindowDistinctCount(const std::map<int64_t, Bucket>& buckets) const {
  size_t upper = 0;
  const Bucket* only = nullptr;
  size_t in_window = 0;
  for (const auto& [t, bucket] : buckets) {
    if (!InWindow(t)) continue;
    upper += bucket.qnames.size();
    only = &bucket;
    ++in_window;
  }
  if (in_window <= 1) return only ? only->qnames.size() : 0;
  if (upper < static_cast<size_t>(config_.min_subdomains)) return upper;
  std::unordered_set<std::string_view> seen;
  for (const auto& [t, bucket] : buckets) {
    if (!InWindow(t)) continue;
    for (const auto& entry : bucket.qnames) {
      seen.insert(entry.first);
      if (seen.size() >= static_cast<size_t>(config_.min_subdomains)) return seen.size();
    }
  }
  return seen.size();
}

std::vector<std::string> WindowStore::CandidateDomains() const {
  std::vector<std::string> out;
  for (const auto& [domain, buckets] : domains_) {
    if (WindowDistinctCount(buckets) >= static_cast<size_t>(config_.min_subdomains)) {
      out.push_back(domain);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

uint64_t WindowStore::stored_records() const {
  uint64_t total = 0;
  for (const auto& [domain, buckets] : domains_) {
    for (const auto& [t, bucket] : buckets) total += bucket.records;
  }
  return total;
}

std::vector<std::string> WindowStore::Domains() const {
  std::vector<std::string> out;
  out.reserve(domains_.size());
  for (const auto& entry : domains_) out.push_back(entry.first);
  std::sort(out.begin(), out.end());
  return out;
}

std::string WindowStore::SaveCheckpoint() const {
  nlohmann::ordered_json doc;
  doc["format"] = kCheckpointFormat;
  doc["version"] = kCheckpointVersion;
  doc["config"] = {{"lambda_minutes", config_.lambda_minutes},
                   {"n_s", config_.n_s},
                   {"nu", config_.nu},
                   {"min_subdomains", config_.min_subdomains}};
  doc["t_now"] = t_now_ ? nlohmann::ordered_json(*t_now_) : nlohmann::ordered_json(nullptr);
  doc["ingested"] = ingested_;
  doc["dropped_late"] = dropped_late_;
  auto buckets = nlohmann::ordered_json::array();
  for (const std::string& domain : Domains()) {
    for (const auto& [t, bucket] : domains_.at(domain)) {
      std::vector<std::string_view> names;
      names.reserve(bucket.qnames.size());
      for (const auto& entry : bucket.qnames) names.push_back(entry.first);
      std::sort(names.begin(), names.end());
      auto qnames = nlohmann::ordered_json::array();
      for (std::string_view name : names) {
        const QnameStats& stats = bucket.qnames.at(std::string(name));
        qnames.push_back({name, stats.count, stats.rrtypes});
      }
      buckets.push_back({{"domain", domain}, {"t", t}, {"records", bucket.records},
                         {"qnames", std::move(qnames)}});
    }
  }
  doc["buckets"] = std::move(buckets);
  return doc.dump();
}

WindowStore WindowStore::LoadCheckpoint(std::string_view text) {
  const nlohmann::json doc = nlohmann::json::parse(text, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    throw Error(ErrorCode::kCorruptCheckpoint, "not a JSON document");
  }
  if (doc.value("format", "") != kCheckpointFormat) {
    throw Error(ErrorCode::kCorruptCheckpoint, "unexpected format tag");
  }
  if (doc.value("version", -1) != kCheckpointVersion) {
    throw Error(ErrorCode::kVersionMismatch, "unsupported checkpoint version");
  }
  try {
    WindowConfig config;
    const auto& c = doc.at("config");
    config.lambda_minutes = c.at("lambda_minutes").get<int>();
    config.n_s = c.at("n_s").get<int>();
    config.nu = c.at("nu").get<double>();
    config.min_subdomains = c.at("min_subdomains").get<int>();
    WindowStore store(config);
    if (!doc.at("t_now").is_null()) store.t_now_ = doc.at("t_now").get<int64_t>();
    store.ingested_ = doc.at("ingested").get<uint64_t>();
    store.dropped_late_ = doc.at("dropped_late").get<uint64_t>();
    for (const auto& b : doc.at("buckets")) {
      const std::string domain = b.at("domain").get<std::string>();
      const int64_t t = b.at("t").get<int64_t>();
      Bucket& bucket = store.domains_[domain][t];
      bucket.domain = domain;
      bucket.t = t;
      bucket.records = b.at("records").get<uint64_t>();
      for (const auto& q : b.at("qnames")) {
        QnameStats stats;
        stats.count = q.at(1).get<uint64_t>();
        stats.rrtypes = q.at(2).get<std::array<uint32_t, kNumRrTypes>>();
        bucket.qnames.emplace(q.at(0).get<std::string>(), stats);
      }
    }
    return store;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kCorruptCheckpoint, e.what());
  }
}

CycleDriver::CycleDriver(const WindowConfig& config, const PublicSuffixList& suffixes,
                         CycleFn on_cycle)
    : suffixes_(suffixes), store_(config), on_cycle_(std::move(on_cycle)) {}

WindowStore::IngestResult CycleDriver::Feed(const DnsLogRecord& record) {
  const PrimaryDomain primary = Prim(record, suffixes_);
  const int64_t bucket = BucketIndex(record.ts_ms, store_.config().lambda_minutes);
  if (!store_.started()) {
    store_.Advance(bucket);
  }
  while (store_.t_now() < bucket) {
    if (!cycle_done_) RunCycle();
    if (store_.domain_count() == 0) {
      // Nothing left to evict or classify; skip the empty cycles.
      store_.Advance(bucket);
    } else {
      store_.Advance(store_.t_now() + 1);
    }
    cycle_done_ = false;
  }
  return store_.Ingest(record, primary);
}

void CycleDriver::Finish() {
  if (store_.started() && !cycle_done_) RunCycle();
}

void CycleDriver::RunCycle() {
  cycle_done_ = true;
  ++cycles_;
  if (on_cycle_) on_cycle_(store_);
}

}  // namespace dnsexfil
