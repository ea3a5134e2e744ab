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

#ifndef DNSEXFIL_WINDOW_STORE_H_
#define DNSEXFIL_WINDOW_STORE_H_

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "dnsexfil/dns_record.h"
#include "dnsexfil/public_suffix.h"

namespace dnsexfil {

struct WindowConfig {
  // Collection and classification period, minutes.
  int lambda_minutes = 60;
  // Buckets per sliding window.
  int n_s = 6;
  // Acceptable false-positive fraction used for threshold calibration.
  double nu = 2e-5;
  // Distinct query names a window needs before its domain is classified.
  int min_subdomains = 10;

  // Throws Error(kInvalidConfig).
  void Validate() const;
  int64_t BucketMillis() const { return int64_t{lambda_minutes} * 60 * 1000; }
};

// floor(ts / lambda), also for negative timestamps.
int64_t BucketIndex(int64_t ts_ms, int lambda_minutes);

// Compact per-qname tally kept instead of raw log lines.
struct QnameStats {
  uint64_t count = 0;
  std::array<uint32_t, kNumRrTypes> rrtypes{};

  uint64_t IpCount() const {
    return uint64_t{rrtypes[static_cast<size_t>(RrType::kA)]} +
           rrtypes[static_cast<size_t>(RrType::kAAAA)];
  }
  void Add(RrType type, uint64_t n = 1) {
    count += n;
    rrtypes[static_cast<size_t>(type)] += static_cast<uint32_t>(n);
  }
  void Merge(const QnameStats& other) {
    count += other.count;
    for (size_t i = 0; i < kNumRrTypes; ++i) rrtypes[i] += other.rrtypes[i];
  }
};

// All records of one primary domain collected in one lambda period.
struct Bucket {
  std::string domain;
  int64_t t = 0;
  uint64_t records = 0;
  std::unordered_map<std::string, QnameStats> qnames;
};

// One distinct query name of a window with its tallies summed over buckets.
struct WindowEntry {
  std::string_view qname;
  QnameStats stats;
};

// Read-only view of the last n_s buckets of a domain. Points into the store;
// valid until the store is next modified.
struct DomainWindow {
  std::string domain;
  int64_t t_now = 0;
  std::vector<const Bucket*> buckets;  // ascending t

  uint64_t RecordCount() const;
  // Distinct query names sorted by name.
  std::vector<WindowEntry> Entries() const;
  size_t DistinctQnames() const;
};

class WindowStore {
 public:
  enum class IngestResult { kAccepted, kLate };

  explicit WindowStore(WindowConfig config);

  const WindowConfig& config() const { return config_; }

  // Appends the record to bucket (primary, floor(ts / lambda)). Records at or
  // before the retention horizon t_now - n_s are counted and dropped.
  IngestResult Ingest(const DnsLogRecord& record, const PrimaryDomain& primary);

  // Moves t_now forward, evicts buckets with t <= t_now - n_s and returns the
  // candidate domains of the new window.
  std::vector<std::string> Advance(int64_t to_bucket);

  // Throws Error(kUnknownDomain).
  DomainWindow AssembleWindow(std::string_view domain) const;

  // Domains whose current window holds at least min_subdomains distinct query
  // names, sorted.
  std::vector<std::string> CandidateDomains() const;

  bool started() const { return t_now_.has_value(); }
  int64_t t_now() const { return t_now_.value_or(0); }
  uint64_t ingested() const { return ingested_; }
  uint64_t dropped_late() const { return dropped_late_; }
  uint64_t stored_records() const;
  size_t domain_count() const { return domains_.size(); }
  std::vector<std::string> Domains() const;

  // Versioned JSON snapshot of the whole store; see docs/formats.md.
  std::string SaveCheckpoint() const;
  static WindowStore LoadCheckpoint(std::string_view text);

 private:
  bool InWindow(int64_t t) const {
    return t_now_ && t > *t_now_ - config_.n_s && t <= *t_now_;
  }
  size_t WindowDistinctCount(const std::map<int64_t, Bucket>& buckets) const;

  WindowConfig config_;
  std::optional<int64_t> t_now_;
  std::unordered_map<std::string, std::map<int64_t, Bucket>> domains_;
  uint64_t ingested_ = 0;
  uint64_t dropped_late_ = 0;
};

// Replays a time-ordered record stream through a WindowStore. Whenever a
// record from a later bucket arrives, the current bucket is closed and
// `on_cycle` runs with t_now still pointing at it; then time advances by one
// bucket. Records older than the retention horizon are dropped by the store.
class CycleDriver {
 public:
  using CycleFn = std::function<void(const WindowStore&)>;

  CycleDriver(const WindowConfig& config, const PublicSuffixList& suffixes, CycleFn on_cycle);

  WindowStore::IngestResult Feed(const DnsLogRecord& record);
  // Runs the cycle of the current bucket if it has not run yet.
  void Finish();

  const WindowStore& store() const { return store_; }
  uint64_t cycles() const { return cycles_; }

 private:
  void RunCycle();

  const PublicSuffixList& suffixes_;
  WindowStore store_;
  CycleFn on_cycle_;
  uint64_t cycles_ = 0;
  bool cycle_done_ = false;
};

}  // namespace dnsexfil

#endif  // DNSEXFIL_WINDOW_STORE_H_
