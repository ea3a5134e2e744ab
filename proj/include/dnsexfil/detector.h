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

#ifndef DNSEXFIL_DETECTOR_H_
#define DNSEXFIL_DETECTOR_H_

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "dnsexfil/features.h"
#include "dnsexfil/iforest.h"
#include "dnsexfil/labels.h"
#include "dnsexfil/public_suffix.h"
#include "dnsexfil/window_store.h"

namespace dnsexfil {

// Analyst-maintained domains that may be flagged but are never blocked.
class Whitelist {
 public:
  // One domain per line, optionally followed by an annotation. '#' starts a
  // comment. Domains are normalized to lowercase with a trailing dot.
  static Whitelist Parse(std::string_view text);
  static Whitelist Load(const std::string& path);

  void Add(std::string_view domain, std::string note = {});
  bool Contains(const std::string& domain) const { return entries_.count(domain) > 0; }
  const std::map<std::string, std::string>& entries() const { return entries_; }
  size_t size() const { return entries_.size(); }

 private:
  std::map<std::string, std::string> entries_;
};

struct BlocklistEntry {
  std::string domain;
  // End of the cycle that blocked the domain, ms since the epoch.
  int64_t first_detected_ms = 0;
  int64_t t_now = 0;
  double score = 0.0;
};

// Append-only; entries keep insertion order.
class Blocklist {
 public:
  bool Contains(const std::string& domain) const { return index_.count(domain) > 0; }
  // Returns false (and changes nothing) if the domain is already present.
  bool Add(BlocklistEntry entry);
  const std::vector<BlocklistEntry>& entries() const { return entries_; }
  size_t size() const { return entries_.size(); }

 private:
  std::vector<BlocklistEntry> entries_;
  std::unordered_map<std::string, size_t> index_;
};

enum class BlocklistFormat { kPlain, kRpz };

// Throws Error(kInvalidConfig) for anything but "plain" or "rpz".
BlocklistFormat ParseBlocklistFormat(std::string_view name);

// Deterministic file contents; see docs/formats.md.
std::string EmitBlocklist(const Blocklist& blocklist, BlocklistFormat format);
// Throws Error(kIoFailure).
void WriteBlocklist(const std::string& path, const Blocklist& blocklist, BlocklistFormat format);
// Domains listed in either format, in file order.
std::vector<std::string> ParseBlocklist(std::string_view text);

std::string VerdictToJson(const Verdict& verdict);
// Throws Error(kMalformedLine).
Verdict VerdictFromJson(std::string_view line);
std::vector<Verdict> LoadVerdictLog(const std::string& path);

struct CycleReport {
  int64_t t_now = 0;
  size_t candidates = 0;
  size_t skipped_blocked = 0;
  std::vector<Verdict> verdicts;
  // Per-domain failures; the cycle continues past them.
  std::vector<std::string> errors;
};

// Runs the classification cycle over a window store: every lambda minutes the
// candidate domains are scored and anomalous, non-whitelisted ones are
// blocked.
class Detector {
 public:
  // The model and dictionary must outlive the detector. Throws
  // Error(kFeatureOrderMismatch) if the model was trained on other features.
  Detector(const IsolationForestModel& model, const WindowConfig& config,
           const PublicSuffixList& suffixes, const Dictionary& dict);

  Whitelist& whitelist() { return whitelist_; }
  const Blocklist& blocklist() const { return blocklist_; }
  const WindowStore& store() const { return driver_.store(); }

  // Called once per verdict, in cycle order and then domain order.
  void SetVerdictSink(std::function<void(const Verdict&)> sink) { sink_ = std::move(sink); }
  void SetCycleSink(std::function<void(const CycleReport&)> sink) {
    cycle_sink_ = std::move(sink);
  }

  // Ingests one record. Records from a later bucket first close the current
  // one and run its cycle.
  void Feed(const DnsLogRecord& record);
  // Runs the cycle of the last open bucket.
  void Finish();

  uint64_t records_fed() const { return records_fed_; }
  uint64_t cycles_run() const { return cycles_run_; }
  uint64_t verdict_count() const { return verdict_count_; }

 private:
  void RunCycle(const WindowStore& store);

  const IsolationForestModel& model_;
  const Dictionary& dict_;
  CycleDriver driver_;
  Whitelist whitelist_;
  Blocklist blocklist_;
  std::function<void(const Verdict&)> sink_;
  std::function<void(const CycleReport&)> cycle_sink_;
  uint64_t records_fed_ = 0;
  uint64_t cycles_run_ = 0;
  uint64_t verdict_count_ = 0;
};

// Classifies every candidate of the store's current window that is not yet
// blocked; anomalous, non-whitelisted domains are appended to `blocklist`.
CycleReport RunDetectionCycle(const WindowStore& store, const IsolationForestModel& model,
                              const Dictionary& dict, const Whitelist& whitelist,
                              Blocklist& blocklist);

// New falsely flagged domains per day. A flag is an anomalous verdict for a
// domain labeled benign (or unlabeled); each domain counts once, on the day
// of its first flag. Days are UTC days of the bucket start, numbered from
// `first_day_ms`'s day; the series has at least `min_days` entries.
std::vector<uint64_t> FalsePositivesPerDay(const std::vector<Verdict>& verdicts,
                                           const LabelMap& labels, int lambda_minutes,
                                           int64_t first_day_ms, size_t min_days = 0);

// End of bucket t in ms since the epoch.
inline int64_t CycleEndMillis(int64_t t, int lambda_minutes) {
  return (t + 1) * int64_t{lambda_minutes} * 60 * 1000;
}

}  // namespace dnsexfil

#endif  // DNSEXFIL_DETECTOR_H_
