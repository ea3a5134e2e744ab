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

#include <map>

#include "doctest.h"
#include "dnsexfil/error.h"
#include "dnsexfil/public_suffix.h"
#include "dnsexfil/window_store.h"
#include "support/generators.h"

using namespace dnsexfil;

namespace {

DnsLogRecord Rec(std::string qname, int64_t ts_ms, RrType type = RrType::kA) {
  DnsLogRecord r;
  r.qname = std::move(qname);
  r.ts_ms = ts_ms;
  r.rrtype = type;
  return r;
}

constexpr int64_t kHour = 3600000;

}  // namespace

TEST_CASE("bucket index floors negative timestamps") {
  CHECK(BucketIndex(0, 60) == 0);
  CHECK(BucketIndex(kHour - 1, 60) == 0);
  CHECK(BucketIndex(kHour, 60) == 1);
  CHECK(BucketIndex(-1, 60) == -1);
  CHECK(BucketIndex(-kHour, 60) == -1);
  CHECK(BucketIndex(-kHour - 1, 60) == -2);
}

TEST_CASE("window config validation") {
  WindowConfig c;
  CHECK_NOTHROW(c.Validate());
  c.n_s = 0;
  CHECK_THROWS_AS(c.Validate(), Error);
  c = WindowConfig{};
  c.lambda_minutes = 0;
  CHECK_THROWS_AS(c.Validate(), Error);
  c = WindowConfig{};
  c.nu = 0.0;
  CHECK_THROWS_AS(c.Validate(), Error);
}

TEST_CASE("records outside the horizon are dropped as late") {
  const PublicSuffixList& psl = PublicSuffixList::Bundled();
  WindowConfig config;
  config.n_s = 3;
  WindowStore store(config);
  store.Advance(10);
  const auto r_ok = Rec("a.example.com.", 8 * kHour);
  CHECK(store.Ingest(r_ok, Prim(r_ok, psl)) == WindowStore::IngestResult::kAccepted);
  const auto r_late = Rec("b.example.com.", 7 * kHour);
  CHECK(store.Ingest(r_late, Prim(r_late, psl)) == WindowStore::IngestResult::kLate);
  CHECK(store.dropped_late() == 1);
  CHECK(store.ingested() == 1);
}

TEST_CASE("candidate filter counts distinct qnames over the window") {
  const PublicSuffixList& psl = PublicSuffixList::Bundled();
  WindowConfig config;
  config.n_s = 2;
  config.min_subdomains = 3;
  WindowStore store(config);
  store.Advance(0);
  for (const char* q : {"a.x.com.", "b.x.com.", "a.x.com.", "a.y.com.", "a.y.com.", "a.y.com."}) {
    const auto r = Rec(q, 10);
    store.Ingest(r, Prim(r, psl));
  }
  CHECK(store.CandidateDomains().empty());
  store.Advance(1);
  const auto r = Rec("c.x.com.", kHour + 5);
  store.Ingest(r, Prim(r, psl));
  CHECK(store.CandidateDomains() == std::vector<std::string>{"x.com."});
  // Bucket 0 leaves the window.
  store.Advance(2);
  CHECK(store.CandidateDomains().empty());
  CHECK_THROWS_AS(store.AssembleWindow("nope.com."), Error);
}

TEST_CASE("checkpoints restore the same windows") {
  const PublicSuffixList& psl = PublicSuffixList::Bundled();
  Rng rng(3);
  WindowConfig config;
  config.n_s = 4;
  WindowStore store(config);
  const auto records = testing::RandomStream(rng, 400, 0, kHour, 4);
  store.Advance(0);
  for (const auto& r : records) {
    if (BucketIndex(r.ts_ms, 60) > store.t_now()) store.Advance(BucketIndex(r.ts_ms, 60));
    store.Ingest(r, Prim(r, psl));
  }
  const WindowStore copy = WindowStore::LoadCheckpoint(store.SaveCheckpoint());
  CHECK(copy.t_now() == store.t_now());
  CHECK(copy.Domains() == store.Domains());
  CHECK(copy.SaveCheckpoint() == store.SaveCheckpoint());
  const Dictionary& dict = Dictionary::Bundled();
  for (const std::string& d : store.Domains()) {
    CHECK(ExtractFeatures(copy.AssembleWindow(d), dict) ==
          ExtractFeatures(store.AssembleWindow(d), dict));
  }
  CHECK_THROWS_AS(WindowStore::LoadCheckpoint("{\"version\": 999}"), Error);
}

TEST_CASE("property: each record is in min(n_s, remaining cycles) windows") {
  const PublicSuffixList& psl = PublicSuffixList::Bundled();
  for (uint64_t seed = 1; seed <= 25; ++seed) {
    Rng rng(seed);
    WindowConfig config;
    config.n_s = 1 + static_cast<int>(rng.UniformInt(8));
    config.lambda_minutes = 15;
    config.min_subdomains = 1;
    const int buckets = 2 + static_cast<int>(rng.UniformInt(20));
    const int64_t bucket_ms = config.BucketMillis();
    const int64_t start = static_cast<int64_t>(rng.UniformInt(1000)) * bucket_ms;

    // Every record gets a unique qname so its windows can be traced; one
    // record per bucket keeps every cycle populated.
    std::vector<DnsLogRecord> records;
    for (int b = 0; b < buckets; ++b) {
      const size_t n = 1 + rng.UniformInt(15);
      for (size_t i = 0; i < n; ++i) {
        const std::string_view p = testing::kPrimaries[rng.UniformInt(testing::kPrimaries.size())];
        const int64_t ts = start + b * bucket_ms + static_cast<int64_t>(rng.UniformInt(bucket_ms));
        records.push_back(Rec("r" + std::to_string(records.size()) + "." + std::string(p) + ".", ts));
      }
    }
    std::stable_sort(records.begin(), records.end(),
                     [](const auto& a, const auto& b) { return a.ts_ms < b.ts_ms; });

    std::map<std::string, int> seen;
    std::vector<int64_t> cycle_t;
    CycleDriver driver(config, psl, [&](const WindowStore& store) {
      cycle_t.push_back(store.t_now());
      for (const std::string& d : store.Domains()) {
        const DomainWindow w = store.AssembleWindow(d);
        uint64_t summed = 0;
        for (const WindowEntry& e : w.Entries()) {
          ++seen[std::string(e.qname)];
          summed += e.stats.count;
        }
        CHECK(summed == w.RecordCount());
        for (const Bucket* b : w.buckets) {
          CHECK(b->t <= store.t_now());
          CHECK(b->t > store.t_now() - config.n_s);
        }
      }
    });
    for (const auto& r : records) CHECK(driver.Feed(r) == WindowStore::IngestResult::kAccepted);
    driver.Finish();

    REQUIRE(cycle_t.size() == static_cast<size_t>(buckets));
    const int64_t last = cycle_t.back();
    for (const auto& r : records) {
      const int64_t b = BucketIndex(r.ts_ms, config.lambda_minutes);
      const int expected = static_cast<int>(std::min<int64_t>(config.n_s, last - b + 1));
      CHECK(seen[r.qname] == expected);
    }
  }
}

TEST_CASE("property: bucket record counts are conserved") {
  const PublicSuffixList& psl = PublicSuffixList::Bundled();
  for (uint64_t seed = 100; seed < 120; ++seed) {
    Rng rng(seed);
    WindowConfig config;
    config.n_s = 1 + static_cast<int>(rng.UniformInt(6));
    const auto records = testing::RandomStream(rng, 2000, 0, config.BucketMillis(), 12);
    std::map<int64_t, uint64_t> fed;
    for (const auto& r : records) ++fed[BucketIndex(r.ts_ms, config.lambda_minutes)];

    std::map<int64_t, uint64_t> stored;
    CycleDriver driver(config, psl, [&](const WindowStore& store) {
      // The newest bucket is complete when its cycle runs.
      uint64_t in_newest = 0;
      for (const std::string& d : store.Domains()) {
        const DomainWindow w = store.AssembleWindow(d);
        for (const Bucket* b : w.buckets) {
          if (b->t != store.t_now()) continue;
          uint64_t per_qname = 0;
          for (const auto& [q, s] : b->qnames) per_qname += s.count;
          CHECK(per_qname == b->records);
          in_newest += b->records;
        }
      }
      stored[store.t_now()] = in_newest;
    });
    for (const auto& r : records) driver.Feed(r);
    driver.Finish();
    for (const auto& [t, n] : fed) {
      CAPTURE(t);
      CHECK(stored[t] == n);
    }
    CHECK(driver.store().ingested() == records.size());
  }
}
