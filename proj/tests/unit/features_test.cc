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

#include <set>

#include "doctest.h"
#include "dnsexfil/features.h"
#include "dnsexfil/public_suffix.h"
#include "dnsexfil/window_store.h"
#include "support/generators.h"

using namespace dnsexfil;

namespace {

DnsLogRecord Rec(std::string qname, RrType type = RrType::kA, int64_t ts = 0) {
  DnsLogRecord r;
  r.qname = std::move(qname);
  r.rrtype = type;
  r.ts_ms = ts;
  return r;
}

// One-bucket window over `records`.
struct OneWindow {
  explicit OneWindow(const std::vector<DnsLogRecord>& records) : store(WindowConfig{}) {
    store.Advance(0);
    for (const auto& r : records) store.Ingest(r, Prim(r, PublicSuffixList::Bundled()));
  }
  DomainWindow Get(const std::string& domain) const { return store.AssembleWindow(domain); }
  WindowStore store;
};

}  // namespace

TEST_CASE("LDH entropy conventions") {
  CHECK(LdhEntropy("aaaa") == 0.0);
  CHECK(LdhEntropy("abab") == 1.0);
  CHECK(LdhEntropy("") == 0.0);
  CHECK(LdhEntropy("...") == 0.0);
  // Dots are not symbols; case matters.
  CHECK(LdhEntropy("a.b") == 1.0);
  CHECK(LdhEntropy("aA") == 1.0);
  CHECK(LdhEntropy("abcd") == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(LdhEntropy("0123456789abcdef") == doctest::Approx(4.0).epsilon(1e-15));
}

TEST_CASE("dictionary longest word") {
  const Dictionary dict = Dictionary::FromWords({"the", "there", "mail", "go", "Box"});
  CHECK(dict.word_count() == 4);  // "go" is below the minimum length
  CHECK(dict.LongestWordIn("xxTHEREyy") == 5);
  CHECK(dict.LongestWordIn("mailbox") == 4);
  CHECK(dict.LongestWordIn("qqq") == 0);
  CHECK(dict.Contains("box"));
  CHECK_FALSE(dict.Contains("go"));
  CHECK(LmwRatioOfSubdomain("mail.x", dict) == doctest::Approx(4.0 / 5.0));
  CHECK(LmwRatioOfSubdomain("", dict) == 0.0);
  CHECK(Dictionary::Bundled().word_count() > 10000);
}

TEST_CASE("features of a hand-built window") {
  const std::vector<DnsLogRecord> records = {
      Rec("mail.example.com.", RrType::kA),  Rec("mail.example.com.", RrType::kAAAA),
      Rec("x9.example.com.", RrType::kTXT),  Rec("example.com.", RrType::kMX),
  };
  OneWindow w(records);
  const Dictionary dict = Dictionary::FromWords({"mail"});
  const FeatureVector v = ExtractFeatures(w.Get("example.com."), dict);
  CHECK(v.vol == 3);
  CHECK(v.uniq == doctest::Approx(0.75));
  CHECK(v.ni == doctest::Approx(0.5));
  CHECK(v.len == doctest::Approx((16 + 16 + 14 + 11) / 4.0));
  CHECK(v.lmw == doctest::Approx((1.0 + 1.0 + 0.0 + 0.0) / 4.0));
  CHECK(v.ent == doctest::Approx(testing::OracleEntropy(
                     {"mail.example.com.", "mail.example.com.", "x9.example.com.", "example.com."})));
  CHECK(CharEntropy(w.Get("example.com.")) == v.ent);
  CHECK(NonIpRatio(w.Get("example.com.")) == v.ni);
  CHECK(UniqueQueryRatio(w.Get("example.com.")) == v.uniq);
  CHECK(UniqueQueryVolume(w.Get("example.com.")) == v.vol);
  CHECK(QueryLengthAvg(w.Get("example.com.")) == v.len);
  CHECK(LmwRatio(w.Get("example.com."), dict) == v.lmw);
}

TEST_CASE("iodine-like windows exceed 3 bits") {
  Rng rng(5);
  std::vector<DnsLogRecord> records;
  for (int i = 0; i < 200; ++i) {
    std::string label;
    for (int k = 0; k < 60; ++k) label.push_back("abcdefghijklmnopqrstuvwxyz0123456789"[rng.UniformInt(36)]);
    records.push_back(Rec(label + ".t.tunnel.example.", RrType::kNULL));
  }
  OneWindow w(records);
  CHECK(ExtractFeatures(w.Get("tunnel.example."), Dictionary::Bundled()).ent > 3.0);
}

TEST_CASE("property: streaming features equal the brute-force oracle") {
  const PublicSuffixList& psl = PublicSuffixList::Bundled();
  const std::vector<std::string> word_list = {"mail", "shop", "data", "cloud", "the",
                                              "there", "abc", "xyz", "example", "cdn"};
  const Dictionary dict = Dictionary::FromWords(word_list);
  const std::set<std::string> words(word_list.begin(), word_list.end());
  int windows = 0;
  for (uint64_t seed = 1; windows < 200; ++seed) {
    Rng rng(seed);
    WindowConfig config;
    config.n_s = 1 + static_cast<int>(rng.UniformInt(5));
    config.min_subdomains = 1;
    const int buckets = 1 + static_cast<int>(rng.UniformInt(8));
    const auto records = testing::RandomStream(rng, 50 + rng.UniformInt(400), 0,
                                               config.BucketMillis(), buckets);
    size_t next = 0;
    CycleDriver driver(config, psl, [&](const WindowStore& store) {
      for (const std::string& d : store.Domains()) {
        std::vector<DnsLogRecord> raw;
        for (size_t i = 0; i < next; ++i) {
          const int64_t b = BucketIndex(records[i].ts_ms, config.lambda_minutes);
          if (b > store.t_now() - config.n_s && b <= store.t_now() &&
              Prim(records[i], psl).name == d) {
            raw.push_back(records[i]);
          }
        }
        const FeatureVector v = ExtractFeatures(store.AssembleWindow(d), dict);
        if (raw.empty()) continue;
        const auto o = testing::ComputeOracle(raw, d.substr(0, d.size() - 1), words, 3);
        CHECK(v.ni == o.ni);
        CHECK(v.uniq == o.uniq);
        CHECK(v.vol == o.vol);
        CHECK(v.len == o.len);
        CHECK(testing::RelErr(v.ent, o.ent) <= 1e-12);
        CHECK(testing::RelErr(v.lmw, o.lmw) <= 1e-12);
        ++windows;
      }
    });
    for (; next < records.size(); ) {
      driver.Feed(records[next]);
      ++next;
    }
    driver.Finish();
  }
}
