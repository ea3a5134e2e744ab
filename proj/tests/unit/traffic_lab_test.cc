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

#include <cmath>
#include <map>
#include <set>

#include "doctest.h"
#include "dnsexfil/error.h"
#include "dnsexfil/features.h"
#include "dnsexfil/public_suffix.h"
#include "dnsexfil/traffic_lab.h"

using namespace dnsexfil;

namespace {

constexpr int64_t kStart = 1509926400000;

const DomainCatalog& SmallCatalog() {
  static const DomainCatalog catalog =
      DomainCatalog::Build(DomainCatalog::kDefaultSeed, 2000, PublicSuffixList::Bundled());
  return catalog;
}

BenignConfig ShortBenign(uint64_t seed, double hours = 1.0) {
  BenignConfig c;
  c.seed = seed;
  c.start_ms = kStart;
  c.duration_s = hours * 3600.0;
  c.n_users = 200;
  return c;
}

bool Sorted(const std::vector<DnsLogRecord>& records) {
  for (size_t i = 1; i < records.size(); ++i) {
    if (records[i].ts_ms < records[i - 1].ts_ms) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("zipf sampler follows the rank law") {
  const ZipfSampler z(1000, 1.0);
  Rng rng(1);
  std::vector<uint64_t> counts(1001, 0);
  const int n = 400000;
  for (int i = 0; i < n; ++i) {
    const uint64_t k = z.Sample(rng);
    REQUIRE(k >= 1);
    REQUIRE(k <= 1000);
    ++counts[k];
  }
  double h = 0.0;
  for (int k = 1; k <= 1000; ++k) h += 1.0 / k;
  for (int k : {1, 2, 5, 10}) {
    const double expected = n / (k * h);
    CAPTURE(k);
    CHECK(std::abs(counts[k] - expected) < 5.0 * std::sqrt(expected));
  }
  CHECK_THROWS_AS(ZipfSampler(0, 1.0), Error);
  CHECK_THROWS_AS(ZipfSampler(10, 0.0), Error);
}

TEST_CASE("catalog is deterministic and registrable") {
  const PublicSuffixList& psl = PublicSuffixList::Bundled();
  const DomainCatalog a = DomainCatalog::Build(5, 500, psl);
  const DomainCatalog b = DomainCatalog::Build(5, 500, psl);
  REQUIRE(a.size() == 500);
  std::set<std::string> names;
  std::map<DomainKind, int> kinds;
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a.domains()[i].name == b.domains()[i].name);
    CHECK(Prim(a.domains()[i].name, psl).name == a.domains()[i].name);
    names.insert(a.domains()[i].name);
    ++kinds[a.domains()[i].kind];
  }
  CHECK(names.size() == 500);
  CHECK(kinds[DomainKind::kSite] > 0);
  CHECK(kinds[DomainKind::kCdn] > 0);
  CHECK(kinds[DomainKind::kService] > 0);
  CHECK(kinds[DomainKind::kDataExchange] >= 1);
  CHECK(a.Labels().Malicious().empty());
}

TEST_CASE("benign generation is seeded and time-ordered") {
  const LabeledCorpus a = GenBenign(ShortBenign(3), SmallCatalog());
  const LabeledCorpus b = GenBenign(ShortBenign(3), SmallCatalog());
  const LabeledCorpus c = GenBenign(ShortBenign(4), SmallCatalog());
  CHECK(a.records == b.records);
  CHECK(a.records != c.records);
  CHECK(Sorted(a.records));
  // 200 users at 0.0125 qps each for an hour, plus twins and retries.
  CHECK(a.records.size() > 9000);
  CHECK(a.records.size() < 20000);
  CHECK(a.records.front().ts_ms >= kStart);
  CHECK(a.records.back().ts_ms < kStart + 3600000);
  CHECK(a.labels.Malicious().empty());
}

TEST_CASE("subject profiles produce their rates and labels") {
  struct Case {
    SimulationProfile profile;
    double min_count;
    double max_count;
  };
  const std::vector<Case> cases = {
      {FrameworkPosProfile(kStart, 600.0), 3.0 * 600 * 0.9, 3.0 * 600 * 1.1},
      {DenisProfile(kStart, 600.0), 400 * 0.95, 400 * 1.05},
      {IodineProfile(kStart, 600.0), 20.0 * 600 * 0.95, 20.0 * 600 * 1.05},
      {Dns2tcpProfile(kStart), 205, 205},
  };
  for (const Case& c : cases) {
    CAPTURE(c.profile.domain);
    auto source = GenerateSubject(c.profile, 9);
    const LabeledCorpus corpus = Materialize(*source);
    CHECK(static_cast<double>(corpus.records.size()) >= c.min_count);
    CHECK(static_cast<double>(corpus.records.size()) <= c.max_count);
    CHECK(Sorted(corpus.records));
    CHECK(corpus.labels.TagOrBenign(c.profile.domain) == c.profile.tag);
    std::set<std::string> distinct;
    for (const DnsLogRecord& r : corpus.records) {
      // Iodine falls back to TXT for part of its traffic.
      const bool txt_fallback = c.profile.tag == SubjectTag::kIodine && r.rrtype == RrType::kTXT;
      CHECK((r.rrtype == c.profile.rrtype || txt_fallback));
      CHECK(Prim(r, PublicSuffixList::Bundled()).name == c.profile.domain);
      distinct.insert(r.qname);
    }
    // Every exfiltration query carries a fresh payload.
    CHECK(distinct.size() == corpus.records.size());
  }
  CHECK_THROWS_AS(DefaultProfile(SubjectTag::kBenign, 0), Error);
}

TEST_CASE("iodine payload entropy exceeds 3 bits") {
  auto source = GenerateSubject(IodineProfile(kStart, 60.0), 2);
  const LabeledCorpus corpus = Materialize(*source);
  REQUIRE_FALSE(corpus.records.empty());
  LdhHistogram hist;
  for (const auto& r : corpus.records) hist.Add(r.qname);
  CHECK(hist.Entropy() > 3.0);
}

TEST_CASE("injection merges in time order and labels the subject") {
  const LabeledCorpus benign = GenBenign(ShortBenign(5), SmallCatalog());
  const LabeledCorpus withpos =
      InjectFrameworkPos(benign, 1, FrameworkPosProfile(kStart + 600000, 600.0));
  CHECK(Sorted(withpos.records));
  CHECK(withpos.labels.TagOrBenign("frameworkpos.com.") == SubjectTag::kFrameworkPos);
  CHECK(withpos.records.size() > benign.records.size() + 1600);
  CHECK_THROWS_AS(InjectDenis(benign, 1, IodineProfile(kStart)), Error);
}

TEST_CASE("scenario without injection has no malicious labels") {
  ScenarioConfig config;
  config.benign = ShortBenign(6);
  config.inject_subjects = false;
  CHECK(ScenarioProfiles(config).empty());
  auto source = GenerateScenario(config, SmallCatalog());
  const LabeledCorpus corpus = Materialize(*source);
  CHECK(corpus.labels.Malicious().empty());

  config.inject_subjects = true;
  const auto profiles = ScenarioProfiles(config);
  REQUIRE(profiles.size() == 4);
  std::set<SubjectTag> tags;
  for (const auto& p : profiles) tags.insert(p.tag);
  CHECK(tags.size() == 4);
}

TEST_CASE("labels path sits next to the corpus") {
  CHECK(LabelsPathFor("out/corpus.csv.gz") == "out/corpus.labels.csv");
  CHECK(LabelsPathFor("day.jsonl") == "day.labels.csv");
  CHECK(LabelsPathFor("dir.v2/noext") == "dir.v2/noext.labels.csv");
}
