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

#include <filesystem>

#include "doctest.h"
#include "dnsexfil/detector.h"
#include "dnsexfil/error.h"
#include "dnsexfil/labels.h"
#include "dnsexfil/public_suffix.h"
#include "support/generators.h"

using namespace dnsexfil;

namespace {

constexpr int64_t kHour = 3600000;

DnsLogRecord Rec(std::string qname, int64_t ts, RrType type = RrType::kA) {
  DnsLogRecord r;
  r.qname = std::move(qname);
  r.ts_ms = ts;
  r.rrtype = type;
  r.responses = {"192.0.2.1"};
  return r;
}

// Benign-looking traffic: 40 domains, each with a small fixed vocabulary of
// dictionary-ish hosts, over `hours` hours.
std::vector<DnsLogRecord> BenignHours(uint64_t seed, int hours, int64_t start = 0) {
  Rng rng(seed);
  static const std::vector<std::string> kHosts = {"www", "mail", "shop", "cdn", "api", "img",
                                                  "static", "login", "news", "video", "app",
                                                  "store", "blog", "docs", "help"};
  std::vector<DnsLogRecord> out;
  for (int h = 0; h < hours; ++h) {
    for (int i = 0; i < 3000; ++i) {
      const int d = static_cast<int>(rng.UniformInt(40));
      const std::string host = kHosts[rng.UniformInt(kHosts.size())];
      const int64_t ts = start + h * kHour + static_cast<int64_t>(rng.UniformInt(kHour));
      out.push_back(Rec(host + ".site" + std::to_string(d) + ".com.", ts,
                        rng.Bernoulli(0.8) ? RrType::kA : RrType::kAAAA));
    }
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const auto& a, const auto& b) { return a.ts_ms < b.ts_ms; });
  return out;
}

IsolationForestModel TrainOn(const std::vector<DnsLogRecord>& records, double nu = 0.01) {
  const PublicSuffixList& psl = PublicSuffixList::Bundled();
  std::vector<FeatureVector> samples;
  WindowConfig config;
  config.min_subdomains = 5;
  CycleDriver driver(config, psl, [&](const WindowStore& store) {
    for (const auto& d : store.CandidateDomains()) {
      samples.push_back(ExtractFeatures(store.AssembleWindow(d), Dictionary::Bundled()));
    }
  });
  for (const auto& r : records) driver.Feed(r);
  driver.Finish();
  ForestConfig fc;
  fc.nu = nu;
  fc.seed = 5;
  return TrainForest(samples, fc);
}

}  // namespace

TEST_CASE("whitelist parsing normalizes names") {
  const Whitelist w = Whitelist::Parse(
      "# analysts\nAV-Vendor.com  signature lookups\n\nrbl.example.org.\n");
  CHECK(w.size() == 2);
  CHECK(w.Contains("av-vendor.com."));
  CHECK(w.entries().at("av-vendor.com.") == "signature lookups");
  CHECK(w.Contains("rbl.example.org."));
}

TEST_CASE("blocklist is append-only and emits both formats") {
  Blocklist b;
  CHECK(b.Add({"evil.com.", 3600000, 0, 0.8}));
  CHECK_FALSE(b.Add({"evil.com.", 7200000, 1, 0.9}));
  CHECK(b.Add({"bad.org.", 7200000, 1, 0.7}));
  CHECK(b.size() == 2);
  CHECK(b.entries()[0].score == 0.8);

  const std::string plain = EmitBlocklist(b, BlocklistFormat::kPlain);
  CHECK(plain.find("evil.com\n") != std::string::npos);
  const std::string rpz = EmitBlocklist(b, BlocklistFormat::kRpz);
  CHECK(rpz.find("*.bad.org CNAME .") != std::string::npos);
  const std::vector<std::string> expect = {"evil.com.", "bad.org."};
  CHECK(ParseBlocklist(plain) == expect);
  CHECK(ParseBlocklist(rpz) == expect);
  CHECK(ParseBlocklistFormat("rpz") == BlocklistFormat::kRpz);
  CHECK_THROWS_AS(ParseBlocklistFormat("hosts"), Error);
}

TEST_CASE("verdicts round-trip through JSON") {
  Verdict v;
  v.domain = "x.example.";
  v.t_now = 421234;
  v.score = 0.71234567890123;
  v.threshold = 0.653;
  v.anomalous = true;
  v.blocked = true;
  v.features.domain = v.domain;
  v.features.ent = 4.125;
  v.features.vol = 77;
  v.features.t_now = v.t_now;
  const Verdict back = VerdictFromJson(VerdictToJson(v));
  CHECK(back.domain == v.domain);
  CHECK(back.score == v.score);
  CHECK(back.anomalous);
  CHECK(back.blocked);
  CHECK_FALSE(back.whitelisted);
  CHECK(back.features == v.features);
  CHECK_THROWS_AS(VerdictFromJson("{}"), Error);
}

TEST_CASE("false positives count new benign domains per day") {
  LabelMap labels;
  labels.Set("evil.com.", SubjectTag::kIodine);
  auto verdict = [](std::string d, int64_t t, bool anomalous) {
    Verdict v;
    v.domain = std::move(d);
    v.t_now = t;
    v.anomalous = anomalous;
    return v;
  };
  // Day 0 starts at bucket 24.
  const std::vector<Verdict> vs = {
      verdict("a.com.", 24, true),  verdict("a.com.", 30, true), verdict("b.com.", 26, false),
      verdict("b.com.", 50, true),  verdict("c.com.", 51, true), verdict("evil.com.", 25, true),
      verdict("d.com.", 23, true),  verdict("a.com.", 60, true),
  };
  const auto series = FalsePositivesPerDay(vs, labels, 60, 24 * kHour, 4);
  CHECK(series == std::vector<uint64_t>{1, 2, 0, 0});
}

TEST_CASE("detector blocks a tunnel and spares whitelisted domains") {
  const IsolationForestModel model = TrainOn(BenignHours(1, 8));
  CHECK(model.threshold > 0.0);

  WindowConfig config;
  config.min_subdomains = 5;
  Detector detector(model, config, PublicSuffixList::Bundled(), Dictionary::Bundled());
  detector.whitelist().Add("allowed-tunnel.net");
  std::vector<Verdict> verdicts;
  detector.SetVerdictSink([&](const Verdict& v) { verdicts.push_back(v); });

  auto records = BenignHours(2, 3, 8 * kHour);
  Rng rng(3);
  for (const char* tunnel : {"tunnel.net.", "allowed-tunnel.net."}) {
    for (int i = 0; i < 600; ++i) {
      std::string label;
      for (int k = 0; k < 50; ++k) label.push_back("abcdefghijklmnopqrstuvwxyz0123456789"[rng.UniformInt(36)]);
      records.push_back(Rec(label + "." + tunnel, 8 * kHour + i * 1000, RrType::kNULL));
    }
  }
  std::stable_sort(records.begin(), records.end(),
                   [](const auto& a, const auto& b) { return a.ts_ms < b.ts_ms; });
  for (const auto& r : records) detector.Feed(r);
  detector.Finish();

  CHECK(detector.cycles_run() == 3);
  CHECK(detector.blocklist().Contains("tunnel.net."));
  CHECK_FALSE(detector.blocklist().Contains("allowed-tunnel.net."));
  bool whitelisted_flagged = false;
  for (const Verdict& v : verdicts) {
    if (v.domain == "allowed-tunnel.net.") whitelisted_flagged |= v.anomalous && v.whitelisted;
  }
  CHECK(whitelisted_flagged);
  // Blocked domains are not scored again.
  int tunnel_verdicts = 0;
  for (const Verdict& v : verdicts) tunnel_verdicts += v.domain == "tunnel.net.";
  CHECK(tunnel_verdicts == 1);
  CHECK(detector.blocklist().entries()[0].first_detected_ms == 9 * kHour);
}

TEST_CASE("detector rejects models trained on other features") {
  Rng rng(1);
  FeatureMatrix m(6);
  for (int i = 0; i < 300; ++i) {
    m.AddRow(std::vector<double>{rng.Normal(), rng.Normal(), rng.Normal(), rng.Normal(),
                                 rng.Normal(), rng.Normal()});
  }
  const IsolationForestModel model =
      TrainForest(m, ForestConfig{}, {"a", "b", "c", "d", "e", "f"});
  try {
    Detector d(model, WindowConfig{}, PublicSuffixList::Bundled(), Dictionary::Bundled());
    FAIL("expected FeatureOrderMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kFeatureOrderMismatch);
  }
}

TEST_CASE("detection is deterministic") {
  const IsolationForestModel model = TrainOn(BenignHours(4, 8));
  const auto records = BenignHours(5, 4, 8 * kHour);
  auto run = [&] {
    WindowConfig config;
    config.min_subdomains = 5;
    Detector d(model, config, PublicSuffixList::Bundled(), Dictionary::Bundled());
    std::string log;
    d.SetVerdictSink([&](const Verdict& v) { log += VerdictToJson(v) + "\n"; });
    for (const auto& r : records) d.Feed(r);
    d.Finish();
    return log;
  };
  const std::string a = run();
  CHECK_FALSE(a.empty());
  CHECK(a == run());
}
