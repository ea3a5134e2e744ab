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
#include <numeric>

#include "doctest.h"
#include "dnsexfil/baselines.h"
#include "dnsexfil/error.h"
#include "dnsexfil/features.h"
#include "dnsexfil/random.h"

using namespace dnsexfil;

namespace {

std::vector<std::string> Names(Rng& rng, size_t n, std::string_view alphabet, size_t len) {
  std::vector<std::string> out;
  for (size_t i = 0; i < n; ++i) {
    std::string s;
    for (size_t k = 0; k < len; ++k) s.push_back(alphabet[rng.UniformInt(alphabet.size())]);
    out.push_back(s + ".example.com.");
  }
  return out;
}

DnsLogRecord Rec(std::string qname, int64_t ts, size_t response_len = 4) {
  DnsLogRecord r;
  r.qname = std::move(qname);
  r.ts_ms = ts;
  if (response_len > 0) r.responses = {std::string(response_len, 'r')};
  return r;
}

}  // namespace

TEST_CASE("H16 fit uses the sample standard deviation") {
  const std::vector<std::string> names = {"aaaa.", "abab.", "abcd.", "abab."};
  const H16State s = H16Fit(names, 2, 4);
  const std::vector<double> h = {0.0, 1.0, 2.0, 1.0};
  CHECK(s.mu_x == doctest::Approx(1.0));
  CHECK(s.sigma_x == doctest::Approx(std::sqrt(2.0 / 3.0)));
  CHECK(s.fitted == 4);
  CHECK(s.batch_size == 2);
  CHECK(H16QnameEntropy("abab.") == 1.0);

  const std::vector<std::string> batch = {"abcd.", "abcd."};
  CHECK(H16MeanDiff(s, batch) == doctest::Approx(1.0));
  CHECK(H16Classify(s, batch));
  const std::vector<std::string> calm = {"abab.", "abab."};
  CHECK(H16MeanDiff(s, calm) == doctest::Approx(0.0));
  CHECK_FALSE(H16Classify(s, calm));
  CHECK(H16MeanDiff(s, {}) == 0.0);
}

TEST_CASE("H16 fit refuses a short or flat baseline") {
  Rng rng(1);
  const auto names = Names(rng, 1000, "abc", 8);
  try {
    H16Fit(names);
    FAIL("expected InsufficientBaseline");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kInsufficientBaseline);
  }
  const std::vector<std::string> flat(20, "abc.");
  CHECK_THROWS_AS(H16Fit(flat, 10, 10), Error);
}

TEST_CASE("H16 separates random labels from words") {
  Rng rng(2);
  const auto baseline = Names(rng, kH16MinBaseline, "wwwmailshopnewslogin", 6);
  const H16State s = H16Fit(baseline);
  const auto tunnel = Names(rng, 2000, "abcdefghijklmnopqrstuvwxyz0123456789", 60);
  const auto more = Names(rng, 2000, "wwwmailshopnewslogin", 6);
  CHECK(H16MeanDiff(s, tunnel) > 3.0 * s.sigma_x);
  CHECK(H16MeanDiff(s, more) < s.sigma_x);
}

TEST_CASE("H16 runner batches per primary domain") {
  H16State s;
  s.mu_x = 3.0;
  s.sigma_x = 0.5;
  s.batch_size = 10;
  H16Runner runner(s, PublicSuffixList::Bundled(), 5);
  for (int i = 0; i < 25; ++i) runner.Feed(Rec("abcdefgh" + std::to_string(i) + ".big.com.", i));
  for (int i = 0; i < 7; ++i) runner.Feed(Rec("aaaa.small.com.", i));
  for (int i = 0; i < 3; ++i) runner.Feed(Rec("x.tiny.com.", i));
  runner.Finish();
  const auto& batches = runner.batches();
  REQUIRE(batches.size() == 3);
  CHECK(batches[0].domain == "big.com.");
  CHECK(batches[0].index == 0);
  CHECK(batches[1].index == 1);
  CHECK(batches[1].first_ms == 10);
  CHECK(batches[1].last_ms == 19);
  // The tail of big.com. is not a full batch; small.com. is tested once.
  CHECK(batches[2].domain == "small.com.");
  CHECK(batches[2].size == 7);
  CHECK(batches[2].flagged);
  CHECK(batches[2].mean_diff == doctest::Approx(std::abs(3.0 - LdhEntropy("aaaa.small.com."))));
}

TEST_CASE("moments of known samples") {
  const std::vector<double> x = {1, 2, 3, 4};
  const auto m = Moments(x);
  CHECK(m[0] == doctest::Approx(2.5));
  CHECK(m[1] == doctest::Approx(1.25));
  CHECK(m[2] == doctest::Approx(0.0));
  CHECK(m[3] == doctest::Approx(1.64 - 3.0));
  const std::vector<double> skewed = {0, 0, 0, 10};
  CHECK(Moments(skewed)[2] > 1.0);
  const std::vector<double> constant = {7, 7, 7};
  CHECK(Moments(constant) == std::array<double, 4>{7, 0, 0, 0});
  CHECK(Moments({}) == std::array<double, 4>{0, 0, 0, 0});
}

TEST_CASE("binned mutual information") {
  Rng rng(3);
  const size_t n = 4096;
  std::vector<double> a(n), b(n), c(n);
  for (size_t i = 0; i < n; ++i) {
    a[i] = rng.Normal();
    b[i] = rng.Normal();
    c[i] = 2.0 * a[i] + 1.0;
  }
  // Independent inputs: the corrected estimate is close to 0.
  CHECK(BinnedMutualInformation(a, b, 16) < 0.02);
  // A monotone map fills the diagonal: log(16) minus the correction.
  const double expected = std::log(16.0) - (16.0 - 16.0 - 16.0 + 1.0) / (2.0 * n);
  CHECK(BinnedMutualInformation(a, c, 16) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(BinnedMutualInformation(a, c, 16) == BinnedMutualInformation(c, a, 16));
  CHECK(BinnedMutualInformation(std::vector<double>{1.0}, std::vector<double>{2.0}, 4) == 0.0);
  CHECK_THROWS_AS(BinnedMutualInformation(a, std::vector<double>(3), 16), Error);
  CHECK_THROWS_AS(BinnedMutualInformation(a, b, 1), Error);
}

TEST_CASE("principal components of a stretched cloud") {
  Rng rng(4);
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < 500; ++i) {
    const double t = rng.Normal();
    const double u = rng.Normal();
    // Column 2 is constant and must be ignored.
    rows.push_back({t + 0.01 * u, t - 0.01 * u, 5.0, u});
  }
  std::vector<double> pc1, pc2;
  PrincipalComponents2(rows, &pc1, &pc2);
  REQUIRE(pc1.size() == rows.size());
  // pc1 follows the shared direction of columns 0 and 1.
  double corr = 0.0, n1 = 0.0, n2 = 0.0;
  for (size_t i = 0; i < rows.size(); ++i) {
    corr += pc1[i] * rows[i][0];
    n1 += pc1[i] * pc1[i];
    n2 += rows[i][0] * rows[i][0];
  }
  CHECK(corr / std::sqrt(n1 * n2) > 0.99);
  // Components are uncorrelated.
  const double dot = std::inner_product(pc1.begin(), pc1.end(), pc2.begin(), 0.0);
  CHECK(std::abs(dot) / std::sqrt(n1 * std::inner_product(pc2.begin(), pc2.end(), pc2.begin(), 0.0)) <
        1e-9);
}

TEST_CASE("C16 detector warms up, caps its window and smooths") {
  C16Config config;
  config.step = 50;
  config.window_steps = 40;
  config.warmup_steps = 10;
  config.alpha = 0.5;
  C16Detector det(config);
  CHECK_THROWS_AS(det.SmoothedMi(), Error);
  Rng rng(5);
  std::optional<double> previous;
  for (int s = 0; s < 60; ++s) {
    std::vector<DnsLogRecord> step;
    for (int i = 0; i < 50; ++i) {
      step.push_back(Rec(std::string(5 + rng.UniformInt(30), 'a') + ".x.com.", s * 50 + i,
                         rng.UniformInt(40)));
    }
    const auto p = det.Step(step);
    if (s < 9) {
      CHECK_FALSE(p.has_value());
      continue;
    }
    REQUIRE(p.has_value());
    CHECK(p->step == static_cast<uint64_t>(s));
    CHECK(p->rows == std::min<size_t>(s + 1, 40));
    CHECK(p->mi >= 0.0);
    const double expect = previous ? 0.5 * *previous + 0.5 * p->mi : p->mi;
    CHECK(p->smoothed == doctest::Approx(expect));
    CHECK(p->flagged == (p->smoothed < config.threshold));
    previous = p->smoothed;
  }
  CHECK(det.rows() == 40);
  CHECK(det.SmoothedMi() == *previous);
  std::vector<DnsLogRecord> short_step(10, Rec("a.x.com.", 0));
  try {
    det.Step(short_step);
    FAIL("expected InsufficientWindow");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kInsufficientWindow);
  }
  C16Config bad;
  bad.alpha = 0.0;
  CHECK_THROWS_AS(C16Detector{bad}, Error);
}

TEST_CASE("C16 runner tags steps with subjects") {
  C16Config config;
  config.step = 20;
  config.window_steps = 10;
  config.warmup_steps = 3;
  LabelMap labels;
  labels.Set("evil.net.", SubjectTag::kIodine);
  C16Runner runner(config, labels, PublicSuffixList::Bundled());
  for (int i = 0; i < 20 * 8 + 5; ++i) {
    const bool evil = i >= 100 && i < 105;
    runner.Feed(Rec((evil ? "zz" + std::to_string(i) + ".evil.net." : "www.site.com."), i, i % 7));
  }
  runner.Finish();
  const auto& points = runner.points();
  REQUIRE(points.size() == 6);
  for (const C16Point& p : points) {
    const bool expect = p.step == 5;
    CHECK((p.subjects == std::vector<SubjectTag>{SubjectTag::kIodine}) == expect);
  }
}

TEST_CASE("baseline JSON lines round-trip") {
  H16Batch b{"tunnel.net.", 3, 2000, 10, 20, 5.6, 1.9, true};
  const H16Batch hb = H16BatchFromJson(H16BatchToJson(b));
  CHECK(hb.domain == b.domain);
  CHECK(hb.index == 3);
  CHECK(hb.mean_diff == b.mean_diff);
  CHECK(hb.flagged);

  C16Point p;
  p.step = 77;
  p.rows = 500;
  p.mi = 0.061;
  p.smoothed = 0.049;
  p.flagged = true;
  p.subjects = {SubjectTag::kIodine, SubjectTag::kDns2tcp};
  const C16Point cp = C16PointFromJson(C16PointToJson(p));
  CHECK(cp.step == 77);
  CHECK(cp.smoothed == p.smoothed);
  CHECK(cp.subjects == p.subjects);
  CHECK_THROWS_AS(C16PointFromJson("[1,2]"), Error);
  CHECK_THROWS_AS(H16BatchFromJson("{\"domain\": 1}"), Error);
}
