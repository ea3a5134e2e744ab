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

#ifndef DNSEXFIL_BASELINES_H_
#define DNSEXFIL_BASELINES_H_

#include <array>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dnsexfil/dns_record.h"
#include "dnsexfil/labels.h"
#include "dnsexfil/public_suffix.h"

namespace dnsexfil {

// ---------------------------------------------------------------------------
// H16: mean per-qname entropy of a batch compared with a benign baseline.

struct H16State {
  // Baseline mean and sample standard deviation of per-qname entropy, bits.
  double mu_x = 0.0;
  double sigma_x = 0.0;
  // Qnames the baseline was fitted on.
  uint64_t fitted = 0;
  // Size of the tested batch.
  size_t batch_size = 2000;
};

inline constexpr size_t kH16MinBaseline = 50000;

// Per-qname entropy under the same LDH convention as the features module.
double H16QnameEntropy(std::string_view qname);

// Throws Error(kInsufficientBaseline) for fewer than `min_baseline` qnames or
// a zero standard deviation.
H16State H16Fit(std::span<const std::string> qnames, size_t batch_size = 2000,
                size_t min_baseline = kH16MinBaseline);

// |mu_x - mean entropy of the batch|. An empty batch yields 0.
double H16MeanDiff(const H16State& state, std::span<const std::string> batch);

// MeanDiff > sigma_x.
bool H16Classify(const H16State& state, std::span<const std::string> batch);

struct H16Batch {
  std::string domain;
  // Per-domain batch counter, from 0.
  uint64_t index = 0;
  size_t size = 0;
  int64_t first_ms = 0;
  int64_t last_ms = 0;
  double mean_entropy = 0.0;
  double mean_diff = 0.0;
  bool flagged = false;
};

// Splits the query stream of every primary domain into consecutive batches
// of state.batch_size qnames. A domain whose whole stream is shorter than
// one batch is tested once on what it sent, if that is at least
// `min_partial` qnames.
class H16Runner {
 public:
  H16Runner(const H16State& state, const PublicSuffixList& suffixes, size_t min_partial = 100);

  void Feed(const DnsLogRecord& record);
  // Emits the short domains; call once at end of input.
  void Finish();

  const std::vector<H16Batch>& batches() const { return batches_; }

 private:
  struct Open {
    uint64_t index = 0;
    size_t size = 0;
    double sum = 0.0;
    int64_t first_ms = 0;
    int64_t last_ms = 0;
  };
  void Close(const std::string& domain, Open& open);

  H16State state_;
  const PublicSuffixList& suffixes_;
  size_t min_partial_;
  std::map<std::string, Open> open_;
  std::vector<H16Batch> batches_;
};

// ---------------------------------------------------------------------------
// C16: mutual information between the two principal components of per-step
// size statistics.

struct C16Config {
  // Queries per step (one feature row).
  size_t step = 10000;
  // Rows kept in the sliding window.
  size_t window_steps = 500;
  // Exponential smoothing weight of each new MI value.
  double alpha = 1e-3;
  double threshold = 0.05;
  // Equal-frequency bins per component.
  int bins = 16;
  // Rows needed before the first MI value.
  size_t warmup_steps = 32;
  bool use_responses = true;
};

// Mean, variance, skewness and excess kurtosis (population moments). Zero
// variance gives zero skewness and kurtosis.
std::array<double, 4> Moments(std::span<const double> x);

// Plug-in MI estimate in nats over `bins` x `bins` equal-frequency cells,
// minus the Miller-Madow bias term, floored at 0. Ties keep their input
// order when ranked.
double BinnedMutualInformation(std::span<const double> a, std::span<const double> b, int bins);

// Projects rows onto their first two principal components after
// standardizing each column over the rows. Columns without variance are
// ignored. Sign convention: the largest-magnitude loading is positive.
void PrincipalComponents2(const std::vector<std::vector<double>>& rows, std::vector<double>* pc1,
                          std::vector<double>* pc2);

struct C16Point {
  uint64_t step = 0;
  int64_t first_ms = 0;
  int64_t last_ms = 0;
  // Rows the MI was computed over.
  size_t rows = 0;
  double mi = 0.0;
  double smoothed = 0.0;
  bool flagged = false;
  bool responses = true;
  // Subjects with at least one query in this step.
  std::vector<SubjectTag> subjects;
};

class C16Detector {
 public:
  explicit C16Detector(const C16Config& config);

  const C16Config& config() const { return config_; }

  // Builds one feature row from exactly config().step records and updates
  // the MI. Returns std::nullopt while the window holds fewer than
  // warmup_steps rows. Throws Error(kInsufficientWindow) for a short step.
  std::optional<C16Point> Step(std::span<const DnsLogRecord> records);

  // Latest smoothed MI. Throws Error(kInsufficientWindow) before warm-up.
  double SmoothedMi() const;
  size_t rows() const { return rows_.size(); }
  uint64_t steps() const { return steps_; }

 private:
  std::vector<double> Row(std::span<const DnsLogRecord> records);

  C16Config config_;
  std::deque<std::vector<double>> rows_;
  std::optional<double> smoothed_;
  std::optional<size_t> last_length_;
  uint64_t steps_ = 0;
};

// Flag iff smoothed MI < threshold.
std::vector<bool> C16Classify(std::span<const double> smoothed_mi, double threshold = 0.05);

// Streams records into C16 steps and tags each step with the labeled
// subjects it contains.
class C16Runner {
 public:
  C16Runner(const C16Config& config, const LabelMap& labels, const PublicSuffixList& suffixes);

  void Feed(const DnsLogRecord& record);
  // A trailing partial step is dropped.
  void Finish() {}

  const std::vector<C16Point>& points() const { return points_; }

 private:
  C16Detector detector_;
  const LabelMap& labels_;
  const PublicSuffixList& suffixes_;
  std::vector<DnsLogRecord> pending_;
  std::vector<SubjectTag> pending_subjects_;
  std::vector<C16Point> points_;
};

std::string H16BatchToJson(const H16Batch& batch);
std::string C16PointToJson(const C16Point& point);
H16Batch H16BatchFromJson(std::string_view line);
C16Point C16PointFromJson(std::string_view line);

}  // namespace dnsexfil

#endif  // DNSEXFIL_BASELINES_H_
