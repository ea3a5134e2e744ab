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

#include "dnsexfil/baselines.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include <Eigen/Dense>

#include "dnsexfil/error.h"
#include "dnsexfil/features.h"
#include "json.hpp"

namespace dnsexfil {
namespace {

size_t ResponseSize(const DnsLogRecord& r) {
  size_t n = 0;
  for (const std::string& s : r.responses) n += s.size();
  return n + (r.responses.empty() ? 0 : r.responses.size() - 1);
}

// Bin of every element under equal-frequency binning.
std::vector<int> RankBins(std::span<const double> x, int bins) {
  std::vector<size_t> order(x.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](size_t i, size_t j) { return x[i] < x[j]; });
  std::vector<int> out(x.size());
  for (size_t r = 0; r < order.size(); ++r) {
    out[order[r]] = static_cast<int>(r * static_cast<size_t>(bins) / x.size());
  }
  return out;
}

}  // namespace

double H16QnameEntropy(std::string_view qname) { return LdhEntropy(qname); }

H16State H16Fit(std::span<const std::string> qnames, size_t batch_size, size_t min_baseline) {
  if (qnames.size() < std::max<size_t>(min_baseline, 2)) {
    throw Error(ErrorCode::kInsufficientBaseline,
                "H16 baseline needs " + std::to_string(std::max<size_t>(min_baseline, 2)) +
                    " qnames, got " + std::to_string(qnames.size()));
  }
  // Welford.
  double mean = 0.0;
  double m2 = 0.0;
  uint64_t n = 0;
  for (const std::string& q : qnames) {
    const double h = H16QnameEntropy(q);
    ++n;
    const double delta = h - mean;
    mean += delta / static_cast<double>(n);
    m2 += delta * (h - mean);
  }
  H16State state;
  state.mu_x = mean;
  state.sigma_x = std::sqrt(m2 / static_cast<double>(n - 1));
  state.fitted = n;
  state.batch_size = batch_size;
  if (!(state.sigma_x > 0.0)) {
    throw Error(ErrorCode::kInsufficientBaseline, "baseline entropies have no spread");
  }
  return state;
}

double H16MeanDiff(const H16State& state, std::span<const std::string> batch) {
  if (batch.empty()) return 0.0;
  double sum = 0.0;
  for (const std::string& q : batch) sum += H16QnameEntropy(q);
  return std::abs(state.mu_x - sum / static_cast<double>(batch.size()));
}

bool H16Classify(const H16State& state, std::span<const std::string> batch) {
  return H16MeanDiff(state, batch) > state.sigma_x;
}

H16Runner::H16Runner(const H16State& state, const PublicSuffixList& suffixes, size_t min_partial)
    : state_(state), suffixes_(suffixes), min_partial_(min_partial) {
  if (state_.batch_size == 0) throw Error(ErrorCode::kInvalidConfig, "H16 batch size is 0");
}

void H16Runner::Feed(const DnsLogRecord& record) {
  const std::string domain = Prim(record, suffixes_).name;
  Open& open = open_[domain];
  if (open.size == 0) open.first_ms = record.ts_ms;
  open.last_ms = record.ts_ms;
  open.sum += H16QnameEntropy(record.qname);
  if (++open.size == state_.batch_size) Close(domain, open);
}

void H16Runner::Close(const std::string& domain, Open& open) {
  H16Batch b;
  b.domain = domain;
  b.index = open.index;
  b.size = open.size;
  b.first_ms = open.first_ms;
  b.last_ms = open.last_ms;
  b.mean_entropy = open.sum / static_cast<double>(open.size);
  b.mean_diff = std::abs(state_.mu_x - b.mean_entropy);
  b.flagged = b.mean_diff > state_.sigma_x;
  batches_.push_back(std::move(b));
  open = Open{open.index + 1};
}

void H16Runner::Finish() {
  for (auto& [domain, open] : open_) {
    if (open.index == 0 && open.size >= min_partial_) Close(domain, open);
  }
  open_.clear();
}

std::array<double, 4> Moments(std::span<const double> x) {
  if (x.empty()) return {0.0, 0.0, 0.0, 0.0};
  const double n = static_cast<double>(x.size());
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double m2 = 0.0;
  double m3 = 0.0;
  double m4 = 0.0;
  for (double v : x) {
    const double d = v - mean;
    const double d2 = d * d;
    m2 += d2;
    m3 += d2 * d;
    m4 += d2 * d2;
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;
  // Relative cut so rounding noise on constant input does not look like
  // spread.
  if (m2 <= 1e-24 * std::max(1.0, mean * mean)) return {mean, 0.0, 0.0, 0.0};
  return {mean, m2, m3 / std::pow(m2, 1.5), m4 / (m2 * m2) - 3.0};
}

double BinnedMutualInformation(std::span<const double> a, std::span<const double> b, int bins) {
  if (a.size() != b.size()) throw Error(ErrorCode::kInvalidConfig, "MI inputs differ in length");
  if (bins < 2) throw Error(ErrorCode::kInvalidConfig, "MI needs at least 2 bins");
  const size_t n = a.size();
  if (n < 2) return 0.0;
  const std::vector<int> ba = RankBins(a, bins);
  const std::vector<int> bb = RankBins(b, bins);
  std::vector<double> joint(static_cast<size_t>(bins) * bins, 0.0);
  std::vector<double> pa(bins, 0.0);
  std::vector<double> pb(bins, 0.0);
  for (size_t i = 0; i < n; ++i) {
    joint[static_cast<size_t>(ba[i]) * bins + bb[i]] += 1.0;
    pa[ba[i]] += 1.0;
    pb[bb[i]] += 1.0;
  }
  const double dn = static_cast<double>(n);
  double mi = 0.0;
  int cells = 0;
  for (int i = 0; i < bins; ++i) {
    for (int j = 0; j < bins; ++j) {
      const double c = joint[static_cast<size_t>(i) * bins + j];
      if (c == 0.0) continue;
      ++cells;
      mi += c / dn * std::log(c * dn / (pa[i] * pb[j]));
    }
  }
  const int used_a = static_cast<int>(std::count_if(pa.begin(), pa.end(), [](double c) { return c > 0; }));
  const int used_b = static_cast<int>(std::count_if(pb.begin(), pb.end(), [](double c) { return c > 0; }));
  mi -= static_cast<double>(cells - used_a - used_b + 1) / (2.0 * dn);
  return std::max(0.0, mi);
}

void PrincipalComponents2(const std::vector<std::vector<double>>& rows, std::vector<double>* pc1,
                          std::vector<double>* pc2) {
  pc1->assign(rows.size(), 0.0);
  pc2->assign(rows.size(), 0.0);
  if (rows.size() < 2) return;
  const size_t cols = rows.front().size();
  const double n = static_cast<double>(rows.size());
  std::vector<size_t> live;
  std::vector<double> mean(cols, 0.0);
  std::vector<double> sd(cols, 0.0);
  for (size_t c = 0; c < cols; ++c) {
    for (const auto& r : rows) mean[c] += r[c];
    mean[c] /= n;
    for (const auto& r : rows) sd[c] += (r[c] - mean[c]) * (r[c] - mean[c]);
    sd[c] = std::sqrt(sd[c] / n);
    if (sd[c] > 1e-12 * std::max(1.0, std::abs(mean[c]))) live.push_back(c);
  }
  if (live.empty()) return;
  Eigen::MatrixXd z(rows.size(), live.size());
  for (size_t i = 0; i < rows.size(); ++i) {
    for (size_t k = 0; k < live.size(); ++k) {
      const size_t c = live[k];
      z(i, k) = (rows[i][c] - mean[c]) / sd[c];
    }
  }
  const Eigen::MatrixXd cov = (z.transpose() * z) / n;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  const Eigen::Index m = cov.rows();
  // Eigenvalues come in ascending order.
  for (int which = 0; which < 2 && which < m; ++which) {
    Eigen::VectorXd v = eig.eigenvectors().col(m - 1 - which);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0) v = -v;
    const Eigen::VectorXd proj = z * v;
    std::vector<double>& out = which == 0 ? *pc1 : *pc2;
    for (size_t i = 0; i < rows.size(); ++i) out[i] = proj(static_cast<Eigen::Index>(i));
  }
}

C16Detector::C16Detector(const C16Config& config) : config_(config) {
  if (config_.step < 2) throw Error(ErrorCode::kInvalidConfig, "C16 step must be >= 2");
  if (config_.window_steps < 3) throw Error(ErrorCode::kInvalidConfig, "C16 window too short");
  if (!(config_.alpha > 0.0 && config_.alpha <= 1.0)) {
    throw Error(ErrorCode::kInvalidConfig, "C16 alpha must be in (0, 1]");
  }
  if (config_.bins < 2) throw Error(ErrorCode::kInvalidConfig, "C16 needs at least 2 bins");
  config_.warmup_steps = std::clamp<size_t>(config_.warmup_steps, 2, config_.window_steps);
}

std::vector<double> C16Detector::Row(std::span<const DnsLogRecord> records) {
  std::vector<double> lengths;
  std::vector<double> diffs;
  std::vector<double> responses;
  lengths.reserve(records.size());
  diffs.reserve(records.size());
  for (const DnsLogRecord& r : records) {
    const size_t len = r.QnameLength();
    lengths.push_back(static_cast<double>(len));
    if (last_length_) diffs.push_back(static_cast<double>(len) - static_cast<double>(*last_length_));
    last_length_ = len;
    if (config_.use_responses) responses.push_back(static_cast<double>(ResponseSize(r)));
  }
  std::vector<double> row;
  for (double v : Moments(lengths)) row.push_back(v);
  for (double v : Moments(diffs)) row.push_back(v);
  if (config_.use_responses) {
    for (double v : Moments(responses)) row.push_back(v);
  }
  return row;
}

std::optional<C16Point> C16Detector::Step(std::span<const DnsLogRecord> records) {
  if (records.size() < config_.step) {
    throw Error(ErrorCode::kInsufficientWindow,
                "C16 step needs " + std::to_string(config_.step) + " records, got " +
                    std::to_string(records.size()));
  }
  records = records.first(config_.step);
  rows_.push_back(Row(records));
  if (rows_.size() > config_.window_steps) rows_.pop_front();
  const uint64_t index = steps_++;
  if (rows_.size() < config_.warmup_steps) return std::nullopt;

  const std::vector<std::vector<double>> window(rows_.begin(), rows_.end());
  std::vector<double> pc1;
  std::vector<double> pc2;
  PrincipalComponents2(window, &pc1, &pc2);
  C16Point p;
  p.step = index;
  p.first_ms = records.front().ts_ms;
  p.last_ms = records.back().ts_ms;
  p.rows = window.size();
  p.mi = BinnedMutualInformation(pc1, pc2, config_.bins);
  smoothed_ = smoothed_ ? (1.0 - config_.alpha) * *smoothed_ + config_.alpha * p.mi : p.mi;
  p.smoothed = *smoothed_;
  p.flagged = p.smoothed < config_.threshold;
  p.responses = config_.use_responses;
  return p;
}

double C16Detector::SmoothedMi() const {
  if (!smoothed_) throw Error(ErrorCode::kInsufficientWindow, "C16 window is still warming up");
  return *smoothed_;
}

std::vector<bool> C16Classify(std::span<const double> smoothed_mi, double threshold) {
  std::vector<bool> out;
  out.reserve(smoothed_mi.size());
  for (double v : smoothed_mi) out.push_back(v < threshold);
  return out;
}

C16Runner::C16Runner(const C16Config& config, const LabelMap& labels,
                     const PublicSuffixList& suffixes)
    : detector_(config), labels_(labels), suffixes_(suffixes) {
  pending_.reserve(config.step);
}

void C16Runner::Feed(const DnsLogRecord& record) {
  pending_.push_back(record);
  const SubjectTag tag = labels_.TagOrBenign(Prim(record, suffixes_).name);
  if (IsMalicious(tag) &&
      std::find(pending_subjects_.begin(), pending_subjects_.end(), tag) ==
          pending_subjects_.end()) {
    pending_subjects_.push_back(tag);
  }
  if (pending_.size() < detector_.config().step) return;
  if (auto p = detector_.Step(pending_)) {
    std::sort(pending_subjects_.begin(), pending_subjects_.end());
    p->subjects = pending_subjects_;
    points_.push_back(std::move(*p));
  }
  pending_.clear();
  pending_subjects_.clear();
}

std::string H16BatchToJson(const H16Batch& b) {
  nlohmann::ordered_json doc;
  doc["method"] = "h16";
  doc["domain"] = b.domain;
  doc["batch"] = b.index;
  doc["size"] = b.size;
  doc["first_ms"] = b.first_ms;
  doc["last_ms"] = b.last_ms;
  doc["mean_entropy"] = b.mean_entropy;
  doc["mean_diff"] = b.mean_diff;
  doc["flagged"] = b.flagged;
  return doc.dump();
}

std::string C16PointToJson(const C16Point& p) {
  nlohmann::ordered_json doc;
  doc["method"] = "c16";
  doc["step"] = p.step;
  doc["first_ms"] = p.first_ms;
  doc["last_ms"] = p.last_ms;
  doc["rows"] = p.rows;
  doc["mi"] = p.mi;
  doc["smoothed"] = p.smoothed;
  doc["flagged"] = p.flagged;
  doc["responses"] = p.responses;
  nlohmann::ordered_json subjects = nlohmann::ordered_json::array();
  for (SubjectTag t : p.subjects) subjects.push_back(std::string(SubjectTagName(t)));
  doc["subjects"] = std::move(subjects);
  return doc.dump();
}

namespace {

nlohmann::json ParseObject(std::string_view line) {
  nlohmann::json doc = nlohmann::json::parse(line, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    throw Error(ErrorCode::kMalformedLine, "baseline line is not a JSON object");
  }
  return doc;
}

}  // namespace

H16Batch H16BatchFromJson(std::string_view line) {
  const nlohmann::json doc = ParseObject(line);
  try {
    H16Batch b;
    b.domain = doc.at("domain").get<std::string>();
    b.index = doc.at("batch").get<uint64_t>();
    b.size = doc.at("size").get<size_t>();
    b.first_ms = doc.at("first_ms").get<int64_t>();
    b.last_ms = doc.at("last_ms").get<int64_t>();
    b.mean_entropy = doc.at("mean_entropy").get<double>();
    b.mean_diff = doc.at("mean_diff").get<double>();
    b.flagged = doc.at("flagged").get<bool>();
    return b;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kMalformedLine, e.what());
  }
}

C16Point C16PointFromJson(std::string_view line) {
  const nlohmann::json doc = ParseObject(line);
  try {
    C16Point p;
    p.step = doc.at("step").get<uint64_t>();
    p.first_ms = doc.at("first_ms").get<int64_t>();
    p.last_ms = doc.at("last_ms").get<int64_t>();
    p.rows = doc.at("rows").get<size_t>();
    p.mi = doc.at("mi").get<double>();
    p.smoothed = doc.at("smoothed").get<double>();
    p.flagged = doc.at("flagged").get<bool>();
    p.responses = doc.value("responses", true);
    for (const auto& s : doc.at("subjects")) p.subjects.push_back(ParseSubjectTag(s.get<std::string>()));
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kMalformedLine, e.what());
  }
}

}  // namespace dnsexfil
