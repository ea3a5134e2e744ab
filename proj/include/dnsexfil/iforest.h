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

#ifndef DNSEXFIL_IFOREST_H_
#define DNSEXFIL_IFOREST_H_

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dnsexfil/features.h"

namespace dnsexfil {

inline constexpr double kEulerGamma = 0.5772156649;

// Average path length of an unsuccessful binary-search-tree lookup among n
// points: c(n) = 2 H(n-1) - 2 (n-1) / n with H(i) estimated as ln(i) + gamma.
// The same estimate is used for n = 2 (giving 2 gamma - 1); c(n) = 0 for
// n <= 1.
double ExpectedPathAdjustment(double n);

// Dense row-major sample matrix.
class FeatureMatrix {
 public:
  explicit FeatureMatrix(size_t cols) : cols_(cols) {}

  void AddRow(std::span<const double> row);
  void AddRow(const FeatureVector& v) { AddRow(v.Values()); }

  size_t rows() const { return cols_ == 0 ? 0 : data_.size() / cols_; }
  size_t cols() const { return cols_; }
  std::span<const double> Row(size_t i) const { return {data_.data() + i * cols_, cols_}; }
  double At(size_t row, size_t col) const { return data_[row * cols_ + col]; }

 private:
  size_t cols_;
  std::vector<double> data_;
};

struct IsolationTreeNode {
  // -1 marks a leaf.
  int32_t feature = -1;
  double split = 0.0;
  int32_t left = -1;
  int32_t right = -1;
  // Training points that reached this node.
  uint32_t size = 0;
};

// Flattened tree; node 0 is the root. Points with x[feature] < split go left.
struct IsolationTree {
  std::vector<IsolationTreeNode> nodes;

  // Depth of the leaf reached plus c(leaf size).
  double PathLength(std::span<const double> x) const;
  int Depth() const;
};

struct ForestConfig {
  int n_trees = 100;
  int psi = 256;
  double nu = 2e-5;
  uint64_t seed = 0;
};

struct IsolationForestModel {
  std::vector<IsolationTree> trees;
  int psi = 256;
  double threshold = 0.5;
  double nu = 2e-5;
  uint64_t seed = 0;
  std::vector<std::string> feature_names;
  // Set when every training sample was identical; all scores are then 0.5
  // and the threshold carries no information.
  bool degenerate = false;

  int n_trees() const { return static_cast<int>(trees.size()); }
  int height_limit() const;

  double MeanPathLength(std::span<const double> x) const;
  // 2^(-E[h(x)] / c(psi)); in (0, 1), higher is more anomalous.
  double Score(std::span<const double> x) const;
  double Score(const FeatureVector& v) const { return Score(v.Values()); }
  std::vector<double> ScoreAll(const FeatureMatrix& samples) const;
};

// Builds n_trees trees on random subsamples of size psi and calibrates the
// threshold on the same samples. Deterministic given the seed. Empty
// feature_names become x0, x1, ... Throws Error(kInsufficientSamples) when
// there are fewer than psi samples.
IsolationForestModel TrainForest(const FeatureMatrix& samples, const ForestConfig& config,
                                 std::vector<std::string> feature_names);

IsolationForestModel TrainForest(const std::vector<FeatureVector>& samples,
                                 const ForestConfig& config);

// The (1 - nu) quantile of `scores` with "higher" interpolation: the value
// at index ceil((1 - nu) (n - 1)) of the sorted scores. Throws
// Error(kQuantileOutOfRange) unless 0 < nu <= 0.5.
double UpperQuantile(std::vector<double> scores, double nu);

// Recomputes and stores the threshold from the training samples.
double CalibrateThreshold(IsolationForestModel& model, const FeatureMatrix& samples, double nu);

struct Verdict {
  std::string domain;
  int64_t t_now = 0;
  double score = 0.0;
  double threshold = 0.0;
  // score > threshold.
  bool anomalous = false;
  bool whitelisted = false;
  // This verdict added the domain to the blocklist.
  bool blocked = false;
  FeatureVector features;
};

Verdict Classify(const IsolationForestModel& model, const FeatureVector& v);

// Self-describing JSON document; see docs/formats.md.
std::string SaveModel(const IsolationForestModel& model);
// Throws Error(kCorruptModel) or Error(kVersionMismatch).
IsolationForestModel LoadModel(std::string_view bytes);

}  // namespace dnsexfil

#endif  // DNSEXFIL_IFOREST_H_
