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

#include "dnsexfil/iforest.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

#include "dnsexfil/error.h"
#include "dnsexfil/random.h"
#include "json.hpp"

namespace dnsexfil {
namespace {

constexpr int kModelVersion = 1;
constexpr std::string_view kModelFormat = "dnsexfil-iforest";

int HeightLimit(int psi) {
  return static_cast<int>(std::ceil(std::log2(static_cast<double>(std::max(psi, 2)))));
}

struct BuildTask {
  int32_t node;
  size_t begin;
  size_t end;
  int depth;
};

IsolationTree BuildTree(const FeatureMatrix& samples, std::vector<size_t> idx, int height_limit,
                        Rng& rng) {
  const size_t cols = samples.cols();
  IsolationTree tree;
  tree.nodes.push_back({});
  std::vector<BuildTask> stack = {{0, 0, idx.size(), 0}};
  std::vector<double> lo(cols);
  std::vector<double> hi(cols);
  std::vector<size_t> candidates;
  candidates.reserve(cols);
  while (!stack.empty()) {
    const BuildTask task = stack.back();
    stack.pop_back();
    const size_t n = task.end - task.begin;
    tree.nodes[task.node].size = static_cast<uint32_t>(n);
    if (task.depth >= height_limit || n <= 1) continue;

    std::fill(lo.begin(), lo.end(), std::numeric_limits<double>::infinity());
    std::fill(hi.begin(), hi.end(), -std::numeric_limits<double>::infinity());
    for (size_t i = task.begin; i < task.end; ++i) {
      const auto row = samples.Row(idx[i]);
      for (size_t f = 0; f < cols; ++f) {
        lo[f] = std::min(lo[f], row[f]);
        hi[f] = std::max(hi[f], row[f]);
      }
    }
    candidates.clear();
    for (size_t f = 0; f < cols; ++f) {
      if (lo[f] < hi[f]) candidates.push_back(f);
    }
    if (candidates.empty()) continue;

    const size_t feature = candidates[rng.UniformInt(candidates.size())];
    double split = lo[feature] + rng.UniformOpen() * (hi[feature] - lo[feature]);
    if (!(split > lo[feature] && split <= hi[feature])) {
      split = std::midpoint(lo[feature], hi[feature]);
      if (!(split > lo[feature])) split = hi[feature];
    }
    const auto mid = std::partition(idx.begin() + task.begin, idx.begin() + task.end,
                                    [&](size_t r) { return samples.At(r, feature) < split; });
    const size_t pivot = static_cast<size_t>(mid - idx.begin());

    const int32_t left = static_cast<int32_t>(tree.nodes.size());
    tree.nodes.push_back({});
    const int32_t right = static_cast<int32_t>(tree.nodes.size());
    tree.nodes.push_back({});
    IsolationTreeNode& node = tree.nodes[task.node];
    node.feature = static_cast<int32_t>(feature);
    node.split = split;
    node.left = left;
    node.right = right;
    stack.push_back({right, pivot, task.end, task.depth + 1});
    stack.push_back({left, task.begin, pivot, task.depth + 1});
  }
  return tree;
}

std::vector<size_t> Subsample(size_t n, size_t k, Rng& rng) {
  std::vector<size_t> all(n);
  std::iota(all.begin(), all.end(), size_t{0});
  for (size_t i = 0; i < k; ++i) {
    const size_t j = i + rng.UniformInt(n - i);
    std::swap(all[i], all[j]);
  }
  all.resize(k);
  return all;
}

bool AllRowsIdentical(const FeatureMatrix& samples) {
  for (size_t r = 1; r < samples.rows(); ++r) {
    const auto a = samples.Row(0);
    const auto b = samples.Row(r);
    if (!std::equal(a.begin(), a.end(), b.begin())) return false;
  }
  return true;
}

[[noreturn]] void Corrupt(const std::string& why) { throw Error(ErrorCode::kCorruptModel, why); }

}  // namespace

double ExpectedPathAdjustment(double n) {
  if (n <= 1.0) return 0.0;
  return 2.0 * (std::log(n - 1.0) + kEulerGamma) - 2.0 * (n - 1.0) / n;
}

void FeatureMatrix::AddRow(std::span<const double> row) {
  if (row.size() != cols_) {
    throw Error(ErrorCode::kInvalidConfig, "row width does not match the matrix");
  }
  data_.insert(data_.end(), row.begin(), row.end());
}

double IsolationTree::PathLength(std::span<const double> x) const {
  int32_t at = 0;
  int depth = 0;
  while (nodes[at].feature >= 0) {
    const IsolationTreeNode& node = nodes[at];
    at = x[node.feature] < node.split ? node.left : node.right;
    ++depth;
  }
  return depth + ExpectedPathAdjustment(nodes[at].size);
}

int IsolationTree::Depth() const {
  std::vector<int> depth(nodes.size(), 0);
  int max_depth = 0;
  for (size_t i = 0; i < nodes.size(); ++i) {
    max_depth = std::max(max_depth, depth[i]);
    if (nodes[i].feature >= 0) {
      depth[nodes[i].left] = depth[i] + 1;
      depth[nodes[i].right] = depth[i] + 1;
    }
  }
  return max_depth;
}

int IsolationForestModel::height_limit() const { return HeightLimit(psi); }

double IsolationForestModel::MeanPathLength(std::span<const double> x) const {
  double sum = 0.0;
  for (const IsolationTree& tree : trees) sum += tree.PathLength(x);
  return sum / static_cast<double>(trees.size());
}

double IsolationForestModel::Score(std::span<const double> x) const {
  return std::exp2(-MeanPathLength(x) / ExpectedPathAdjustment(psi));
}

std::vector<double> IsolationForestModel::ScoreAll(const FeatureMatrix& samples) const {
  std::vector<double> out(samples.rows());
  for (size_t i = 0; i < samples.rows(); ++i) out[i] = Score(samples.Row(i));
  return out;
}

IsolationForestModel TrainForest(const FeatureMatrix& samples, const ForestConfig& config,
                                 std::vector<std::string> feature_names) {
  if (config.n_trees <= 0) throw Error(ErrorCode::kInvalidConfig, "n_trees must be positive");
  if (config.psi < 2) throw Error(ErrorCode::kInvalidConfig, "psi must be at least 2");
  if (samples.rows() < static_cast<size_t>(config.psi)) {
    throw Error(ErrorCode::kInsufficientSamples,
                std::to_string(samples.rows()) + " samples, need at least psi=" +
                    std::to_string(config.psi));
  }
  if (!feature_names.empty() && feature_names.size() != samples.cols()) {
    throw Error(ErrorCode::kFeatureOrderMismatch, "feature names do not match sample width");
  }
  // The saved model records its width through the names.
  if (feature_names.empty()) {
    for (size_t c = 0; c < samples.cols(); ++c) feature_names.push_back("x" + std::to_string(c));
  }
  for (size_t r = 0; r < samples.rows(); ++r) {
    for (double v : samples.Row(r)) {
      if (!std::isfinite(v)) throw Error(ErrorCode::kInvalidConfig, "non-finite feature value");
    }
  }

  IsolationForestModel model;
  model.psi = config.psi;
  model.nu = config.nu;
  model.seed = config.seed;
  model.feature_names = std::move(feature_names);
  model.degenerate = AllRowsIdentical(samples);
  model.trees.resize(config.n_trees);

  // One generator per tree, derived from the seed, so the result does not
  // depend on how trees are spread over threads.
  const int limit = HeightLimit(config.psi);
  auto build = [&](size_t first, size_t last) {
    for (size_t t = first; t < last; ++t) {
      Rng rng(DeriveSeed(config.seed, t));
      auto idx = Subsample(samples.rows(), static_cast<size_t>(config.psi), rng);
      model.trees[t] = BuildTree(samples, std::move(idx), limit, rng);
    }
  };
  const size_t n_trees = model.trees.size();
  const size_t workers =
      std::clamp<size_t>(std::thread::hardware_concurrency(), 1, std::min<size_t>(n_trees, 8));
  if (workers <= 1) {
    build(0, n_trees);
  } else {
    std::vector<std::jthread> pool;
    const size_t chunk = (n_trees + workers - 1) / workers;
    for (size_t w = 0; w < workers; ++w) {
      const size_t first = w * chunk;
      const size_t last = std::min(n_trees, first + chunk);
      if (first < last) pool.emplace_back(build, first, last);
    }
  }
  CalibrateThreshold(model, samples, config.nu);
  return model;
}

IsolationForestModel TrainForest(const std::vector<FeatureVector>& samples,
                                 const ForestConfig& config) {
  FeatureMatrix matrix(kNumFeatures);
  for (const FeatureVector& v : samples) matrix.AddRow(v);
  return TrainForest(matrix, config,
                     std::vector<std::string>(kFeatureNames.begin(), kFeatureNames.end()));
}

double UpperQuantile(std::vector<double> scores, double nu) {
  if (!(nu > 0.0 && nu <= 0.5)) {
    throw Error(ErrorCode::kQuantileOutOfRange, "nu must lie in (0, 0.5]");
  }
  if (scores.empty()) throw Error(ErrorCode::kInsufficientSamples, "no scores to calibrate on");
  std::sort(scores.begin(), scores.end());
  const double position = (1.0 - nu) * static_cast<double>(scores.size() - 1);
  // Absorb representation error so an exact integer position is not rounded
  // up to the next index.
  size_t index = static_cast<size_t>(std::ceil(position - 1e-9));
  index = std::min(index, scores.size() - 1);
  return scores[index];
}

double CalibrateThreshold(IsolationForestModel& model, const FeatureMatrix& samples, double nu) {
  model.threshold = UpperQuantile(model.ScoreAll(samples), nu);
  model.nu = nu;
  return model.threshold;
}

Verdict Classify(const IsolationForestModel& model, const FeatureVector& v) {
  Verdict verdict;
  verdict.domain = v.domain;
  verdict.t_now = v.t_now;
  verdict.score = model.Score(v);
  verdict.threshold = model.threshold;
  verdict.anomalous = verdict.score > verdict.threshold;
  verdict.features = v;
  return verdict;
}

std::string SaveModel(const IsolationForestModel& model) {
  nlohmann::ordered_json doc;
  doc["format"] = kModelFormat;
  doc["version"] = kModelVersion;
  doc["n_trees"] = model.n_trees();
  doc["psi"] = model.psi;
  doc["height_limit"] = model.height_limit();
  doc["nu"] = model.nu;
  doc["threshold"] = model.threshold;
  doc["seed"] = model.seed;
  doc["degenerate"] = model.degenerate;
  doc["feature_names"] = model.feature_names;
  auto trees = nlohmann::ordered_json::array();
  for (const IsolationTree& tree : model.trees) {
    std::vector<int32_t> feature, left, right;
    std::vector<double> split;
    std::vector<uint32_t> size;
    for (const IsolationTreeNode& n : tree.nodes) {
      feature.push_back(n.feature);
      split.push_back(n.split);
      left.push_back(n.left);
      right.push_back(n.right);
      size.push_back(n.size);
    }
    nlohmann::ordered_json t;
    t["feature"] = feature;
    t["split"] = split;
    t["left"] = left;
    t["right"] = right;
    t["size"] = size;
    trees.push_back(std::move(t));
  }
  doc["trees"] = std::move(trees);
  return doc.dump();
}

IsolationForestModel LoadModel(std::string_view bytes) {
  const nlohmann::json doc = nlohmann::json::parse(bytes, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) Corrupt("not a JSON document");
  if (!doc.contains("format") || doc["format"] != kModelFormat) Corrupt("unexpected format tag");
  if (!doc.contains("version") || !doc["version"].is_number_integer()) Corrupt("missing version");
  if (doc["version"].get<int>() != kModelVersion) {
    throw Error(ErrorCode::kVersionMismatch,
                "model version " + doc["version"].dump() + ", expected " +
                    std::to_string(kModelVersion));
  }
  IsolationForestModel model;
  try {
    model.psi = doc.at("psi").get<int>();
    model.nu = doc.at("nu").get<double>();
    model.threshold = doc.at("threshold").get<double>();
    model.seed = doc.at("seed").get<uint64_t>();
    model.degenerate = doc.at("degenerate").get<bool>();
    model.feature_names = doc.at("feature_names").get<std::vector<std::string>>();
    const auto& trees = doc.at("trees");
    if (!trees.is_array() || trees.size() != doc.at("n_trees").get<size_t>()) {
      Corrupt("tree count mismatch");
    }
    const size_t width = model.feature_names.size();
    for (const auto& t : trees) {
      const auto feature = t.at("feature").get<std::vector<int32_t>>();
      const auto split = t.at("split").get<std::vector<double>>();
      const auto left = t.at("left").get<std::vector<int32_t>>();
      const auto right = t.at("right").get<std::vector<int32_t>>();
      const auto size = t.at("size").get<std::vector<uint32_t>>();
      const size_t n = feature.size();
      if (n == 0 || split.size() != n || left.size() != n || right.size() != n ||
          size.size() != n) {
        Corrupt("tree arrays have inconsistent lengths");
      }
      IsolationTree tree;
      tree.nodes.resize(n);
      for (size_t i = 0; i < n; ++i) {
        IsolationTreeNode& node = tree.nodes[i];
        node = {feature[i], split[i], left[i], right[i], size[i]};
        if (node.feature >= 0) {
          // Children always follow their parent, which also rules out cycles.
          if (static_cast<size_t>(node.feature) >= width || node.left <= static_cast<int32_t>(i) ||
              node.right <= static_cast<int32_t>(i) || static_cast<size_t>(node.left) >= n ||
              static_cast<size_t>(node.right) >= n) {
            Corrupt("invalid node " + std::to_string(i));
          }
        }
      }
      model.trees.push_back(std::move(tree));
    }
  } catch (const nlohmann::json::exception& e) {
    Corrupt(e.what());
  }
  if (model.trees.empty() || model.psi < 2) Corrupt("empty forest");
  return model;
}

}  // namespace dnsexfil
