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

#ifndef DNSEXFIL_RUN_CONFIG_H_
#define DNSEXFIL_RUN_CONFIG_H_

#include <cstdint>
#include <string>
#include <string_view>

#include "dnsexfil/iforest.h"
#include "dnsexfil/window_store.h"

namespace dnsexfil {

// Everything a pipeline run depends on. Files use one "key = value" pair per
// line; see docs/formats.md for the key list.
struct RunConfig {
  int lambda_minutes = 60;
  int n_s = 6;
  double nu = 2e-5;
  int min_subdomains = 10;
  int n_trees = 100;
  int psi = 256;
  uint64_t seed = 1;

  std::string corpus;
  // Benign corpus the H16 baseline is fitted on.
  std::string baseline_corpus;
  std::string model;
  std::string whitelist;
  std::string blocklist;
  std::string wordlist;
  std::string suffix_list;
  std::string out_dir = ".";
  std::string blocklist_format = "plain";

  // Benign simulation.
  uint32_t users = 2000;
  double duration_hours = 24.0;
  int64_t start_ms = 1509926400000;  // 2017-11-06T00:00:00Z
  size_t catalog_size = 10000;
  bool inject = true;

  // H16: batch size of the tested qname sample.
  size_t h16_batch = 2000;
  // C16: queries per step, window length in steps and smoothing weight.
  size_t c16_step = 10000;
  size_t c16_window_steps = 500;
  double c16_alpha = 1e-3;
  double c16_threshold = 0.05;

  WindowConfig Window() const;
  ForestConfig Forest() const;
  // Throws Error(kInvalidConfig).
  void Validate() const;

  // Sets one field from its textual form. Throws Error(kInvalidConfig) for
  // unknown keys and unparsable values.
  void Set(std::string_view key, std::string_view value);
  // Every key, one per line, in a fixed order. Doubles are written with
  // round-trip precision.
  std::string Serialize() const;
  // Starts from the defaults. Blank lines and '#' comments are ignored.
  static RunConfig Parse(std::string_view text);
  static RunConfig Load(const std::string& path);
  void Save(const std::string& path) const;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

}  // namespace dnsexfil

#endif  // DNSEXFIL_RUN_CONFIG_H_
