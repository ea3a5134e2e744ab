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

#ifndef DNSEXFIL_COMMANDS_H_
#define DNSEXFIL_COMMANDS_H_

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "dnsexfil/baselines.h"
#include "dnsexfil/detector.h"
#include "dnsexfil/error.h"
#include "dnsexfil/run_config.h"
#include "dnsexfil/traffic_lab.h"

namespace dnsexfil {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitData = 2,
  kExitInternal = 3,
};

// kInvalidConfig is a usage error; everything else the library throws is a
// data error.
ExitCode ExitCodeFor(const Error& error);

// Output file names inside RunConfig::out_dir.
inline constexpr const char* kCorpusFile = "corpus.csv.gz";
inline constexpr const char* kVerdictFile = "verdicts.jsonl";
inline constexpr const char* kH16File = "h16.jsonl";
inline constexpr const char* kC16File = "c16.jsonl";

// Corpus path of a run: config.corpus, or kCorpusFile in out_dir.
std::string CorpusPath(const RunConfig& config);
// Joins out_dir and a file name.
std::string OutPath(const RunConfig& config, const std::string& name);

ScenarioConfig ScenarioFor(const RunConfig& config);

struct SimulateSummary {
  std::string corpus_path;
  std::string labels_path;
  CorpusSummary corpus;
};

// Writes the corpus and its label sidecar.
SimulateSummary CmdSimulate(const RunConfig& config, std::ostream& log);

struct TrainSummary {
  size_t samples = 0;
  double threshold = 0.0;
  // Training windows scoring above the threshold.
  size_t above_threshold = 0;
  uint64_t records = 0;
  // Labeled subject domains seen in the training corpus.
  std::vector<std::string> labeled_subjects;
};

// Collects the candidate windows of config.corpus, trains the forest and
// writes config.model. Throws Error(kInsufficientSamples) when the corpus
// covers fewer than n_s buckets or yields fewer than psi windows.
TrainSummary CmdTrain(const RunConfig& config, std::ostream& log);

struct DetectSummary {
  uint64_t records = 0;
  uint64_t cycles = 0;
  uint64_t verdicts = 0;
  uint64_t anomalous = 0;
  std::vector<BlocklistEntry> blocked;
  std::string verdict_path;
  std::string blocklist_path;
};

// Replays config.corpus ("-" reads standard input) through the detector and
// writes the verdict log and the blocklist.
DetectSummary CmdDetect(const RunConfig& config, std::ostream& log);

struct BaselinesSummary {
  H16State h16;
  size_t h16_batches = 0;
  size_t h16_flagged = 0;
  size_t c16_points = 0;
  size_t c16_flagged = 0;
  std::string h16_path;
  std::string c16_path;
};

// Fits H16 on the first qnames of config.baseline_corpus, then runs H16 and
// C16 over config.corpus.
BaselinesSummary CmdBaselines(const RunConfig& config, std::ostream& log);

struct ReportInputs {
  std::string verdicts;
  // Defaults to the sidecar of config.corpus.
  std::string labels;
  // Optional; a missing file leaves the method's column empty.
  std::string h16;
  std::string c16;
};

struct ReportSummary {
  std::vector<std::string> files;
  size_t subjects = 0;
  size_t detected = 0;
  std::vector<uint64_t> false_positives_per_day;
};

// Writes detection.csv, fp_per_day.csv, scores.csv, features.csv and
// features_hist.csv into out_dir.
ReportSummary CmdReport(const RunConfig& config, const ReportInputs& inputs, std::ostream& log);

}  // namespace dnsexfil

#endif  // DNSEXFIL_COMMANDS_H_
