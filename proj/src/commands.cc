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

#include "dnsexfil/commands.h"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>

#include "dnsexfil/baselines.h"
#include "dnsexfil/features.h"
#include "dnsexfil/iforest.h"
#include "dnsexfil/log_io.h"
#include "dnsexfil/public_suffix.h"
#include "dnsexfil/window_store.h"

namespace dnsexfil {
namespace {

constexpr int64_t kDayMillis = 86400000;

const PublicSuffixList& Suffixes(const RunConfig& config,
                                 std::optional<PublicSuffixList>& storage) {
  if (config.suffix_list.empty()) return PublicSuffixList::Bundled();
  storage = PublicSuffixList::FromFile(config.suffix_list);
  return *storage;
}

const Dictionary& Words(const RunConfig& config, std::optional<Dictionary>& storage) {
  if (config.wordlist.empty()) return Dictionary::Bundled();
  storage = Dictionary::FromFile(config.wordlist);
  return *storage;
}

void RequirePath(const std::string& path, const char* what) {
  if (path.empty()) throw Error(ErrorCode::kInvalidConfig, std::string("no ") + what + " given");
}

std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoFailure, "cannot open " + path);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void WriteFile(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  out.close();
  if (!out) throw Error(ErrorCode::kIoFailure, "cannot write " + path);
}

void EnsureOutDir(const RunConfig& config) {
  std::error_code ec;
  std::filesystem::create_directories(config.out_dir, ec);
  if (ec) throw Error(ErrorCode::kIoFailure, "cannot create " + config.out_dir);
}

std::optional<LabelMap> LoadLabelsIfPresent(const std::string& path) {
  if (path.empty() || !std::filesystem::exists(path)) return std::nullopt;
  return LabelMap::Load(path);
}

std::string Num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

std::string CsvField(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

double Quantile(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return 0.0;
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const size_t lo = static_cast<size_t>(std::floor(pos));
  const size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

template <typename T>
std::vector<T> LoadJsonLines(const std::string& path, T (*parse)(std::string_view)) {
  std::vector<T> out;
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoFailure, "cannot open " + path);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(parse(line));
  }
  return out;
}

}  // namespace

ExitCode ExitCodeFor(const Error& error) {
  return error.code() == ErrorCode::kInvalidConfig ? kExitUsage : kExitData;
}

std::string OutPath(const RunConfig& config, const std::string& name) {
  return (std::filesystem::path(config.out_dir) / name).string();
}

std::string CorpusPath(const RunConfig& config) {
  return config.corpus.empty() ? OutPath(config, kCorpusFile) : config.corpus;
}

ScenarioConfig ScenarioFor(const RunConfig& config) {
  ScenarioConfig s;
  s.benign.seed = config.seed;
  s.benign.start_ms = config.start_ms;
  s.benign.duration_s = config.duration_hours * 3600.0;
  s.benign.n_users = config.users;
  s.catalog_size = config.catalog_size;
  s.inject_subjects = config.inject;
  return s;
}

SimulateSummary CmdSimulate(const RunConfig& config, std::ostream& log) {
  config.Validate();
  std::optional<PublicSuffixList> psl_storage;
  const PublicSuffixList& suffixes = Suffixes(config, psl_storage);
  const ScenarioConfig scenario = ScenarioFor(config);
  const DomainCatalog catalog =
      DomainCatalog::Build(scenario.catalog_seed, scenario.catalog_size, suffixes);
  auto source = GenerateScenario(scenario, catalog);

  SimulateSummary summary;
  summary.corpus_path = CorpusPath(config);
  if (config.corpus.empty()) EnsureOutDir(config);
  summary.labels_path = LabelsPathFor(summary.corpus_path);
  summary.corpus = WriteCorpus(*source, summary.corpus_path);

  const auto malicious = summary.corpus.labels.Malicious();
  log << "corpus      " << summary.corpus_path << "\n"
      << "labels      " << summary.labels_path << "\n"
      << "records     " << summary.corpus.records << "\n"
      << "nxdomain    " << summary.corpus.nxdomain << "\n"
      << "span_hours  " << Num((summary.corpus.last_ms - summary.corpus.first_ms) / 3.6e6) << "\n"
      << "subjects    " << malicious.size() << "\n";
  for (const auto& [domain, tag] : malicious) {
    log << "  " << SubjectTagName(tag) << " " << domain << "\n";
  }
  return summary;
}

TrainSummary CmdTrain(const RunConfig& config, std::ostream& log) {
  config.Validate();
  RequirePath(config.corpus, "training corpus");
  RequirePath(config.model, "model path");
  std::optional<PublicSuffixList> psl_storage;
  std::optional<Dictionary> dict_storage;
  const PublicSuffixList& suffixes = Suffixes(config, psl_storage);
  const Dictionary& dict = Words(config, dict_storage);
  const WindowConfig window = config.Window();

  const std::optional<LabelMap> labels = LoadLabelsIfPresent(LabelsPathFor(config.corpus));
  std::set<std::string> subjects_seen;

  FeatureMatrix samples(kNumFeatures);
  CycleDriver driver(window, suffixes, [&](const WindowStore& store) {
    for (const std::string& domain : store.CandidateDomains()) {
      samples.AddRow(ExtractFeatures(store.AssembleWindow(domain), dict));
    }
  });

  TrainSummary summary;
  LogReader reader(config.corpus);
  std::optional<int64_t> first_bucket;
  int64_t last_bucket = 0;
  while (auto record = reader.Next()) {
    const int64_t bucket = BucketIndex(record->ts_ms, window.lambda_minutes);
    if (!first_bucket) first_bucket = bucket;
    last_bucket = std::max(last_bucket, bucket);
    if (labels) {
      const std::string domain = Prim(*record, suffixes).name;
      if (IsMalicious(labels->TagOrBenign(domain))) subjects_seen.insert(domain);
    }
    driver.Feed(*record);
    ++summary.records;
  }
  driver.Finish();

  const int64_t buckets = first_bucket ? last_bucket - *first_bucket + 1 : 0;
  if (buckets < window.n_s) {
    throw Error(ErrorCode::kInsufficientSamples,
                "training corpus covers " + std::to_string(buckets) + " buckets, need " +
                    std::to_string(window.n_s));
  }
  summary.labeled_subjects.assign(subjects_seen.begin(), subjects_seen.end());
  for (const std::string& domain : summary.labeled_subjects) {
    log << "warning: training corpus contains labeled subject " << domain << "\n";
  }

  const IsolationForestModel model = TrainForest(
      samples, config.Forest(), std::vector<std::string>(kFeatureNames.begin(), kFeatureNames.end()));
  WriteFile(config.model, SaveModel(model));

  summary.samples = samples.rows();
  summary.threshold = model.threshold;
  for (double s : model.ScoreAll(samples)) summary.above_threshold += s > model.threshold;
  log << "model       " << config.model << "\n"
      << "records     " << summary.records << "\n"
      << "windows     " << summary.samples << "\n"
      << "threshold   " << Num(summary.threshold) << "\n"
      << "above_T     " << summary.above_threshold << "\n";
  if (model.degenerate) log << "warning: all training windows are identical\n";
  return summary;
}

DetectSummary CmdDetect(const RunConfig& config, std::ostream& log) {
  config.Validate();
  RequirePath(config.corpus, "corpus");
  RequirePath(config.model, "model path");
  std::optional<PublicSuffixList> psl_storage;
  std::optional<Dictionary> dict_storage;
  const PublicSuffixList& suffixes = Suffixes(config, psl_storage);
  const Dictionary& dict = Words(config, dict_storage);
  const IsolationForestModel model = LoadModel(ReadFile(config.model));
  const BlocklistFormat format = ParseBlocklistFormat(config.blocklist_format);

  Detector detector(model, config.Window(), suffixes, dict);
  if (!config.whitelist.empty()) detector.whitelist() = Whitelist::Load(config.whitelist);

  EnsureOutDir(config);
  DetectSummary summary;
  summary.verdict_path = OutPath(config, kVerdictFile);
  summary.blocklist_path = config.blocklist.empty()
                               ? OutPath(config, format == BlocklistFormat::kRpz ? "blocklist.rpz"
                                                                                 : "blocklist.txt")
                               : config.blocklist;
  std::ofstream verdicts(summary.verdict_path, std::ios::binary | std::ios::trunc);
  if (!verdicts) throw Error(ErrorCode::kIoFailure, "cannot write " + summary.verdict_path);
  detector.SetVerdictSink([&](const Verdict& v) {
    verdicts << VerdictToJson(v) << '\n';
    ++summary.verdicts;
    summary.anomalous += v.anomalous;
  });

  LogReader reader(config.corpus);
  while (auto record = reader.Next()) detector.Feed(*record);
  detector.Finish();
  verdicts.close();
  if (!verdicts) throw Error(ErrorCode::kIoFailure, "cannot write " + summary.verdict_path);
  WriteBlocklist(summary.blocklist_path, detector.blocklist(), format);

  summary.records = detector.records_fed();
  summary.cycles = detector.cycles_run();
  summary.blocked = detector.blocklist().entries();
  log << "records     " << summary.records << "\n"
      << "malformed   " << reader.malformed() << "\n"
      << "cycles      " << summary.cycles << "\n"
      << "verdicts    " << summary.verdicts << "\n"
      << "anomalous   " << summary.anomalous << "\n"
      << "blocked     " << summary.blocked.size() << "\n";
  for (const BlocklistEntry& e : summary.blocked) {
    log << "  " << e.domain << " t=" << e.t_now << " score=" << Num(e.score) << "\n";
  }
  return summary;
}

BaselinesSummary CmdBaselines(const RunConfig& config, std::ostream& log) {
  config.Validate();
  RequirePath(config.corpus, "corpus");
  RequirePath(config.baseline_corpus, "baseline corpus");
  std::optional<PublicSuffixList> psl_storage;
  const PublicSuffixList& suffixes = Suffixes(config, psl_storage);

  std::vector<std::string> fit;
  fit.reserve(kH16MinBaseline);
  {
    LogReader reader(config.baseline_corpus);
    while (fit.size() < kH16MinBaseline) {
      auto record = reader.Next();
      if (!record) break;
      fit.push_back(std::move(record->qname));
    }
  }
  BaselinesSummary summary;
  summary.h16 = H16Fit(fit, config.h16_batch);

  LabelMap labels;
  if (auto loaded = LoadLabelsIfPresent(LabelsPathFor(config.corpus))) labels = std::move(*loaded);
  C16Config c16;
  c16.step = config.c16_step;
  c16.window_steps = config.c16_window_steps;
  c16.alpha = config.c16_alpha;
  c16.threshold = config.c16_threshold;

  H16Runner h16(summary.h16, suffixes);
  C16Runner c16_runner(c16, labels, suffixes);
  LogReader reader(config.corpus);
  while (auto record = reader.Next()) {
    h16.Feed(*record);
    c16_runner.Feed(*record);
  }
  h16.Finish();
  c16_runner.Finish();

  EnsureOutDir(config);
  summary.h16_path = OutPath(config, kH16File);
  summary.c16_path = OutPath(config, kC16File);
  std::string text;
  for (const H16Batch& b : h16.batches()) {
    text += H16BatchToJson(b) + "\n";
    summary.h16_flagged += b.flagged;
  }
  WriteFile(summary.h16_path, text);
  text.clear();
  for (const C16Point& p : c16_runner.points()) {
    text += C16PointToJson(p) + "\n";
    summary.c16_flagged += p.flagged;
  }
  WriteFile(summary.c16_path, text);
  summary.h16_batches = h16.batches().size();
  summary.c16_points = c16_runner.points().size();

  log << "h16_mu      " << Num(summary.h16.mu_x) << "\n"
      << "h16_sigma   " << Num(summary.h16.sigma_x) << "\n"
      << "h16_batches " << summary.h16_batches << " flagged " << summary.h16_flagged << "\n"
      << "c16_points  " << summary.c16_points << " flagged " << summary.c16_flagged << "\n";
  return summary;
}

ReportSummary CmdReport(const RunConfig& config, const ReportInputs& inputs, std::ostream& log) {
  config.Validate();
  RequirePath(inputs.verdicts, "verdict log");
  const std::string labels_path =
      inputs.labels.empty() ? LabelsPathFor(CorpusPath(config)) : inputs.labels;
  const LabelMap labels = LabelMap::Load(labels_path);
  const std::vector<Verdict> verdicts = LoadVerdictLog(inputs.verdicts);
  std::optional<std::vector<H16Batch>> h16;
  std::optional<std::vector<C16Point>> c16;
  if (!inputs.h16.empty() && std::filesystem::exists(inputs.h16)) {
    h16 = LoadJsonLines(inputs.h16, &H16BatchFromJson);
  }
  if (!inputs.c16.empty() && std::filesystem::exists(inputs.c16)) {
    c16 = LoadJsonLines(inputs.c16, &C16PointFromJson);
  }
  EnsureOutDir(config);
  ReportSummary summary;
  const int64_t bucket_ms = int64_t{config.lambda_minutes} * 60 * 1000;
  const auto malicious = labels.Malicious();

  // (a) Detection table.
  {
    std::string csv = "subject,domain,proposed,proposed_first_ms,proposed_max_score,h16,"
                      "h16_max_mean_diff,c16,c16_min_smoothed\n";
    for (const auto& [domain, tag] : malicious) {
      std::optional<int64_t> first;
      double max_score = 0.0;
      bool seen = false;
      for (const Verdict& v : verdicts) {
        if (v.domain != domain) continue;
        seen = true;
        max_score = std::max(max_score, v.score);
        if (v.anomalous && !first) first = CycleEndMillis(v.t_now, config.lambda_minutes);
      }
      csv += CsvField(SubjectTagName(tag)) + "," + CsvField(domain) + ",";
      csv += first ? "yes," + std::to_string(*first) : std::string("no,");
      csv += "," + (seen ? Num(max_score) : std::string()) + ",";
      if (h16) {
        bool flagged = false;
        std::optional<double> max_diff;
        for (const H16Batch& b : *h16) {
          if (b.domain != domain) continue;
          flagged |= b.flagged;
          max_diff = std::max(max_diff.value_or(0.0), b.mean_diff);
        }
        csv += std::string(flagged ? "yes" : "no") + "," + (max_diff ? Num(*max_diff) : "");
      } else {
        csv += ",";
      }
      csv += ",";
      if (c16) {
        bool flagged = false;
        std::optional<double> min_smoothed;
        for (const C16Point& p : *c16) {
          if (std::find(p.subjects.begin(), p.subjects.end(), tag) == p.subjects.end()) continue;
          flagged |= p.flagged;
          min_smoothed = std::min(min_smoothed.value_or(p.smoothed), p.smoothed);
        }
        csv += std::string(flagged ? "yes" : "no") + "," + (min_smoothed ? Num(*min_smoothed) : "");
      } else {
        csv += ",";
      }
      csv += "\n";
      ++summary.subjects;
      summary.detected += first.has_value();
    }
    summary.files.push_back(OutPath(config, "detection.csv"));
    WriteFile(summary.files.back(), csv);
  }

  // (b) New false positives per day.
  {
    std::string csv = "day,day_start_ms,new_false_positives,domains\n";
    if (!verdicts.empty()) {
      int64_t first_ms = verdicts.front().t_now * bucket_ms;
      for (const Verdict& v : verdicts) first_ms = std::min(first_ms, v.t_now * bucket_ms);
      const int64_t first_day_ms = first_ms - ((first_ms % kDayMillis) + kDayMillis) % kDayMillis;
      int64_t last_ms = first_ms;
      for (const Verdict& v : verdicts) last_ms = std::max(last_ms, v.t_now * bucket_ms);
      const size_t days = static_cast<size_t>((last_ms - first_day_ms) / kDayMillis + 1);
      summary.false_positives_per_day =
          FalsePositivesPerDay(verdicts, labels, config.lambda_minutes, first_day_ms, days);
      std::map<std::string, int64_t> first_flag;
      for (const Verdict& v : verdicts) {
        if (!v.anomalous || IsMalicious(labels.TagOrBenign(v.domain))) continue;
        const int64_t day = (v.t_now * bucket_ms - first_day_ms) / kDayMillis;
        auto [it, inserted] = first_flag.emplace(v.domain, day);
        if (!inserted) it->second = std::min(it->second, day);
      }
      for (size_t d = 0; d < summary.false_positives_per_day.size(); ++d) {
        std::string names;
        for (const auto& [domain, day] : first_flag) {
          if (day != static_cast<int64_t>(d)) continue;
          if (!names.empty()) names += ';';
          names += domain;
        }
        csv += std::to_string(d) + "," + std::to_string(first_day_ms + int64_t(d) * kDayMillis) +
               "," + std::to_string(summary.false_positives_per_day[d]) + "," + CsvField(names) +
               "\n";
      }
    }
    summary.files.push_back(OutPath(config, "fp_per_day.csv"));
    WriteFile(summary.files.back(), csv);
  }

  // (c) Anomaly score series of the subject domains.
  {
    std::string csv = "subject,domain,t_now,cycle_end_ms,score,threshold,anomalous\n";
    for (const Verdict& v : verdicts) {
      const SubjectTag tag = labels.TagOrBenign(v.domain);
      if (!IsMalicious(tag)) continue;
      csv += CsvField(SubjectTagName(tag)) + "," + CsvField(v.domain) + "," +
             std::to_string(v.t_now) + "," +
             std::to_string(CycleEndMillis(v.t_now, config.lambda_minutes)) + "," + Num(v.score) +
             "," + Num(v.threshold) + "," + (v.anomalous ? "1" : "0") + "\n";
    }
    summary.files.push_back(OutPath(config, "scores.csv"));
    WriteFile(summary.files.back(), csv);
  }

  // (d) Feature distributions per population.
  {
    std::map<std::string, std::array<std::vector<double>, kNumFeatures>> values;
    for (const Verdict& v : verdicts) {
      auto& slot = values[std::string(SubjectTagName(labels.TagOrBenign(v.domain)))];
      const auto row = v.features.Values();
      for (size_t f = 0; f < kNumFeatures; ++f) slot[f].push_back(row[f]);
    }
    std::string summary_csv = "population,feature,count,mean,min,p01,p25,p50,p75,p99,max\n";
    std::string hist_csv = "population,feature,bin,lo,hi,density\n";
    constexpr int kBins = 40;
    for (size_t f = 0; f < kNumFeatures; ++f) {
      double lo = 0.0;
      double hi = 0.0;
      bool any = false;
      for (auto& [population, slot] : values) {
        std::sort(slot[f].begin(), slot[f].end());
        if (slot[f].empty()) continue;
        lo = any ? std::min(lo, slot[f].front()) : slot[f].front();
        hi = any ? std::max(hi, slot[f].back()) : slot[f].back();
        any = true;
      }
      const double width = hi > lo ? (hi - lo) / kBins : 1.0;
      for (const auto& [population, slot] : values) {
        const std::vector<double>& x = slot[f];
        if (x.empty()) continue;
        double mean = 0.0;
        for (double v : x) mean += v;
        mean /= static_cast<double>(x.size());
        summary_csv += population + "," + std::string(kFeatureNames[f]) + "," +
                       std::to_string(x.size()) + "," + Num(mean) + "," + Num(x.front()) + "," +
                       Num(Quantile(x, 0.01)) + "," + Num(Quantile(x, 0.25)) + "," +
                       Num(Quantile(x, 0.5)) + "," + Num(Quantile(x, 0.75)) + "," +
                       Num(Quantile(x, 0.99)) + "," + Num(x.back()) + "\n";
        std::array<uint64_t, kBins> counts{};
        for (double v : x) {
          const int b = std::clamp(static_cast<int>((v - lo) / width), 0, kBins - 1);
          ++counts[b];
        }
        for (int b = 0; b < kBins; ++b) {
          const double density = static_cast<double>(counts[b]) /
                                 (static_cast<double>(x.size()) * width);
          hist_csv += population + "," + std::string(kFeatureNames[f]) + "," + std::to_string(b) +
                      "," + Num(lo + b * width) + "," + Num(lo + (b + 1) * width) + "," +
                      Num(density) + "\n";
        }
      }
    }
    summary.files.push_back(OutPath(config, "features.csv"));
    WriteFile(summary.files.back(), summary_csv);
    summary.files.push_back(OutPath(config, "features_hist.csv"));
    WriteFile(summary.files.back(), hist_csv);
  }

  log << "subjects    " << summary.subjects << " detected " << summary.detected << "\n"
      << "fp_per_day ";
  for (uint64_t n : summary.false_positives_per_day) log << " " << n;
  log << "\n";
  for (const std::string& f : summary.files) log << "wrote       " << f << "\n";
  return summary;
}

}  // namespace dnsexfil
