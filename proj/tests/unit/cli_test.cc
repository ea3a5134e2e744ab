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
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "dnsexfil/commands.h"
#include "dnsexfil/error.h"
#include "dnsexfil/iforest.h"
#include "dnsexfil/labels.h"
#include "dnsexfil/run_config.h"
#include "dnsexfil/random.h"

using namespace dnsexfil;
namespace fs = std::filesystem;

namespace {

std::string Slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path FreshDir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("dnsexfil_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

RunConfig SmallRun(const fs::path& dir) {
  RunConfig c;
  c.out_dir = dir.string();
  c.users = 300;
  c.catalog_size = 1500;
  c.n_trees = 40;
  c.psi = 64;
  c.nu = 0.01;
  return c;
}

}  // namespace

TEST_CASE("run config defaults") {
  const RunConfig c;
  CHECK(c.lambda_minutes == 60);
  CHECK(c.n_s == 6);
  CHECK(c.nu == 2e-5);
  CHECK(c.min_subdomains == 10);
  CHECK(c.n_trees == 100);
  CHECK(c.psi == 256);
  CHECK_NOTHROW(c.Validate());
}

TEST_CASE("run config parses comments and rejects unknown keys") {
  const RunConfig c = RunConfig::Parse("# run\n lambda_minutes = 15\n\nn_s=24\nnu = 1e-3\n");
  CHECK(c.lambda_minutes == 15);
  CHECK(c.n_s == 24);
  CHECK(c.nu == 1e-3);
  CHECK_THROWS_AS(RunConfig::Parse("bogus = 1\n"), Error);
  CHECK_THROWS_AS(RunConfig::Parse("n_s 6\n"), Error);
  CHECK_THROWS_AS(RunConfig::Parse("n_s = six\n"), Error);
  CHECK_THROWS_AS(RunConfig::Parse("inject = maybe\n"), Error);
  RunConfig bad;
  bad.blocklist_format = "hosts";
  CHECK_THROWS_AS(bad.Validate(), Error);
  bad = RunConfig{};
  bad.psi = 1;
  CHECK_THROWS_AS(bad.Validate(), Error);
}

TEST_CASE("property: configs round-trip through their file form") {
  Rng rng(12);
  for (int i = 0; i < 200; ++i) {
    RunConfig c;
    c.lambda_minutes = 1 + static_cast<int>(rng.UniformInt(240));
    c.n_s = 1 + static_cast<int>(rng.UniformInt(48));
    c.nu = rng.Uniform(1e-9, 0.5);
    c.min_subdomains = static_cast<int>(rng.UniformInt(100));
    c.n_trees = 1 + static_cast<int>(rng.UniformInt(500));
    c.psi = 2 + static_cast<int>(rng.UniformInt(1000));
    c.seed = rng.NextU64();
    c.corpus = "dir with spaces/c" + std::to_string(i) + ".csv.gz";
    c.model = "m=odel#" + std::to_string(i);
    c.out_dir = "out" + std::to_string(i);
    c.blocklist_format = rng.Bernoulli(0.5) ? "plain" : "rpz";
    c.users = 1 + static_cast<uint32_t>(rng.UniformInt(100000));
    c.duration_hours = rng.Uniform(0.01, 200.0);
    c.start_ms = static_cast<int64_t>(rng.UniformInt(uint64_t{1} << 45));
    c.inject = rng.Bernoulli(0.5);
    c.c16_alpha = rng.Uniform(1e-6, 1.0);
    c.c16_threshold = rng.Normal();
    const RunConfig back = RunConfig::Parse(c.Serialize());
    CHECK(back == c);
  }
}

TEST_CASE("exit codes by error kind") {
  CHECK(ExitCodeFor(Error(ErrorCode::kInvalidConfig, "x")) == kExitUsage);
  CHECK(ExitCodeFor(Error(ErrorCode::kMalformedLine, "x")) == kExitData);
  CHECK(ExitCodeFor(Error(ErrorCode::kInsufficientSamples, "x")) == kExitData);
}

TEST_CASE("simulate is deterministic and labels the subjects") {
  const fs::path dir = FreshDir("simulate");
  RunConfig c = SmallRun(dir);
  c.duration_hours = 0.5;
  std::ostringstream log;
  c.corpus = (dir / "a.csv.gz").string();
  const SimulateSummary a = CmdSimulate(c, log);
  CHECK(a.corpus.labels.Malicious().size() == 4);
  CHECK(LabelMap::Load(a.labels_path).Malicious().size() == 4);
  c.corpus = (dir / "b.csv.gz").string();
  CmdSimulate(c, log);
  CHECK(Slurp((dir / "a.csv.gz").string()) == Slurp((dir / "b.csv.gz").string()));
  CHECK(Slurp((dir / "a.labels.csv").string()) == Slurp((dir / "b.labels.csv").string()));

  c.inject = false;
  c.duration_hours = 1.0;
  c.corpus = (dir / "benign.csv").string();
  const SimulateSummary benign = CmdSimulate(c, log);
  CHECK(benign.corpus.labels.Malicious().empty());
  CHECK(log.str().find("subjects    0") != std::string::npos);
}

TEST_CASE("train, detect and report on a small run") {
  const fs::path dir = FreshDir("pipeline");
  std::ostringstream log;
  RunConfig c = SmallRun(dir);

  // Training day without subjects.
  c.inject = false;
  c.duration_hours = 8.0;
  c.corpus = (dir / "train.csv.gz").string();
  CmdSimulate(c, log);
  c.model = (dir / "model.json").string();
  const TrainSummary t = CmdTrain(c, log);
  CHECK(t.samples >= 64);
  CHECK(t.labeled_subjects.empty());
  CHECK(static_cast<double>(t.above_threshold) <= c.nu * static_cast<double>(t.samples));
  CHECK(LoadModel(Slurp(c.model)).threshold == t.threshold);

  // Test day with subjects.
  c.inject = true;
  c.seed = 2;
  c.start_ms += 8 * 3600000;
  c.duration_hours = 4.0;
  c.corpus = (dir / "test.csv.gz").string();
  CmdSimulate(c, log);
  const DetectSummary d1 = CmdDetect(c, log);
  const std::string verdicts1 = Slurp(d1.verdict_path);
  const DetectSummary d2 = CmdDetect(c, log);
  CHECK(Slurp(d2.verdict_path) == verdicts1);
  CHECK(d1.records > 0);
  CHECK(d1.cycles >= 4);

  ReportInputs inputs;
  inputs.verdicts = d1.verdict_path;
  const ReportSummary r1 = CmdReport(c, inputs, log);
  CHECK(r1.subjects == 4);
  CHECK(r1.files.size() == 5);
  std::vector<std::string> first;
  for (const auto& f : r1.files) first.push_back(Slurp(f));
  CmdReport(c, inputs, log);
  for (size_t i = 0; i < r1.files.size(); ++i) CHECK(Slurp(r1.files[i]) == first[i]);
  const std::string detection = first[0];
  CHECK(detection.find("frameworkpos.com.") != std::string::npos);
  CHECK(detection.find("tunnelbridge.net.") != std::string::npos);

  // Training on a corpus with subjects warns.
  std::ostringstream warn;
  const TrainSummary bad = CmdTrain(c, warn);
  CHECK_FALSE(bad.labeled_subjects.empty());
  CHECK(warn.str().find("warning: training corpus contains labeled subject") != std::string::npos);
}

TEST_CASE("train needs a full window of data") {
  const fs::path dir = FreshDir("short");
  std::ostringstream log;
  RunConfig c = SmallRun(dir);
  c.inject = false;
  c.duration_hours = 2.0;
  c.corpus = (dir / "short.csv").string();
  CmdSimulate(c, log);
  c.model = (dir / "m.json").string();
  try {
    CmdTrain(c, log);
    FAIL("expected InsufficientSamples");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kInsufficientSamples);
  }
}

TEST_CASE("commands report missing inputs as usage errors") {
  std::ostringstream log;
  RunConfig c;
  try {
    CmdTrain(c, log);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(ExitCodeFor(e) == kExitUsage);
  }
  c.corpus = "/nonexistent/corpus.csv";
  c.model = "/nonexistent/model.json";
  try {
    CmdDetect(c, log);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(ExitCodeFor(e) == kExitData);
  }
}
