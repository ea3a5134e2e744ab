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

// dnsexfil: simulate corpora, train the forest, replay detection, run the
// baselines and write report CSVs.

#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dnsexfil/commands.h"
#include "dnsexfil/error.h"
#include "dnsexfil/run_config.h"

namespace {

using dnsexfil::RunConfig;

// A flag that overrides one RunConfig key.
struct Override {
  const char* flag;
  const char* key;
  const char* help;
  std::optional<std::string> value;
};

std::vector<Override> CommonOverrides() {
  return {
      {"--lambda", "lambda_minutes", "Bucket length in minutes", {}},
      {"--ns", "n_s", "Buckets per window", {}},
      {"--nu", "nu", "Accepted false-positive rate of the threshold", {}},
      {"--min-subdomains", "min_subdomains", "Distinct qnames a candidate needs", {}},
      {"--trees", "n_trees", "Isolation trees", {}},
      {"--psi", "psi", "Subsample size per tree", {}},
      {"--seed", "seed", "Random seed", {}},
      {"--model", "model", "Model file", {}},
      {"--whitelist", "whitelist", "Whitelist file", {}},
      {"--out", "out_dir", "Output directory", {}},
      {"--corpus", "corpus", "Input corpus (.csv/.jsonl, optionally .gz; '-' for stdin)", {}},
      {"--baseline-corpus", "baseline_corpus", "Benign corpus for the H16 fit", {}},
      {"--blocklist", "blocklist", "Blocklist output path", {}},
      {"--format", "blocklist_format", "Blocklist format: plain or rpz", {}},
      {"--wordlist", "wordlist", "Word list replacing the bundled one", {}},
      {"--suffix-list", "suffix_list", "Public suffix list replacing the bundled one", {}},
      {"--users", "users", "Simulated clients", {}},
      {"--hours", "duration_hours", "Simulated hours of benign traffic", {}},
      {"--start-ms", "start_ms", "Simulation start, ms since the epoch", {}},
      {"--catalog", "catalog_size", "Benign domain catalog size", {}},
      {"--inject", "inject", "Inject the four subjects (true/false)", {}},
      {"--h16-batch", "h16_batch", "H16 batch size", {}},
      {"--c16-step", "c16_step", "C16 queries per step", {}},
      {"--c16-window", "c16_window_steps", "C16 window length in steps", {}},
      {"--c16-alpha", "c16_alpha", "C16 smoothing weight", {}},
  };
}

void AddOverrides(CLI::App* cmd, std::vector<Override>& overrides) {
  for (Override& o : overrides) {
    cmd->add_option_function<std::string>(
        o.flag, [&o](const std::string& v) { o.value = v; }, o.help);
  }
}

RunConfig BuildConfig(const std::string& config_path, const std::vector<Override>& overrides) {
  RunConfig config = config_path.empty() ? RunConfig{} : RunConfig::Load(config_path);
  for (const Override& o : overrides) {
    if (o.value) config.Set(o.key, *o.value);
  }
  config.Validate();
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DNS exfiltration detection with an isolation forest over per-domain windows"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "dnsexfil 0.1.0");

  std::string config_path;
  std::vector<Override> overrides = CommonOverrides();
  dnsexfil::ReportInputs report;
  bool print_config = false;

  auto add = [&](const char* name, const char* help) {
    CLI::App* cmd = app.add_subcommand(name, help);
    cmd->add_option("--config", config_path, "key = value config file; flags override it");
    cmd->add_flag("--print-config", print_config, "Print the effective config and exit");
    AddOverrides(cmd, overrides);
    return cmd;
  };
  CLI::App* simulate = add("simulate", "Write a synthetic labeled corpus");
  CLI::App* train = add("train", "Train the forest on a benign corpus");
  CLI::App* detect = add("detect", "Replay a corpus through the detector");
  CLI::App* baselines = add("baselines", "Run the H16 and C16 baselines");
  CLI::App* report_cmd = add("report", "Write plot-ready CSVs from run outputs");
  report_cmd->add_option("--verdicts", report.verdicts, "Verdict log from detect")->required();
  report_cmd->add_option("--labels", report.labels, "Label sidecar");
  report_cmd->add_option("--h16", report.h16, "H16 JSON lines from baselines");
  report_cmd->add_option("--c16", report.c16, "C16 JSON lines from baselines");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? dnsexfil::kExitOk : dnsexfil::kExitUsage;
  }

  try {
    const RunConfig config = BuildConfig(config_path, overrides);
    if (print_config) {
      std::cout << config.Serialize();
      return dnsexfil::kExitOk;
    }
    if (simulate->parsed()) {
      dnsexfil::CmdSimulate(config, std::cout);
    } else if (train->parsed()) {
      dnsexfil::CmdTrain(config, std::cout);
    } else if (detect->parsed()) {
      dnsexfil::CmdDetect(config, std::cout);
    } else if (baselines->parsed()) {
      dnsexfil::CmdBaselines(config, std::cout);
    } else if (report_cmd->parsed()) {
      dnsexfil::CmdReport(config, report, std::cout);
    }
  } catch (const dnsexfil::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return dnsexfil::ExitCodeFor(e);
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return dnsexfil::kExitInternal;
  }
  return dnsexfil::kExitOk;
}
