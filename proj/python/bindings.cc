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

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "dnsexfil/commands.h"
#include "dnsexfil/error.h"
#include "dnsexfil/features.h"
#include "dnsexfil/iforest.h"
#include "dnsexfil/public_suffix.h"
#include "dnsexfil/run_config.h"
#include "dnsexfil/window_store.h"

namespace py = pybind11;
using namespace dnsexfil;

namespace {

FeatureMatrix ToMatrix(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) throw Error(ErrorCode::kInsufficientSamples, "no rows");
  FeatureMatrix m(rows.front().size());
  for (const auto& row : rows) {
    if (row.size() != m.cols()) throw Error(ErrorCode::kInvalidConfig, "ragged rows");
    m.AddRow(row);
  }
  return m;
}

py::dict FeaturesToDict(const FeatureVector& v) {
  py::dict d;
  d["domain"] = v.domain;
  d["ent"] = v.ent;
  d["ni"] = v.ni;
  d["uniq"] = v.uniq;
  d["vol"] = v.vol;
  d["len"] = v.len;
  d["lmw"] = v.lmw;
  return d;
}

// Features of one window holding the given queries, keyed by primary domain.
py::dict WindowFeatures(const std::vector<std::string>& qnames,
                        const std::vector<std::string>& rrtypes) {
  if (!rrtypes.empty() && rrtypes.size() != qnames.size()) {
    throw Error(ErrorCode::kInvalidConfig, "qnames and rrtypes differ in length");
  }
  const PublicSuffixList& psl = PublicSuffixList::Bundled();
  WindowConfig config;
  config.min_subdomains = 1;
  WindowStore store(config);
  store.Advance(0);
  for (size_t i = 0; i < qnames.size(); ++i) {
    DnsLogRecord r;
    r.qname = CanonicalizeQname(qnames[i]);
    r.rrtype = rrtypes.empty() ? RrType::kA : ParseRrType(rrtypes[i]);
    store.Ingest(r, Prim(r, psl));
  }
  py::dict out;
  for (const std::string& d : store.Domains()) {
    out[py::str(d)] = FeaturesToDict(ExtractFeatures(store.AssembleWindow(d), Dictionary::Bundled()));
  }
  return out;
}

template <typename Fn>
py::tuple RunCommand(const std::string& config_text, Fn fn) {
  const RunConfig config = RunConfig::Parse(config_text);
  std::ostringstream log;
  py::object summary = fn(config, log);
  return py::make_tuple(summary, log.str());
}

}  // namespace

PYBIND11_MODULE(_dnsexfil, m) {
  m.doc() = "DNS exfiltration detection core";
  py::register_exception<Error>(m, "Error", PyExc_ValueError);

  m.def("ldh_entropy", &LdhEntropy, py::arg("text"),
        "Shannon entropy in bits over the letter-digit-hyphen characters of text.");
  m.def(
      "primary_domain",
      [](const std::string& qname) {
        DnsLogRecord r;
        r.qname = CanonicalizeQname(qname);
        return Prim(r, PublicSuffixList::Bundled()).name;
      },
      py::arg("qname"));
  m.def("window_features", &WindowFeatures, py::arg("qnames"),
        py::arg("rrtypes") = std::vector<std::string>{});
  m.def("path_adjustment", &ExpectedPathAdjustment, py::arg("n"));

  py::class_<IsolationForestModel>(m, "Model")
      .def_static(
          "train",
          [](const std::vector<std::vector<double>>& rows, int n_trees, int psi, double nu,
             uint64_t seed, std::vector<std::string> names) {
            ForestConfig c;
            c.n_trees = n_trees;
            c.psi = psi;
            c.nu = nu;
            c.seed = seed;
            return TrainForest(ToMatrix(rows), c, std::move(names));
          },
          py::arg("rows"), py::arg("n_trees") = 100, py::arg("psi") = 256, py::arg("nu") = 2e-5,
          py::arg("seed") = 0, py::arg("feature_names") = std::vector<std::string>{})
      .def_static("load", &LoadModel, py::arg("text"))
      .def("save", [](const IsolationForestModel& model) { return SaveModel(model); })
      .def("score",
           [](const IsolationForestModel& model, const std::vector<double>& row) {
             return model.Score(row);
           })
      .def("score_all",
           [](const IsolationForestModel& model, const std::vector<std::vector<double>>& rows) {
             return model.ScoreAll(ToMatrix(rows));
           })
      .def_readonly("threshold", &IsolationForestModel::threshold)
      .def_readonly("nu", &IsolationForestModel::nu)
      .def_readonly("psi", &IsolationForestModel::psi)
      .def_readonly("feature_names", &IsolationForestModel::feature_names)
      .def_readonly("degenerate", &IsolationForestModel::degenerate)
      .def_property_readonly("n_trees", &IsolationForestModel::n_trees);

  // Commands take a run config in key = value form and return
  // (summary, log text).
  m.def("simulate", [](const std::string& config) {
    return RunCommand(config, [](const RunConfig& c, std::ostream& log) {
      const SimulateSummary s = CmdSimulate(c, log);
      py::dict d;
      d["corpus"] = s.corpus_path;
      d["labels"] = s.labels_path;
      d["records"] = s.corpus.records;
      return py::object(d);
    });
  });
  m.def("train", [](const std::string& config) {
    return RunCommand(config, [](const RunConfig& c, std::ostream& log) {
      const TrainSummary s = CmdTrain(c, log);
      py::dict d;
      d["samples"] = s.samples;
      d["threshold"] = s.threshold;
      d["above_threshold"] = s.above_threshold;
      d["records"] = s.records;
      d["labeled_subjects"] = s.labeled_subjects;
      return py::object(d);
    });
  });
  m.def("detect", [](const std::string& config) {
    return RunCommand(config, [](const RunConfig& c, std::ostream& log) {
      const DetectSummary s = CmdDetect(c, log);
      py::dict d;
      d["records"] = s.records;
      d["cycles"] = s.cycles;
      d["verdicts"] = s.verdicts;
      d["anomalous"] = s.anomalous;
      std::vector<std::string> blocked;
      for (const BlocklistEntry& e : s.blocked) blocked.push_back(e.domain);
      d["blocked"] = blocked;
      d["verdict_path"] = s.verdict_path;
      d["blocklist_path"] = s.blocklist_path;
      return py::object(d);
    });
  });
}
