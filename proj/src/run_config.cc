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

#include "dnsexfil/run_config.h"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>
#include <vector>

#include "dnsexfil/error.h"

namespace dnsexfil {
namespace {

std::string_view Trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

[[noreturn]] void BadValue(std::string_view key, std::string_view value) {
  throw Error(ErrorCode::kInvalidConfig,
              "bad value '" + std::string(value) + "' for " + std::string(key));
}

template <typename T>
T ParseNumber(std::string_view key, std::string_view value) {
  T out{};
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) BadValue(key, value);
  return out;
}

bool ParseBool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  BadValue(key, value);
}

template <typename T>
std::string FormatNumber(T v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

struct Field {
  std::string_view key;
  std::function<void(RunConfig&, std::string_view)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <typename T>
Field Number(std::string_view key, T RunConfig::*member) {
  return {key,
          [key, member](RunConfig& c, std::string_view v) { c.*member = ParseNumber<T>(key, v); },
          [member](const RunConfig& c) { return FormatNumber(c.*member); }};
}

Field Text(std::string_view key, std::string RunConfig::*member) {
  return {key, [member](RunConfig& c, std::string_view v) { c.*member = std::string(v); },
          [member](const RunConfig& c) { return c.*member; }};
}

const std::vector<Field>& Fields() {
  static const std::vector<Field> fields = {
      Number("lambda_minutes", &RunConfig::lambda_minutes),
      Number("n_s", &RunConfig::n_s),
      Number("nu", &RunConfig::nu),
      Number("min_subdomains", &RunConfig::min_subdomains),
      Number("n_trees", &RunConfig::n_trees),
      Number("psi", &RunConfig::psi),
      Number("seed", &RunConfig::seed),
      Text("corpus", &RunConfig::corpus),
      Text("baseline_corpus", &RunConfig::baseline_corpus),
      Text("model", &RunConfig::model),
      Text("whitelist", &RunConfig::whitelist),
      Text("blocklist", &RunConfig::blocklist),
      Text("wordlist", &RunConfig::wordlist),
      Text("suffix_list", &RunConfig::suffix_list),
      Text("out_dir", &RunConfig::out_dir),
      Text("blocklist_format", &RunConfig::blocklist_format),
      Number("users", &RunConfig::users),
      Number("duration_hours", &RunConfig::duration_hours),
      Number("start_ms", &RunConfig::start_ms),
      Number("catalog_size", &RunConfig::catalog_size),
      {"inject", [](RunConfig& c, std::string_view v) { c.inject = ParseBool("inject", v); },
       [](const RunConfig& c) { return std::string(c.inject ? "true" : "false"); }},
      Number("h16_batch", &RunConfig::h16_batch),
      Number("c16_step", &RunConfig::c16_step),
      Number("c16_window_steps", &RunConfig::c16_window_steps),
      Number("c16_alpha", &RunConfig::c16_alpha),
      Number("c16_threshold", &RunConfig::c16_threshold),
  };
  return fields;
}

}  // namespace

WindowConfig RunConfig::Window() const {
  WindowConfig w;
  w.lambda_minutes = lambda_minutes;
  w.n_s = n_s;
  w.nu = nu;
  w.min_subdomains = min_subdomains;
  return w;
}

ForestConfig RunConfig::Forest() const {
  ForestConfig f;
  f.n_trees = n_trees;
  f.psi = psi;
  f.nu = nu;
  f.seed = seed;
  return f;
}

void RunConfig::Validate() const {
  Window().Validate();
  auto fail = [](const std::string& what) { throw Error(ErrorCode::kInvalidConfig, what); };
  if (n_trees < 1) fail("n_trees must be >= 1");
  if (psi < 2) fail("psi must be >= 2");
  if (blocklist_format != "plain" && blocklist_format != "rpz") {
    fail("blocklist_format must be plain or rpz");
  }
  if (users == 0) fail("users must be >= 1");
  if (!(duration_hours > 0.0)) fail("duration_hours must be > 0");
  if (catalog_size == 0) fail("catalog_size must be >= 1");
  if (h16_batch == 0) fail("h16_batch must be >= 1");
  if (c16_step < 2) fail("c16_step must be >= 2");
  if (c16_window_steps < 3) fail("c16_window_steps must be >= 3");
  if (!(c16_alpha > 0.0 && c16_alpha <= 1.0)) fail("c16_alpha must be in (0, 1]");
}

void RunConfig::Set(std::string_view key, std::string_view value) {
  for (const Field& f : Fields()) {
    if (f.key == key) {
      f.set(*this, Trim(value));
      return;
    }
  }
  throw Error(ErrorCode::kInvalidConfig, "unknown config key '" + std::string(key) + "'");
}

std::string RunConfig::Serialize() const {
  std::string out;
  for (const Field& f : Fields()) {
    out += f.key;
    out += " = ";
    out += f.get(*this);
    out += '\n';
  }
  return out;
}

RunConfig RunConfig::Parse(std::string_view text) {
  RunConfig config;
  size_t pos = 0;
  int line_no = 0;
  while (pos < text.size()) {
    size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = Trim(text.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    const size_t eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::kInvalidConfig,
                  "line " + std::to_string(line_no) + ": expected key = value");
    }
    config.Set(Trim(line.substr(0, eq)), Trim(line.substr(eq + 1)));
  }
  return config;
}

RunConfig RunConfig::Load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoFailure, "cannot open config " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return Parse(text.str());
}

void RunConfig::Save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << Serialize();
  out.close();
  if (!out) throw Error(ErrorCode::kIoFailure, "cannot write config " + path);
}

}  // namespace dnsexfil
