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

#include "dnsexfil/labels.h"

#include <fstream>
#include <sstream>

#include "dnsexfil/error.h"

namespace dnsexfil {

std::string_view SubjectTagName(SubjectTag tag) {
  switch (tag) {
    case SubjectTag::kBenign: return "benign";
    case SubjectTag::kFrameworkPos: return "frameworkpos";
    case SubjectTag::kDenis: return "denis";
    case SubjectTag::kIodine: return "iodine";
    case SubjectTag::kDns2tcp: return "dns2tcp";
  }
  return "benign";
}

SubjectTag ParseSubjectTag(std::string_view name) {
  for (SubjectTag tag : {SubjectTag::kBenign, SubjectTag::kFrameworkPos, SubjectTag::kDenis,
                         SubjectTag::kIodine, SubjectTag::kDns2tcp}) {
    if (SubjectTagName(tag) == name) return tag;
  }
  throw Error(ErrorCode::kMalformedLine, "unknown subject tag '" + std::string(name) + "'");
}

void LabelMap::Set(const std::string& domain, SubjectTag tag) {
  auto [it, inserted] = entries_.emplace(domain, tag);
  if (!inserted && it->second != tag) {
    throw Error(ErrorCode::kLabelConflict, domain + " labeled both " +
                                               std::string(SubjectTagName(it->second)) + " and " +
                                               std::string(SubjectTagName(tag)));
  }
}

void LabelMap::Merge(const LabelMap& other) {
  for (const auto& [domain, tag] : other.entries_) Set(domain, tag);
}

std::optional<SubjectTag> LabelMap::Get(const std::string& domain) const {
  const auto it = entries_.find(domain);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

std::map<std::string, SubjectTag> LabelMap::Malicious() const {
  std::map<std::string, SubjectTag> out;
  for (const auto& [domain, tag] : entries_) {
    if (IsMalicious(tag)) out.emplace(domain, tag);
  }
  return out;
}

std::string LabelMap::Serialize() const {
  std::string out = "domain,tag\n";
  for (const auto& [domain, tag] : entries_) {
    out += domain;
    out += ',';
    out += SubjectTagName(tag);
    out += '\n';
  }
  return out;
}

LabelMap LabelMap::Parse(std::string_view text) {
  LabelMap labels;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#' || line == "domain,tag") continue;
    const size_t comma = line.find(',');
    if (comma == std::string::npos || comma == 0) {
      throw Error(ErrorCode::kMalformedLine, "label line '" + line + "'");
    }
    labels.Set(line.substr(0, comma), ParseSubjectTag(line.substr(comma + 1)));
  }
  return labels;
}

LabelMap LabelMap::Load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoFailure, "cannot open labels file " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return Parse(text.str());
}

void LabelMap::Save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  out << Serialize();
  if (!out) throw Error(ErrorCode::kIoFailure, "cannot write labels file " + path);
}

}  // namespace dnsexfil
