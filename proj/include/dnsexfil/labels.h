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

#ifndef DNSEXFIL_LABELS_H_
#define DNSEXFIL_LABELS_H_

#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace dnsexfil {

enum class SubjectTag { kBenign, kFrameworkPos, kDenis, kIodine, kDns2tcp };

std::string_view SubjectTagName(SubjectTag tag);
// Throws Error(kMalformedLine) for unknown names.
SubjectTag ParseSubjectTag(std::string_view name);

inline bool IsMalicious(SubjectTag tag) { return tag != SubjectTag::kBenign; }

// Ground truth for a corpus: primary domain -> tag. Domains missing from the
// map are treated as benign.
class LabelMap {
 public:
  // Throws Error(kLabelConflict) if the domain already carries another tag.
  void Set(const std::string& domain, SubjectTag tag);
  // Unions `other` into this map with the same conflict rule.
  void Merge(const LabelMap& other);

  std::optional<SubjectTag> Get(const std::string& domain) const;
  SubjectTag TagOrBenign(const std::string& domain) const {
    return Get(domain).value_or(SubjectTag::kBenign);
  }
  // Malicious domains only, sorted by domain.
  std::map<std::string, SubjectTag> Malicious() const;

  const std::map<std::string, SubjectTag>& entries() const { return entries_; }
  size_t size() const { return entries_.size(); }

  // "domain,tag" lines, sorted by domain.
  std::string Serialize() const;
  static LabelMap Parse(std::string_view text);
  static LabelMap Load(const std::string& path);
  void Save(const std::string& path) const;

  friend bool operator==(const LabelMap&, const LabelMap&) = default;

 private:
  std::map<std::string, SubjectTag> entries_;
};

}  // namespace dnsexfil

#endif  // DNSEXFIL_LABELS_H_
