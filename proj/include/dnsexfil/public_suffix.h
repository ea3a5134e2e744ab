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

#ifndef DNSEXFIL_PUBLIC_SUFFIX_H_
#define DNSEXFIL_PUBLIC_SUFFIX_H_

#include <string>
#include <string_view>
#include <unordered_set>

#include "dnsexfil/dns_record.h"

namespace dnsexfil {

// The registrable domain a query belongs to: one label left of the longest
// matching public suffix, lowercase, with a trailing dot.
struct PrimaryDomain {
  std::string name;
  // False when the query name is itself a public suffix (or has no label
  // left of one); `name` is then the lowercased query name.
  bool registrable = true;

  friend bool operator==(const PrimaryDomain&, const PrimaryDomain&) = default;
};

// Public suffix list with the usual rule syntax: plain suffixes, "*."
// wildcards and "!" exceptions. Lines starting with "//" are comments.
class PublicSuffixList {
 public:
  static PublicSuffixList FromString(std::string_view text);
  static PublicSuffixList FromFile(const std::string& path);
  // Snapshot compiled into the library.
  static const PublicSuffixList& Bundled();

  // Number of trailing labels of `lower_name` (lowercase, no trailing dot)
  // that form its public suffix. Unlisted TLDs count as one label.
  size_t SuffixLabelCount(std::string_view lower_name) const;

  size_t rule_count() const { return rules_.size() + wildcards_.size() + exceptions_.size(); }

 private:
  std::unordered_set<std::string> rules_;
  std::unordered_set<std::string> wildcards_;   // stored without "*."
  std::unordered_set<std::string> exceptions_;  // stored without "!"
};

PrimaryDomain Prim(std::string_view qname, const PublicSuffixList& suffixes);

inline PrimaryDomain Prim(const DnsLogRecord& record, const PublicSuffixList& suffixes) {
  return Prim(record.qname, suffixes);
}

// The query name with ".<primary>" removed, case preserved, no trailing dot.
// Empty when the query is the primary domain itself. Throws
// Error(kMismatchedDomain) if `primary` is not a suffix of the query.
std::string SubdomainPart(std::string_view qname, const PrimaryDomain& primary);

inline std::string SubdomainPart(const DnsLogRecord& record, const PrimaryDomain& primary) {
  return SubdomainPart(record.qname, primary);
}

}  // namespace dnsexfil

#endif  // DNSEXFIL_PUBLIC_SUFFIX_H_
