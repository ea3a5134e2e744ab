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

#include "dnsexfil/public_suffix.h"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <vector>

#include "dnsexfil/bundled_data.h"
#include "dnsexfil/error.h"

namespace dnsexfil {
namespace {

std::string Lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

bool EndsWithIgnoreCase(std::string_view s, std::string_view suffix) {
  if (s.size() < suffix.size()) return false;
  const std::string_view tail = s.substr(s.size() - suffix.size());
  return std::equal(tail.begin(), tail.end(), suffix.begin(), [](char a, char b) {
    return std::tolower(static_cast<unsigned char>(a)) ==
           std::tolower(static_cast<unsigned char>(b));
  });
}

}  // namespace

PublicSuffixList PublicSuffixList::FromString(std::string_view text) {
  PublicSuffixList list;
  size_t pos = 0;
  while (pos < text.size()) {
    size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    // A rule is the first whitespace-delimited token on the line.
    const size_t first = line.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) continue;
    line.remove_prefix(first);
    line = line.substr(0, line.find_first_of(" \t\r"));
    if (line.empty() || line.starts_with("//")) continue;
    while (!line.empty() && line.back() == '.') line.remove_suffix(1);
    if (line.empty()) continue;
    if (line.front() == '!') {
      list.exceptions_.insert(Lower(line.substr(1)));
    } else if (line.starts_with("*.")) {
      list.wildcards_.insert(Lower(line.substr(2)));
    } else {
      list.rules_.insert(Lower(line));
    }
  }
  return list;
}

PublicSuffixList PublicSuffixList::FromFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoFailure, "cannot open suffix list " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return FromString(buf.str());
}

const PublicSuffixList& PublicSuffixList::Bundled() {
  static const PublicSuffixList list = FromString(BundledPublicSuffixText());
  return list;
}

size_t PublicSuffixList::SuffixLabelCount(std::string_view lower_name) const {
  // Label start offsets, left to right.
  std::vector<size_t> starts;
  starts.push_back(0);
  for (size_t i = 0; i < lower_name.size(); ++i) {
    if (lower_name[i] == '.') starts.push_back(i + 1);
  }
  const size_t n = starts.size();
  size_t best = 1;
  for (size_t k = n; k >= 1; --k) {
    const std::string key(lower_name.substr(starts[n - k]));
    if (exceptions_.contains(key)) return k - 1;
    if (k <= best) continue;
    if (rules_.contains(key)) {
      best = k;
    } else if (k >= 2 && wildcards_.contains(std::string(lower_name.substr(starts[n - k + 1])))) {
      best = k;
    }
  }
  return best;
}

PrimaryDomain Prim(std::string_view qname, const PublicSuffixList& suffixes) {
  while (!qname.empty() && qname.back() == '.') qname.remove_suffix(1);
  const std::string lower = Lower(qname);
  const size_t labels = static_cast<size_t>(std::count(lower.begin(), lower.end(), '.')) + 1;
  const size_t suffix_labels = suffixes.SuffixLabelCount(lower);
  if (lower.empty() || labels <= suffix_labels) {
    return PrimaryDomain{lower + ".", false};
  }
  // Keep suffix_labels + 1 labels from the right.
  size_t cut = lower.size();
  for (size_t seen = 0; seen <= suffix_labels; ++seen) {
    cut = lower.rfind('.', cut - 1);
    if (cut == std::string::npos) break;
    if (seen == suffix_labels) break;
  }
  std::string name = cut == std::string::npos ? lower : lower.substr(cut + 1);
  name.push_back('.');
  return PrimaryDomain{std::move(name), true};
}

std::string SubdomainPart(std::string_view qname, const PrimaryDomain& primary) {
  if (!EndsWithIgnoreCase(qname, primary.name)) {
    // Tolerate a query without its trailing dot.
    std::string dotted(qname);
    dotted.push_back('.');
    if (qname.empty() || qname.back() == '.' || !EndsWithIgnoreCase(dotted, primary.name)) {
      throw Error(ErrorCode::kMismatchedDomain,
                  std::string(primary.name) + " is not a suffix of " + std::string(qname));
    }
    return SubdomainPart(dotted, primary);
  }
  if (qname.size() == primary.name.size()) return "";
  const size_t boundary = qname.size() - primary.name.size();
  if (qname[boundary - 1] != '.') {
    throw Error(ErrorCode::kMismatchedDomain,
                std::string(primary.name) + " is not a label suffix of " + std::string(qname));
  }
  return std::string(qname.substr(0, boundary - 1));
}

}  // namespace dnsexfil
