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

#include "dnsexfil/features.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "dnsexfil/bundled_data.h"
#include "dnsexfil/error.h"
#include "dnsexfil/public_suffix.h"

namespace dnsexfil {
namespace {

int LetterIndex(char c) {
  if (c >= 'a' && c <= 'z') return c - 'a';
  if (c >= 'A' && c <= 'Z') return c - 'A';
  return -1;
}

double LmwOfQname(std::string_view qname, const PrimaryDomain& primary, const Dictionary& dict) {
  return LmwRatioOfSubdomain(SubdomainPart(qname, primary), dict);
}

}  // namespace

double LdhHistogram::Entropy() const {
  if (total_ == 0) return 0.0;
  const double n = static_cast<double>(total_);
  double h = 0.0;
  for (uint64_t c : counts_) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / n;
    h -= p * std::log2(p);
  }
  return h;
}

double LdhEntropy(std::string_view text) {
  LdhHistogram hist;
  hist.Add(text);
  return hist.Entropy();
}

Dictionary Dictionary::FromWords(const std::vector<std::string>& words, size_t min_word_length) {
  Dictionary dict;
  dict.min_word_length_ = min_word_length;
  for (const std::string& w : words) dict.Insert(w);
  return dict;
}

Dictionary Dictionary::FromFile(const std::string& path, size_t min_word_length) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoFailure, "cannot open word list " + path);
  Dictionary dict;
  dict.min_word_length_ = min_word_length;
  std::string line;
  while (std::getline(in, line)) dict.Insert(line);
  return dict;
}

const Dictionary& Dictionary::Bundled() {
  static const Dictionary dict = [] {
    Dictionary d;
    std::string_view text = BundledWordlistText();
    size_t pos = 0;
    while (pos < text.size()) {
      size_t end = text.find('\n', pos);
      if (end == std::string_view::npos) end = text.size();
      d.Insert(text.substr(pos, end - pos));
      pos = end + 1;
    }
    return d;
  }();
  return dict;
}

void Dictionary::Insert(std::string_view word) {
  while (!word.empty() && std::isspace(static_cast<unsigned char>(word.back()))) {
    word.remove_suffix(1);
  }
  while (!word.empty() && std::isspace(static_cast<unsigned char>(word.front()))) {
    word.remove_prefix(1);
  }
  if (word.size() < min_word_length_) return;
  // Only alphabetic words; anything else could never match a substring walk.
  if (!std::all_of(word.begin(), word.end(), [](char c) { return LetterIndex(c) >= 0; })) return;
  uint32_t node = 0;
  for (char c : word) {
    const int idx = LetterIndex(c);
    if (nodes_[node].next[idx] == 0) {
      nodes_[node].next[idx] = static_cast<uint32_t>(nodes_.size());
      nodes_.emplace_back();
    }
    node = nodes_[node].next[idx];
  }
  if (!nodes_[node].terminal) ++word_count_;
  nodes_[node].terminal = true;
}

bool Dictionary::Contains(std::string_view word) const {
  if (word.size() < min_word_length_) return false;
  uint32_t node = 0;
  for (char c : word) {
    const int idx = LetterIndex(c);
    if (idx < 0 || nodes_[node].next[idx] == 0) return false;
    node = nodes_[node].next[idx];
  }
  return nodes_[node].terminal;
}

size_t Dictionary::LongestWordIn(std::string_view text) const {
  size_t best = 0;
  for (size_t start = 0; start < text.size(); ++start) {
    if (text.size() - start <= best) break;
    uint32_t node = 0;
    for (size_t i = start; i < text.size(); ++i) {
      const int idx = LetterIndex(text[i]);
      if (idx < 0) break;
      node = nodes_[node].next[idx];
      if (node == 0) break;
      const size_t len = i - start + 1;
      if (nodes_[node].terminal && len > best) best = len;
    }
  }
  return best;
}

double LmwRatioOfSubdomain(std::string_view subdomain, const Dictionary& dict) {
  std::string stripped;
  stripped.reserve(subdomain.size());
  for (char c : subdomain) {
    if (c != '.') stripped.push_back(c);
  }
  if (stripped.empty()) return 0.0;
  return static_cast<double>(dict.LongestWordIn(stripped)) / static_cast<double>(stripped.size());
}

double CharEntropy(const DomainWindow& window) {
  LdhHistogram hist;
  for (const WindowEntry& e : window.Entries()) hist.Add(e.qname, e.stats.count);
  return hist.Entropy();
}

double NonIpRatio(const DomainWindow& window) {
  uint64_t ip = 0;
  uint64_t total = 0;
  for (const Bucket* b : window.buckets) {
    for (const auto& [qname, stats] : b->qnames) {
      ip += stats.IpCount();
      total += stats.count;
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(ip) / static_cast<double>(total);
}

double UniqueQueryRatio(const DomainWindow& window) {
  const uint64_t total = window.RecordCount();
  return total == 0 ? 0.0
                    : static_cast<double>(window.DistinctQnames()) / static_cast<double>(total);
}

uint64_t UniqueQueryVolume(const DomainWindow& window) { return window.DistinctQnames(); }

double QueryLengthAvg(const DomainWindow& window) {
  uint64_t chars = 0;
  uint64_t total = 0;
  for (const Bucket* b : window.buckets) {
    for (const auto& [qname, stats] : b->qnames) {
      chars += stats.count * (qname.size() - 1);
      total += stats.count;
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(chars) / static_cast<double>(total);
}

double LmwRatio(const DomainWindow& window, const Dictionary& dict) {
  const PrimaryDomain primary{window.domain, true};
  double sum = 0.0;
  uint64_t total = 0;
  for (const WindowEntry& e : window.Entries()) {
    sum += static_cast<double>(e.stats.count) * LmwOfQname(e.qname, primary, dict);
    total += e.stats.count;
  }
  return total == 0 ? 0.0 : sum / static_cast<double>(total);
}

FeatureVector ExtractFeatures(const DomainWindow& window, const Dictionary& dict) {
  const PrimaryDomain primary{window.domain, true};
  LdhHistogram hist;
  uint64_t total = 0;
  uint64_t ip = 0;
  uint64_t chars = 0;
  double lmw_sum = 0.0;
  const std::vector<WindowEntry> entries = window.Entries();
  for (const WindowEntry& e : entries) {
    const uint64_t n = e.stats.count;
    hist.Add(e.qname, n);
    total += n;
    ip += e.stats.IpCount();
    chars += n * (e.qname.size() - 1);
    lmw_sum += static_cast<double>(n) * LmwOfQname(e.qname, primary, dict);
  }
  FeatureVector v;
  v.domain = window.domain;
  v.t_now = window.t_now;
  v.vol = entries.size();
  if (total > 0) {
    const double n = static_cast<double>(total);
    v.ent = hist.Entropy();
    v.ni = static_cast<double>(ip) / n;
    v.uniq = static_cast<double>(entries.size()) / n;
    v.len = static_cast<double>(chars) / n;
    v.lmw = lmw_sum / n;
  }
  return v;
}

}  // namespace dnsexfil
