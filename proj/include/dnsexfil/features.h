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

#ifndef DNSEXFIL_FEATURES_H_
#define DNSEXFIL_FEATURES_H_

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "dnsexfil/window_store.h"

namespace dnsexfil {

inline constexpr size_t kNumFeatures = 6;
inline constexpr std::array<std::string_view, kNumFeatures> kFeatureNames = {
    "ent", "ni", "uniq", "vol", "len", "lmw"};

struct FeatureVector {
  std::string domain;
  // Character entropy of the concatenated query names, bits per LDH symbol.
  double ent = 0.0;
  // Fraction of A and AAAA queries.
  double ni = 0.0;
  // Distinct query names over total queries.
  double uniq = 0.0;
  // Distinct query names.
  uint64_t vol = 0;
  // Mean query name length without the root dot.
  double len = 0.0;
  // Mean longest-meaningful-word ratio of the subdomain parts.
  double lmw = 0.0;
  int64_t t_now = 0;

  // Values in kFeatureNames order.
  std::array<double, kNumFeatures> Values() const {
    return {ent, ni, uniq, static_cast<double>(vol), len, lmw};
  }

  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

// Letter/digit/hyphen symbol counts. Everything else, dots included, is
// ignored.
class LdhHistogram {
 public:
  static bool IsLdh(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
           c == '-';
  }

  void Add(std::string_view text, uint64_t times = 1) {
    for (char c : text) {
      if (IsLdh(c)) {
        counts_[static_cast<unsigned char>(c)] += times;
        total_ += times;
      }
    }
  }

  uint64_t total() const { return total_; }

  // Shannon entropy in bits; 0 when no LDH symbol was seen.
  double Entropy() const;

 private:
  std::array<uint64_t, 128> counts_{};
  uint64_t total_ = 0;
};

// Entropy of one string under the LDH convention. Shared with the H16
// baseline.
double LdhEntropy(std::string_view text);

// Lowercase English word list queried for the longest embedded word.
class Dictionary {
 public:
  static constexpr size_t kDefaultMinWordLength = 3;

  static Dictionary FromWords(const std::vector<std::string>& words,
                              size_t min_word_length = kDefaultMinWordLength);
  static Dictionary FromFile(const std::string& path,
                             size_t min_word_length = kDefaultMinWordLength);
  // Word list compiled into the library.
  static const Dictionary& Bundled();

  // Length of the longest dictionary word occurring as a substring of
  // `text`, compared case-insensitively; 0 if none.
  size_t LongestWordIn(std::string_view text) const;

  bool Contains(std::string_view word) const;
  size_t word_count() const { return word_count_; }
  size_t min_word_length() const { return min_word_length_; }

 private:
  struct Node {
    std::array<uint32_t, 26> next{};
    bool terminal = false;
  };
  void Insert(std::string_view word);

  std::vector<Node> nodes_{Node{}};
  size_t word_count_ = 0;
  size_t min_word_length_ = kDefaultMinWordLength;
};

// Longest word length over the subdomain length, dots removed. 0 for an empty
// subdomain.
double LmwRatioOfSubdomain(std::string_view subdomain, const Dictionary& dict);

double CharEntropy(const DomainWindow& window);
double NonIpRatio(const DomainWindow& window);
double UniqueQueryRatio(const DomainWindow& window);
uint64_t UniqueQueryVolume(const DomainWindow& window);
double QueryLengthAvg(const DomainWindow& window);
double LmwRatio(const DomainWindow& window, const Dictionary& dict);

// All six features in one pass over the window.
FeatureVector ExtractFeatures(const DomainWindow& window, const Dictionary& dict);

}  // namespace dnsexfil

#endif  // DNSEXFIL_FEATURES_H_
