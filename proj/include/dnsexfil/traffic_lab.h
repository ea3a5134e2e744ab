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

#ifndef DNSEXFIL_TRAFFIC_LAB_H_
#define DNSEXFIL_TRAFFIC_LAB_H_

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dnsexfil/dns_record.h"
#include "dnsexfil/labels.h"
#include "dnsexfil/public_suffix.h"
#include "dnsexfil/random.h"

namespace dnsexfil {

// Zipf distribution over {1, ..., n} with P(k) proportional to k^-s, sampled
// by rejection-inversion (Hormann and Derflinger) without tables.
class ZipfSampler {
 public:
  ZipfSampler(uint64_t n, double s);
  uint64_t Sample(Rng& rng) const;
  uint64_t n() const { return n_; }
  double exponent() const { return s_; }

 private:
  double H(double x) const;
  double HIntegral(double x) const;
  double HIntegralInverse(double x) const;

  uint64_t n_;
  double s_;
  double h_integral_x1_;
  double h_integral_n_;
  double shortcut_;
};

enum class DomainKind {
  // Web sites: a small, heavily repeated set of host names.
  kSite,
  // Content delivery: many machine-generated host names, still repeated.
  kCdn,
  // Mail and directory services: MX, TXT and SRV lookups.
  kService,
  // Legitimate lookup services that encode data in query names (reputation
  // lists, signature lookups). These are the benign look-alikes of
  // exfiltration.
  kDataExchange,
};

std::string_view DomainKindName(DomainKind kind);

struct CatalogDomain {
  // Registrable domain, lowercase with trailing dot.
  std::string name;
  DomainKind kind = DomainKind::kSite;
  // Number of distinct host names the domain serves; 0 means unbounded.
  uint32_t vocabulary = 0;
  // Zipf exponent for host-name reuse.
  double reuse_exponent = 1.0;
  double nxdomain_rate = 0.0;
  // Data-exchange domains: share of lookups with a key not seen before.
  double fresh_key_rate = 0.0;
  // Per-domain seed for host-name generation.
  uint64_t seed = 0;
};

// Fixed set of benign domains ordered by popularity rank (index 0 is the most
// popular). Built deterministically from a seed so training and evaluation
// corpora see the same population.
class DomainCatalog {
 public:
  static constexpr size_t kDefaultSize = 10000;
  static constexpr uint64_t kDefaultSeed = 20171106;

  static DomainCatalog Build(uint64_t seed, size_t size, const PublicSuffixList& suffixes);

  const std::vector<CatalogDomain>& domains() const { return domains_; }
  size_t size() const { return domains_.size(); }
  // All catalog domains labeled benign.
  LabelMap Labels() const;

 private:
  std::vector<CatalogDomain> domains_;
};

// Pull-based record stream in non-decreasing timestamp order.
class RecordSource {
 public:
  virtual ~RecordSource() = default;
  virtual std::optional<DnsLogRecord> Next() = 0;
  // Ground truth for every domain this source can emit.
  virtual const LabelMap& labels() const = 0;
};

struct BenignConfig {
  uint64_t seed = 1;
  int64_t start_ms = 0;
  double duration_s = 86400.0;
  // Aggregate query rate is n_users * per_user_qps, modulated by a daily
  // cycle whose mean is 1.
  uint32_t n_users = 2000;
  double per_user_qps = 0.0125;
  double diurnal_amplitude = 0.25;
  // Zipf exponent of domain popularity.
  double popularity_exponent = 1.0;
  // Share of web lookups sent as an A and AAAA pair for the same name.
  double dual_stack_rate = 0.5;
  // Share of mail and directory lookups repeated by a second client.
  double service_retry_rate = 0.5;
};

// Stand-in for resolver logs of an enterprise network.
std::unique_ptr<RecordSource> GenerateBenign(const BenignConfig& config,
                                             const DomainCatalog& catalog);

enum class JitterModel {
  // Exponential inter-arrival times (Poisson process).
  kPoisson,
  // Period times a factor drawn uniformly from [1 - f, 1 + f].
  kUniform,
};

struct SimulationProfile {
  SubjectTag tag = SubjectTag::kFrameworkPos;
  // Registrable domain, lowercase with trailing dot.
  std::string domain;
  // Name appended to every payload, e.g. "z.teriava.com.".
  std::string zone;
  double mean_qps = 1.0;
  JitterModel jitter = JitterModel::kPoisson;
  double jitter_fraction = 0.0;
  RrType rrtype = RrType::kA;
  double duration_s = 3600.0;
  int64_t start_ms = 0;
  // Raw bytes to transfer; 0 means rate-limited by duration only.
  uint64_t payload_bytes = 0;
};

// Profiles of the four evaluated subjects starting at `start_ms`.
SimulationProfile FrameworkPosProfile(int64_t start_ms, double duration_s = 6 * 3600.0);
SimulationProfile DenisProfile(int64_t start_ms, double duration_s = 6 * 3600.0);
SimulationProfile IodineProfile(int64_t start_ms, double duration_s = 3600.0);
SimulationProfile Dns2tcpProfile(int64_t start_ms);
SimulationProfile DefaultProfile(SubjectTag tag, int64_t start_ms);

// Query stream of one subject. Payload encodings:
//  frameworkpos: base64url of XOR-masked 16-digit card numbers, type A;
//  denis: 33-character beacon (fixed prefix, encoded session block, three
//         anti-cache characters), type NULL, every 1.5 s +-10%;
//  iodine: 100-200 mixed-case characters of encoded data in labels of at
//          most 57 characters, type NULL (TXT for a share of queries);
//  dns2tcp: consecutive 150-byte chunks of the payload as base64url, TXT.
std::unique_ptr<RecordSource> GenerateSubject(const SimulationProfile& profile, uint64_t seed);

// Stable time-ordered merge: ties go to the source listed first. Throws
// Error(kLabelConflict) if two sources label a domain differently.
std::unique_ptr<RecordSource> MergeSources(std::vector<std::unique_ptr<RecordSource>> sources);

struct LabeledCorpus {
  std::vector<DnsLogRecord> records;
  LabelMap labels;
};

LabeledCorpus Materialize(RecordSource& source);

// In-memory forms of the generators for small corpora and tests.
LabeledCorpus GenBenign(const BenignConfig& config, const DomainCatalog& catalog);
LabeledCorpus InjectFrameworkPos(const LabeledCorpus& corpus, uint64_t seed,
                                 const SimulationProfile& profile);
LabeledCorpus InjectDenis(const LabeledCorpus& corpus, uint64_t seed,
                          const SimulationProfile& profile);
LabeledCorpus InjectIodine(const LabeledCorpus& corpus, uint64_t seed,
                           const SimulationProfile& profile);
LabeledCorpus InjectDns2tcp(const LabeledCorpus& corpus, uint64_t seed,
                            const SimulationProfile& profile);
LabeledCorpus MergeCorpora(const std::vector<LabeledCorpus>& corpora);

// A benign day with the four subjects injected at fixed, non-overlapping
// times (start offsets from the first record, seconds).
struct ScenarioConfig {
  BenignConfig benign;
  uint64_t catalog_seed = DomainCatalog::kDefaultSeed;
  size_t catalog_size = DomainCatalog::kDefaultSize;
  bool inject_subjects = true;
  double frameworkpos_offset_s = 2 * 3600 + 300;
  double denis_offset_s = 9 * 3600 + 300;
  double iodine_offset_s = 16 * 3600 + 300;
  double dns2tcp_offset_s = 19 * 3600 + 300;
};

std::vector<SimulationProfile> ScenarioProfiles(const ScenarioConfig& config);
std::unique_ptr<RecordSource> GenerateScenario(const ScenarioConfig& config,
                                               const DomainCatalog& catalog);

// "<dir>/<stem>.labels.csv" for a corpus at "<dir>/<stem>.<ext>[.gz]".
std::string LabelsPathFor(const std::string& corpus_path);

struct CorpusSummary {
  uint64_t records = 0;
  uint64_t nxdomain = 0;
  int64_t first_ms = 0;
  int64_t last_ms = 0;
  LabelMap labels;
};

// Streams `source` into `path` (format from the extension) and writes the
// labels sidecar next to it.
CorpusSummary WriteCorpus(RecordSource& source, const std::string& path);

}  // namespace dnsexfil

#endif  // DNSEXFIL_TRAFFIC_LAB_H_
