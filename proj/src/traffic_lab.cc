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

#include "dnsexfil/traffic_lab.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <queue>
#include <set>
#include <string_view>
#include <unordered_set>

#include "dnsexfil/bundled_data.h"
#include "dnsexfil/error.h"
#include "dnsexfil/log_io.h"

namespace dnsexfil {
namespace {

constexpr std::string_view kBase64Url =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789-_";
constexpr std::string_view kAlnum =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789";
constexpr std::string_view kLowerAlnum = "abcdefghijklmnopqrstuvwxyz0123456789";
constexpr std::string_view kHex = "0123456789abcdef";

std::string Base64Url(std::string_view bytes) {
  std::string out;
  out.reserve((bytes.size() * 4 + 2) / 3);
  size_t i = 0;
  for (; i + 3 <= bytes.size(); i += 3) {
    const uint32_t v = (uint32_t{static_cast<uint8_t>(bytes[i])} << 16) |
                       (uint32_t{static_cast<uint8_t>(bytes[i + 1])} << 8) |
                       static_cast<uint8_t>(bytes[i + 2]);
    out += kBase64Url[(v >> 18) & 63];
    out += kBase64Url[(v >> 12) & 63];
    out += kBase64Url[(v >> 6) & 63];
    out += kBase64Url[v & 63];
  }
  const size_t rest = bytes.size() - i;
  if (rest > 0) {
    uint32_t v = uint32_t{static_cast<uint8_t>(bytes[i])} << 16;
    if (rest == 2) v |= uint32_t{static_cast<uint8_t>(bytes[i + 1])} << 8;
    out += kBase64Url[(v >> 18) & 63];
    out += kBase64Url[(v >> 12) & 63];
    if (rest == 2) out += kBase64Url[(v >> 6) & 63];
  }
  return out;
}

std::string RandomString(Rng& rng, std::string_view alphabet, size_t n) {
  std::string out(n, ' ');
  for (char& c : out) c = alphabet[rng.UniformInt(alphabet.size())];
  return out;
}

std::string RandomBytes(Rng& rng, size_t n) {
  std::string out(n, '\0');
  for (char& c : out) c = static_cast<char>(rng.UniformInt(256));
  return out;
}

// Splits `data` into DNS labels of at most `max_label` characters.
std::string SplitLabels(std::string_view data, size_t max_label) {
  std::string out;
  for (size_t i = 0; i < data.size(); i += max_label) {
    if (!out.empty()) out += '.';
    out += data.substr(i, max_label);
  }
  return out;
}

std::string Join(std::string_view sub, std::string_view zone) {
  if (sub.empty()) return std::string(zone);
  std::string out;
  out.reserve(sub.size() + 1 + zone.size());
  out += sub;
  out += '.';
  out += zone;
  return out;
}

std::string Ipv4(uint64_t h) {
  return std::to_string(1 + (h & 0xff) % 223) + "." + std::to_string((h >> 8) & 0xff) + "." +
         std::to_string((h >> 16) & 0xff) + "." + std::to_string(1 + ((h >> 24) & 0xff) % 254);
}

std::string Ipv6(uint64_t h) {
  static constexpr std::string_view kHexDigits = "0123456789abcdef";
  std::string out = "2a00:";
  for (int group = 0; group < 3; ++group) {
    for (int d = 0; d < 4; ++d) out += kHexDigits[(h >> (group * 16 + d * 4)) & 0xf];
    out += ':';
  }
  out += ':';
  out += std::to_string((h >> 48) & 0xfff);
  return out;
}

uint64_t HashString(std::string_view s, uint64_t seed) {
  uint64_t h = seed ^ 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<uint8_t>(c);
    h *= 0x100000001b3ULL;
  }
  return SplitMix64(h);
}

std::vector<std::string> MakeResponses(RrType type, const std::string& qname,
                                       const std::string& domain, Rng& rng) {
  const uint64_t h = HashString(qname, 0x5eed);
  std::vector<std::string> out;
  switch (type) {
    case RrType::kA: {
      const int n = rng.Bernoulli(0.3) ? 1 + static_cast<int>(rng.UniformInt(3)) : 1;
      for (int i = 0; i < n; ++i) out.push_back(Ipv4(SplitMix64(h + i)));
      break;
    }
    case RrType::kAAAA:
      out.push_back(Ipv6(h));
      break;
    case RrType::kCNAME:
      out.push_back("edge-" + std::to_string(h % 97) + "." + domain);
      break;
    case RrType::kMX:
      out.push_back("10 mx1." + domain);
      out.push_back("20 mx2." + domain);
      break;
    case RrType::kTXT:
      out.push_back("v=spf1 include:_spf." + domain + " -all");
      break;
    case RrType::kSRV:
      out.push_back("0 5 443 srv" + std::to_string(h % 4) + "." + domain);
      break;
    case RrType::kNULL: {
      Rng local(h);
      out.push_back(RandomString(local, kHex, 32 + 2 * (h % 32)));
      break;
    }
    case RrType::kPTR:
      out.push_back("host-" + std::to_string(h % 1000) + "." + domain);
      break;
    case RrType::kOther:
      break;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Catalog construction.

struct WeightedSuffix {
  std::string_view suffix;
  double weight;
};

constexpr std::array<WeightedSuffix, 18> kSuffixes = {{
    {"com", 0.50}, {"net", 0.11}, {"org", 0.07}, {"de", 0.05}, {"io", 0.03},
    {"co.uk", 0.03}, {"ru", 0.03}, {"com.au", 0.02}, {"fr", 0.02}, {"co.jp", 0.02},
    {"nl", 0.02}, {"it", 0.02}, {"com.br", 0.02}, {"info", 0.015}, {"app", 0.015},
    {"tv", 0.01}, {"cloud", 0.01}, {"edu", 0.01},
}};

constexpr std::array<std::string_view, 72> kSiteLabels = {
    "www",     "mail",     "m",        "api",      "cdn",      "static",  "img",
    "images",  "login",    "accounts", "shop",     "blog",     "news",    "video",
    "assets",  "auth",     "secure",   "app",      "apps",     "support", "help",
    "docs",    "media",    "ads",      "track",    "metrics",  "s",       "edge",
    "content", "update",   "download", "portal",   "my",       "dev",     "status",
    "webmail", "search",   "store",    "cloud",    "files",    "photos",  "maps",
    "play",    "music",    "live",     "chat",     "id",       "sso",     "pay",
    "checkout", "cart",    "forum",    "wiki",     "careers",  "events",  "partners",
    "mobile",  "beacon",   "stats",    "push",     "notify",   "sync",    "config",
    "telemetry", "player", "origin",   "gateway",  "connect",  "signin",  "community",
    "learn",   "office",
};

constexpr std::array<std::string_view, 12> kRegions = {
    "eu", "us", "ap", "us-east", "eu-west", "uk", "de", "fr", "jp", "sg", "br", "au",
};

constexpr std::array<std::string_view, 20> kServiceLabels = {
    "",
    "mail",
    "smtp",
    "mx1",
    "mx2",
    "autodiscover",
    "_dmarc",
    "selector1._domainkey",
    "selector2._domainkey",
    "google._domainkey",
    "_sip._tls",
    "_sipfederationtls._tcp",
    "_ldap._tcp.dc._msdcs",
    "_kerberos._udp",
    "_autodiscover._tcp",
    "_imaps._tcp",
    "_submission._tcp",
    "lyncdiscover",
    "enterpriseregistration",
    "_caldavs._tcp",
};

std::vector<std::string_view> ShortWords() {
  std::vector<std::string_view> words;
  const std::string_view text = BundledWordlistText();
  size_t pos = 0;
  while (pos < text.size()) {
    size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view w = text.substr(pos, end - pos);
    while (!w.empty() && (w.back() == '\r' || w.back() == ' ')) w.remove_suffix(1);
    if (w.size() >= 3 && w.size() <= 7) words.push_back(w);
    pos = end + 1;
  }
  return words;
}

std::string_view PickSuffix(Rng& rng) {
  double total = 0.0;
  for (const auto& s : kSuffixes) total += s.weight;
  double u = rng.Uniform() * total;
  for (const auto& s : kSuffixes) {
    if (u < s.weight) return s.suffix;
    u -= s.weight;
  }
  return kSuffixes.front().suffix;
}

std::string MakeBrand(Rng& rng, const std::vector<std::string_view>& words) {
  const std::string_view a = words[rng.UniformInt(words.size())];
  const double u = rng.Uniform();
  if (u < 0.45) return std::string(a);
  const std::string_view b = words[rng.UniformInt(words.size())];
  if (u < 0.80) return std::string(a) + std::string(b);
  if (u < 0.92) return std::string(a) + "-" + std::string(b);
  return std::string(a) + std::to_string(rng.UniformInt(100));
}

double LogUniform(Rng& rng, double lo, double hi) {
  return std::exp(std::log(lo) + rng.Uniform() * (std::log(hi) - std::log(lo)));
}

// ---------------------------------------------------------------------------
// Host names and query types per domain kind.

// Data-exchange domains come in five styles keyed by seed.
enum class ExchangeStyle { kReversedIp, kBlocklist, kHashLookup, kTelemetry, kSignature };

ExchangeStyle StyleOf(const CatalogDomain& d) {
  return static_cast<ExchangeStyle>(d.seed % 5);
}

std::string SiteHost(const CatalogDomain& d, uint64_t index) {
  if (index == 0) return "";
  if (index == 1) return "www";
  Rng rng(DeriveSeed(d.seed, index));
  std::string label(kSiteLabels[rng.UniformInt(kSiteLabels.size())]);
  if (rng.Bernoulli(0.4)) label += std::to_string(1 + rng.UniformInt(20));
  if (rng.Bernoulli(0.4)) {
    label = std::string(kRegions[rng.UniformInt(kRegions.size())]) + "." + label;
  }
  if (rng.Bernoulli(0.25)) {
    label = label + "-" + std::string(kSiteLabels[rng.UniformInt(kSiteLabels.size())]);
  }
  return label;
}

std::string CdnHost(const CatalogDomain& d, uint64_t index) {
  Rng rng(DeriveSeed(d.seed, index));
  switch (SplitMix64(d.seed) % 5) {
    case 0:
      return "e" + std::to_string(1000 + rng.UniformInt(90000)) + "." +
             std::string(1, "abgx"[rng.UniformInt(4)]) + ".dsc" +
             std::string(1, "abcdgx"[rng.UniformInt(6)]);
    case 1:
      return "d" + RandomString(rng, kHex, 12 + rng.UniformInt(3)) + "." +
             std::string(kRegions[rng.UniformInt(kRegions.size())]);
    case 2:
      return "r" + std::to_string(1 + rng.UniformInt(9)) + "---sn-" +
             RandomString(rng, kLowerAlnum, 8) + "-" + RandomString(rng, kLowerAlnum, 4);
    case 3:
      return "a" + std::to_string(1 + rng.UniformInt(250)) + "-" +
             std::to_string(rng.UniformInt(256)) + "-" + std::to_string(rng.UniformInt(256)) +
             "-" + std::to_string(rng.UniformInt(256)) + "-deploy";
    default:
      return RandomString(rng, kHex, 8) + "-" + RandomString(rng, kHex, 4) + "-" +
             RandomString(rng, kHex, 4);
  }
}

std::string ServiceHost(const CatalogDomain& d, uint64_t index) {
  Rng rng(DeriveSeed(d.seed, index));
  return std::string(kServiceLabels[index < kServiceLabels.size()
                                        ? index
                                        : rng.UniformInt(kServiceLabels.size())]);
}

std::string ExchangeHost(const CatalogDomain& d, uint64_t key) {
  Rng rng(DeriveSeed(d.seed, key));
  auto octet = [&] { return std::to_string(rng.UniformInt(256)); };
  switch (StyleOf(d)) {
    case ExchangeStyle::kReversedIp:
      return octet() + "." + octet() + "." + octet() + "." + octet() + ".ip." +
             std::to_string(10 + rng.UniformInt(10)).substr(0, 2) + ".s";
    case ExchangeStyle::kBlocklist:
      return octet() + "." + octet() + "." + octet() + "." + octet() + ".zen";
    case ExchangeStyle::kHashLookup:
      return RandomString(rng, kHex, 16) + ".v" + std::to_string(1 + rng.UniformInt(3));
    case ExchangeStyle::kTelemetry:
      return RandomString(rng, kHex, 8) + "-" + RandomString(rng, kHex, 4) + "-" +
             RandomString(rng, kHex, 4) + ".t";
    case ExchangeStyle::kSignature:
      return RandomString(rng, kHex, 16) + ".p";
  }
  return "";
}

RrType PickType(const CatalogDomain& d, std::string_view host, Rng& rng) {
  const double u = rng.Uniform();
  switch (d.kind) {
    case DomainKind::kSite:
    case DomainKind::kCdn:
      return u < 0.70 ? RrType::kA : RrType::kAAAA;
    case DomainKind::kService:
      if (host.empty()) return u < 0.5 ? RrType::kMX : (u < 0.8 ? RrType::kTXT : RrType::kA);
      if (host.find("_domainkey") != std::string_view::npos || host == "_dmarc") {
        return RrType::kTXT;
      }
      if (host.front() == '_') return RrType::kSRV;
      return u < 0.7 ? RrType::kA : RrType::kAAAA;
    case DomainKind::kDataExchange:
      switch (StyleOf(d)) {
        case ExchangeStyle::kReversedIp: return RrType::kA;
        case ExchangeStyle::kBlocklist: return u < 0.95 ? RrType::kA : RrType::kTXT;
        case ExchangeStyle::kHashLookup:
        case ExchangeStyle::kSignature: return u < 0.97 ? RrType::kA : RrType::kTXT;
        case ExchangeStyle::kTelemetry:
          return u < 0.6 ? RrType::kA : (u < 0.97 ? RrType::kAAAA : RrType::kTXT);
      }
  }
  return RrType::kA;
}

// ---------------------------------------------------------------------------
// Sources.

class BenignSource : public RecordSource {
 public:
  BenignSource(const BenignConfig& config, const DomainCatalog& catalog)
      : config_(config),
        catalog_(catalog),
        rng_(DeriveSeed(config.seed, 0xbe9)),
        popularity_(std::max<size_t>(catalog.size(), 1), config.popularity_exponent),
        labels_(catalog.Labels()) {
    if (catalog.size() == 0) throw Error(ErrorCode::kInvalidConfig, "empty domain catalog");
    if (config.n_users == 0 || !(config.per_user_qps > 0.0)) {
      throw Error(ErrorCode::kInvalidConfig, "benign traffic needs a positive query rate");
    }
    base_rate_ = config.n_users * config.per_user_qps;
    max_rate_ = base_rate_ * (1.0 + std::abs(config.diurnal_amplitude));
    reuse_.reserve(catalog.size());
    for (const CatalogDomain& d : catalog.domains()) {
      reuse_.emplace_back(d.vocabulary == 0 ? 1000 : d.vocabulary, d.reuse_exponent);
    }
  }

  std::optional<DnsLogRecord> Next() override {
    if (pending_) {
      DnsLogRecord r = std::move(*pending_);
      pending_.reset();
      return r;
    }
    // Non-homogeneous Poisson arrivals by thinning.
    while (true) {
      t_ += rng_.Exponential(max_rate_);
      if (t_ >= config_.duration_s) return std::nullopt;
      const double abs_s = config_.start_ms / 1000.0 + t_;
      const double tod = std::fmod(abs_s, 86400.0) / 86400.0;
      const double rate =
          base_rate_ * (1.0 + config_.diurnal_amplitude *
                                  std::cos(2.0 * std::numbers::pi * (tod - 14.0 / 24.0)));
      if (rng_.Uniform() * max_rate_ <= rate) break;
    }
    const size_t rank = popularity_.Sample(rng_) - 1;
    const CatalogDomain& d = catalog_.domains()[rank];
    uint64_t index = reuse_[rank].Sample(rng_) - 1;
    if (d.kind == DomainKind::kDataExchange && rng_.Bernoulli(d.fresh_key_rate)) {
      index = rng_.NextU64();  // a fresh lookup key
    }
    std::string host;
    switch (d.kind) {
      case DomainKind::kSite: host = SiteHost(d, index); break;
      case DomainKind::kCdn: host = CdnHost(d, index); break;
      case DomainKind::kService: host = ServiceHost(d, index); break;
      case DomainKind::kDataExchange: host = ExchangeHost(d, index); break;
    }
    DnsLogRecord r;
    r.qname = Join(host, d.name);
    r.rrtype = PickType(d, host, rng_);
    r.ts_ms = config_.start_ms + static_cast<int64_t>(std::floor(t_ * 1000.0));
    if (!rng_.Bernoulli(d.nxdomain_rate)) r.responses = MakeResponses(r.rrtype, r.qname, d.name, rng_);
    const bool address = r.rrtype == RrType::kA || r.rrtype == RrType::kAAAA;
    if (address && (d.kind == DomainKind::kSite || d.kind == DomainKind::kCdn) &&
        rng_.Bernoulli(config_.dual_stack_rate)) {
      DnsLogRecord twin = r;
      twin.rrtype = r.rrtype == RrType::kA ? RrType::kAAAA : RrType::kA;
      if (!r.responses.empty()) twin.responses = MakeResponses(twin.rrtype, r.qname, d.name, rng_);
      pending_ = std::move(twin);
    } else if (d.kind == DomainKind::kService && rng_.Bernoulli(config_.service_retry_rate)) {
      pending_ = r;
    }
    return r;
  }

  const LabelMap& labels() const override { return labels_; }

 private:
  BenignConfig config_;
  const DomainCatalog& catalog_;
  Rng rng_;
  ZipfSampler popularity_;
  std::vector<ZipfSampler> reuse_;
  LabelMap labels_;
  double base_rate_ = 0.0;
  double max_rate_ = 0.0;
  double t_ = 0.0;
  std::optional<DnsLogRecord> pending_;
};

class SubjectSource : public RecordSource {
 public:
  SubjectSource(const SimulationProfile& profile, uint64_t seed)
      : profile_(profile), rng_(DeriveSeed(seed, 0x5ab)) {
    if (!(profile.mean_qps > 0.0)) throw Error(ErrorCode::kInvalidConfig, "mean_qps must be > 0");
    labels_.Set(profile.domain, profile.tag);
    key_ = RandomBytes(rng_, 4);
    machine_id_ = RandomBytes(rng_, 4);
    user_id_ = kHex[rng_.UniformInt(16)];
    if (profile.tag == SubjectTag::kDns2tcp) {
      file_ = RandomBytes(rng_, profile.payload_bytes == 0 ? 30 * 1024 : profile.payload_bytes);
    }
  }

  std::optional<DnsLogRecord> Next() override {
    if (profile_.tag == SubjectTag::kDns2tcp && offset_ >= file_.size()) return std::nullopt;
    t_ += Interval();
    if (profile_.tag != SubjectTag::kDns2tcp && t_ >= profile_.duration_s) return std::nullopt;
    DnsLogRecord r;
    r.ts_ms = profile_.start_ms + static_cast<int64_t>(std::floor(t_ * 1000.0));
    r.rrtype = profile_.rrtype;
    switch (profile_.tag) {
      case SubjectTag::kFrameworkPos: FrameworkPos(r); break;
      case SubjectTag::kDenis: Denis(r); break;
      case SubjectTag::kIodine: Iodine(r); break;
      case SubjectTag::kDns2tcp: Dns2tcp(r); break;
      case SubjectTag::kBenign: break;
    }
    ++sequence_;
    return r;
  }

  const LabelMap& labels() const override { return labels_; }

 private:
  double Interval() {
    const double period = 1.0 / profile_.mean_qps;
    if (profile_.jitter == JitterModel::kPoisson) return rng_.Exponential(profile_.mean_qps);
    const double f = profile_.jitter_fraction;
    return period * rng_.Uniform(1.0 - f, 1.0 + f);
  }

  void FrameworkPos(DnsLogRecord& r) {
    // A Luhn-valid card number, packed two digits per byte, XOR-masked and
    // base64url-encoded.
    std::string card = "4";
    for (int i = 0; i < 14; ++i) card += static_cast<char>('0' + rng_.UniformInt(10));
    int sum = 0;
    for (int i = 0; i < 15; ++i) {
      int digit = card[14 - i] - '0';
      if (i % 2 == 0) {
        digit *= 2;
        if (digit > 9) digit -= 9;
      }
      sum += digit;
    }
    card += static_cast<char>('0' + (10 - sum % 10) % 10);
    std::string packed(card.size() / 2, '\0');
    for (size_t i = 0; i < packed.size(); ++i) {
      const int hi = card[2 * i] - '0';
      const int lo = card[2 * i + 1] - '0';
      packed[i] = static_cast<char>(((hi << 4) | lo) ^ static_cast<uint8_t>(key_[i % key_.size()]));
    }
    r.qname = Join(Base64Url(packed), profile_.zone);
    r.responses = {"127.0.0.1"};
  }

  void Denis(DnsLogRecord& r) {
    // Fixed prefix, a session block (machine id, instruction, counter and
    // zero padding) and three anti-cache characters: 33 characters.
    std::string block = machine_id_;
    block += static_cast<char>(0x01);  // keep-alive instruction
    block += static_cast<char>((sequence_ >> 8) & 0xff);
    block += static_cast<char>(sequence_ & 0xff);
    block.append(11, '\0');
    std::string sub = "vL0Vug" + Base64Url(block).substr(0, 24) + RandomString(rng_, kAlnum, 3);
    r.qname = Join(sub, profile_.zone);
    r.responses = {RandomString(rng_, kHex, 48)};
  }

  void Iodine(DnsLogRecord& r) {
    const size_t n = 150 + rng_.UniformInt(71);
    std::string data;
    data += static_cast<char>("pqrstuvwxy"[rng_.UniformInt(10)]);
    data += user_id_;
    data += RandomString(rng_, kAlnum, n - 2);
    r.qname = Join(SplitLabels(data, 57), profile_.zone);
    r.rrtype = rng_.Bernoulli(0.85) ? RrType::kNULL : RrType::kTXT;
    r.responses = {RandomString(rng_, r.rrtype == RrType::kNULL ? kHex : kAlnum,
                                64 + rng_.UniformInt(128))};
  }

  void Dns2tcp(DnsLogRecord& r) {
    constexpr size_t kChunk = 150;
    const size_t n = std::min(kChunk, file_.size() - offset_);
    const std::string data = Base64Url(std::string_view(file_).substr(offset_, n));
    offset_ += n;
    r.qname = Join(SplitLabels(data, 63), profile_.zone);
    r.responses = {Base64Url(RandomBytes(rng_, 24))};
  }

  SimulationProfile profile_;
  Rng rng_;
  LabelMap labels_;
  std::string key_;
  std::string machine_id_;
  char user_id_ = '0';
  std::string file_;
  size_t offset_ = 0;
  uint64_t sequence_ = 0;
  double t_ = 0.0;
};

class MergedSource : public RecordSource {
 public:
  explicit MergedSource(std::vector<std::unique_ptr<RecordSource>> sources)
      : sources_(std::move(sources)) {
    for (const auto& s : sources_) labels_.Merge(s->labels());
    for (size_t i = 0; i < sources_.size(); ++i) Pull(i);
  }

  std::optional<DnsLogRecord> Next() override {
    if (heap_.empty()) return std::nullopt;
    const Head head = heap_.top();
    heap_.pop();
    DnsLogRecord out = std::move(*pending_[head.source]);
    pending_[head.source].reset();
    Pull(head.source);
    return out;
  }

  const LabelMap& labels() const override { return labels_; }

 private:
  struct Head {
    int64_t ts;
    size_t source;
    bool operator>(const Head& o) const {
      return ts != o.ts ? ts > o.ts : source > o.source;
    }
  };

  void Pull(size_t i) {
    if (pending_.size() < sources_.size()) pending_.resize(sources_.size());
    pending_[i] = sources_[i]->Next();
    if (pending_[i]) heap_.push({pending_[i]->ts_ms, i});
  }

  std::vector<std::unique_ptr<RecordSource>> sources_;
  std::vector<std::optional<DnsLogRecord>> pending_;
  std::priority_queue<Head, std::vector<Head>, std::greater<Head>> heap_;
  LabelMap labels_;
};

class VectorSource : public RecordSource {
 public:
  explicit VectorSource(const LabeledCorpus& corpus) : corpus_(corpus) {}
  std::optional<DnsLogRecord> Next() override {
    if (next_ >= corpus_.records.size()) return std::nullopt;
    return corpus_.records[next_++];
  }
  const LabelMap& labels() const override { return corpus_.labels; }

 private:
  const LabeledCorpus& corpus_;
  size_t next_ = 0;
};

LabeledCorpus Inject(const LabeledCorpus& corpus, uint64_t seed, const SimulationProfile& profile,
                     SubjectTag expected) {
  if (profile.tag != expected) {
    throw Error(ErrorCode::kInvalidConfig, "profile does not match the injected subject");
  }
  auto subject = GenerateSubject(profile, seed);
  return MergeCorpora({corpus, Materialize(*subject)});
}

}  // namespace

// ---------------------------------------------------------------------------

ZipfSampler::ZipfSampler(uint64_t n, double s) : n_(n), s_(s) {
  if (n == 0 || !(s > 0.0)) throw Error(ErrorCode::kInvalidConfig, "invalid Zipf parameters");
  h_integral_x1_ = HIntegral(1.5) - 1.0;
  h_integral_n_ = HIntegral(static_cast<double>(n) + 0.5);
  shortcut_ = 2.0 - HIntegralInverse(HIntegral(2.5) - H(2.0));
}

double ZipfSampler::H(double x) const { return std::exp(-s_ * std::log(x)); }

double ZipfSampler::HIntegral(double x) const {
  const double log_x = std::log(x);
  const double t = (1.0 - s_) * log_x;
  const double helper = std::abs(t) > 1e-8 ? std::expm1(t) / t : 1.0 + t / 2.0 * (1.0 + t / 3.0);
  return helper * log_x;
}

double ZipfSampler::HIntegralInverse(double x) const {
  double t = x * (1.0 - s_);
  if (t < -1.0) t = -1.0;
  const double helper =
      std::abs(t) > 1e-8 ? std::log1p(t) / t : 1.0 - t * (0.5 - t * (1.0 / 3.0 - 0.25 * t));
  return std::exp(helper * x);
}

uint64_t ZipfSampler::Sample(Rng& rng) const {
  while (true) {
    const double u = h_integral_n_ + rng.Uniform() * (h_integral_x1_ - h_integral_n_);
    const double x = HIntegralInverse(u);
    double kd = std::floor(x + 0.5);
    if (kd < 1.0) kd = 1.0;
    if (kd > static_cast<double>(n_)) kd = static_cast<double>(n_);
    if (kd - x <= shortcut_ || u >= HIntegral(kd + 0.5) - H(kd)) {
      return static_cast<uint64_t>(kd);
    }
  }
}

std::string_view DomainKindName(DomainKind kind) {
  switch (kind) {
    case DomainKind::kSite: return "site";
    case DomainKind::kCdn: return "cdn";
    case DomainKind::kService: return "service";
    case DomainKind::kDataExchange: return "data-exchange";
  }
  return "site";
}

DomainCatalog DomainCatalog::Build(uint64_t seed, size_t size, const PublicSuffixList& suffixes) {
  DomainCatalog catalog;
  Rng rng(DeriveSeed(seed, 0xca7));
  const std::vector<std::string_view> words = ShortWords();
  std::unordered_set<std::string> used = {"frameworkpos.com.", "teriava.com."};

  // A few popular data-exchange services, placed among the top ranks so they
  // are candidates in most windows.
  const size_t n_exchange = std::max<size_t>(1, size / 500);
  std::set<size_t> exchange_ranks;
  while (exchange_ranks.size() < std::min(n_exchange, size)) {
    exchange_ranks.insert(std::min(size - 1, 20 + rng.UniformInt(std::max<size_t>(size / 6, 1))));
  }

  size_t exchange_made = 0;
  catalog.domains_.reserve(size);
  for (size_t rank = 0; rank < size; ++rank) {
    CatalogDomain d;
    d.seed = DeriveSeed(seed, rank + 1);
    if (exchange_ranks.count(rank)) {
      d.kind = DomainKind::kDataExchange;
      d.vocabulary = 0;
      d.reuse_exponent = 1.0;
      d.nxdomain_rate = 0.4;
      // The first one serves file-signature lookups.
      const uint64_t style = exchange_made == 0 ? 4 : exchange_made % 4;
      d.seed = DeriveSeed(seed, rank + 1) / 5 * 5 + style;
      d.fresh_key_rate = 0.15;
    } else {
      // Large providers are CDN-heavy; the long tail is mostly plain sites.
      const double u = rng.Uniform();
      const double site_share = rank < 200 ? 0.12 : 0.42;
      const double cdn_share = rank < 200 ? 0.83 : 0.35;
      if (u < site_share) {
        d.kind = DomainKind::kSite;
        d.vocabulary = static_cast<uint32_t>(LogUniform(rng, 3, 60));
        d.reuse_exponent = 1.1;
        d.nxdomain_rate = 0.02;
      } else if (u < site_share + cdn_share) {
        d.kind = DomainKind::kCdn;
        d.vocabulary = static_cast<uint32_t>(LogUniform(rng, 30, 800));
        d.reuse_exponent = 0.8;
        d.nxdomain_rate = 0.01;
      } else {
        d.kind = DomainKind::kService;
        d.vocabulary = static_cast<uint32_t>(4 + rng.UniformInt(6));
        d.reuse_exponent = 1.0;
        d.nxdomain_rate = 0.05;
      }
    }
    while (true) {
      std::string name;
      if (d.kind == DomainKind::kDataExchange && exchange_made == 0) {
        name = "sophosxl.net";
      } else {
        std::string brand = MakeBrand(rng, words);
        if (d.kind == DomainKind::kDataExchange) {
          static constexpr std::array<std::string_view, 4> kTags = {"rep", "rbl", "avq", "tel"};
          brand += kTags[exchange_made % 4];
        }
        name = brand + "." + std::string(PickSuffix(rng));
      }
      const PrimaryDomain p = Prim(name, suffixes);
      if (!p.registrable || p.name != name + "." || !used.insert(p.name).second) continue;
      d.name = p.name;
      break;
    }
    if (d.kind == DomainKind::kDataExchange) ++exchange_made;
    catalog.domains_.push_back(std::move(d));
  }
  return catalog;
}

LabelMap DomainCatalog::Labels() const {
  LabelMap labels;
  for (const CatalogDomain& d : domains_) labels.Set(d.name, SubjectTag::kBenign);
  return labels;
}

std::unique_ptr<RecordSource> GenerateBenign(const BenignConfig& config,
                                             const DomainCatalog& catalog) {
  return std::make_unique<BenignSource>(config, catalog);
}

SimulationProfile FrameworkPosProfile(int64_t start_ms, double duration_s) {
  SimulationProfile p;
  p.tag = SubjectTag::kFrameworkPos;
  p.domain = "frameworkpos.com.";
  p.zone = "frameworkpos.com.";
  p.mean_qps = 3.0;
  p.jitter = JitterModel::kPoisson;
  p.rrtype = RrType::kA;
  p.duration_s = duration_s;
  p.start_ms = start_ms;
  return p;
}

SimulationProfile DenisProfile(int64_t start_ms, double duration_s) {
  SimulationProfile p;
  p.tag = SubjectTag::kDenis;
  p.domain = "teriava.com.";
  p.zone = "z.teriava.com.";
  p.mean_qps = 1.0 / 1.5;
  p.jitter = JitterModel::kUniform;
  p.jitter_fraction = 0.1;
  p.rrtype = RrType::kNULL;
  p.duration_s = duration_s;
  p.start_ms = start_ms;
  return p;
}

SimulationProfile IodineProfile(int64_t start_ms, double duration_s) {
  SimulationProfile p;
  p.tag = SubjectTag::kIodine;
  p.domain = "tunnelbridge.net.";
  p.zone = "t.tunnelbridge.net.";
  p.mean_qps = 20.0;
  p.jitter = JitterModel::kPoisson;
  p.rrtype = RrType::kNULL;
  p.duration_s = duration_s;
  p.start_ms = start_ms;
  return p;
}

SimulationProfile Dns2tcpProfile(int64_t start_ms) {
  SimulationProfile p;
  p.tag = SubjectTag::kDns2tcp;
  p.domain = "d2t-gateway.org.";
  p.zone = "ftp.d2t-gateway.org.";
  p.mean_qps = 1.5;
  p.jitter = JitterModel::kUniform;
  p.jitter_fraction = 0.1;
  p.rrtype = RrType::kTXT;
  p.payload_bytes = 30 * 1024;
  p.duration_s = std::ceil(p.payload_bytes / 150.0) / p.mean_qps;
  p.start_ms = start_ms;
  return p;
}

SimulationProfile DefaultProfile(SubjectTag tag, int64_t start_ms) {
  switch (tag) {
    case SubjectTag::kFrameworkPos: return FrameworkPosProfile(start_ms);
    case SubjectTag::kDenis: return DenisProfile(start_ms);
    case SubjectTag::kIodine: return IodineProfile(start_ms);
    case SubjectTag::kDns2tcp: return Dns2tcpProfile(start_ms);
    case SubjectTag::kBenign: break;
  }
  throw Error(ErrorCode::kInvalidConfig, "benign traffic has no subject profile");
}

std::unique_ptr<RecordSource> GenerateSubject(const SimulationProfile& profile, uint64_t seed) {
  if (profile.tag == SubjectTag::kBenign) {
    throw Error(ErrorCode::kInvalidConfig, "benign traffic has no subject profile");
  }
  return std::make_unique<SubjectSource>(profile, seed);
}

std::unique_ptr<RecordSource> MergeSources(std::vector<std::unique_ptr<RecordSource>> sources) {
  return std::make_unique<MergedSource>(std::move(sources));
}

LabeledCorpus Materialize(RecordSource& source) {
  LabeledCorpus corpus;
  while (auto r = source.Next()) corpus.records.push_back(std::move(*r));
  corpus.labels = source.labels();
  return corpus;
}

LabeledCorpus GenBenign(const BenignConfig& config, const DomainCatalog& catalog) {
  auto source = GenerateBenign(config, catalog);
  return Materialize(*source);
}

LabeledCorpus InjectFrameworkPos(const LabeledCorpus& corpus, uint64_t seed,
                                 const SimulationProfile& profile) {
  return Inject(corpus, seed, profile, SubjectTag::kFrameworkPos);
}

LabeledCorpus InjectDenis(const LabeledCorpus& corpus, uint64_t seed,
                          const SimulationProfile& profile) {
  return Inject(corpus, seed, profile, SubjectTag::kDenis);
}

LabeledCorpus InjectIodine(const LabeledCorpus& corpus, uint64_t seed,
                           const SimulationProfile& profile) {
  return Inject(corpus, seed, profile, SubjectTag::kIodine);
}

LabeledCorpus InjectDns2tcp(const LabeledCorpus& corpus, uint64_t seed,
                            const SimulationProfile& profile) {
  return Inject(corpus, seed, profile, SubjectTag::kDns2tcp);
}

LabeledCorpus MergeCorpora(const std::vector<LabeledCorpus>& corpora) {
  std::vector<std::unique_ptr<RecordSource>> sources;
  for (const LabeledCorpus& c : corpora) sources.push_back(std::make_unique<VectorSource>(c));
  MergedSource merged(std::move(sources));
  return Materialize(merged);
}

std::vector<SimulationProfile> ScenarioProfiles(const ScenarioConfig& config) {
  if (!config.inject_subjects) return {};
  const int64_t t0 = config.benign.start_ms;
  auto at = [t0](double offset_s) { return t0 + static_cast<int64_t>(offset_s * 1000.0); };
  return {FrameworkPosProfile(at(config.frameworkpos_offset_s)),
          DenisProfile(at(config.denis_offset_s)), IodineProfile(at(config.iodine_offset_s)),
          Dns2tcpProfile(at(config.dns2tcp_offset_s))};
}

std::unique_ptr<RecordSource> GenerateScenario(const ScenarioConfig& config,
                                               const DomainCatalog& catalog) {
  std::vector<std::unique_ptr<RecordSource>> sources;
  sources.push_back(GenerateBenign(config.benign, catalog));
  for (const SimulationProfile& p : ScenarioProfiles(config)) {
    sources.push_back(
        GenerateSubject(p, DeriveSeed(config.benign.seed, 100 + static_cast<uint64_t>(p.tag))));
  }
  return MergeSources(std::move(sources));
}

std::string LabelsPathFor(const std::string& corpus_path) {
  std::string base = corpus_path;
  if (base.size() > 3 && base.ends_with(".gz")) base.resize(base.size() - 3);
  const size_t slash = base.find_last_of('/');
  const size_t dot = base.find_last_of('.');
  if (dot != std::string::npos && (slash == std::string::npos || dot > slash + 1)) {
    base.resize(dot);
  }
  return base + ".labels.csv";
}

CorpusSummary WriteCorpus(RecordSource& source, const std::string& path) {
  CorpusSummary summary;
  LogWriter writer(path);
  while (auto r = source.Next()) {
    if (summary.records == 0) summary.first_ms = r->ts_ms;
    summary.last_ms = r->ts_ms;
    ++summary.records;
    if (r->responses.empty()) ++summary.nxdomain;
    writer.Write(*r);
  }
  writer.Close();
  summary.labels = source.labels();
  summary.labels.Save(LabelsPathFor(path));
  return summary;
}

}  // namespace dnsexfil
