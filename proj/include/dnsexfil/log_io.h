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

#ifndef DNSEXFIL_LOG_IO_H_
#define DNSEXFIL_LOG_IO_H_

#include <cstdint>
#include <memory>
#include <optional>
#include <string>

#include "dnsexfil/dns_record.h"

namespace dnsexfil {

// ".jsonl", ".ndjson" and ".json" (optionally followed by ".gz") select JSON
// lines; everything else is CSV.
LogFormat FormatForPath(const std::string& path);

// Reads plain or gzip-compressed log files line by line. Malformed lines are
// counted and skipped rather than aborting the read. The path "-" reads
// standard input until it closes, so `tail -f` can feed a live log.
class LogReader {
 public:
  LogReader(const std::string& path, LogFormat format);
  explicit LogReader(const std::string& path) : LogReader(path, FormatForPath(path)) {}
  ~LogReader();
  LogReader(const LogReader&) = delete;
  LogReader& operator=(const LogReader&) = delete;

  // Returns std::nullopt at end of input.
  std::optional<DnsLogRecord> Next();

  uint64_t lines_read() const { return lines_read_; }
  uint64_t malformed() const { return malformed_; }
  uint64_t empty_qnames() const { return empty_qnames_; }

 private:
  bool ReadLine(std::string* line);

  struct GzHandle;
  std::unique_ptr<GzHandle> handle_;
  LogFormat format_;
  std::string path_;
  uint64_t lines_read_ = 0;
  uint64_t malformed_ = 0;
  uint64_t empty_qnames_ = 0;
};

// Writes log lines; a ".gz" suffix selects gzip compression. CSV output
// starts with the column header.
class LogWriter {
 public:
  LogWriter(const std::string& path, LogFormat format);
  explicit LogWriter(const std::string& path) : LogWriter(path, FormatForPath(path)) {}
  ~LogWriter();
  LogWriter(const LogWriter&) = delete;
  LogWriter& operator=(const LogWriter&) = delete;

  void Write(const DnsLogRecord& record);
  void Close();

 private:
  void WriteRaw(const std::string& text);

  struct GzHandle;
  std::unique_ptr<GzHandle> handle_;
  LogFormat format_;
  std::string path_;
};

}  // namespace dnsexfil

#endif  // DNSEXFIL_LOG_IO_H_
