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

#include "dnsexfil/log_io.h"

#include <zlib.h>

#include <unistd.h>

#include <cstring>

#include "dnsexfil/error.h"

namespace dnsexfil {
namespace {

bool EndsWith(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

}  // namespace

LogFormat FormatForPath(const std::string& path) {
  std::string_view p(path);
  if (EndsWith(p, ".gz")) p.remove_suffix(3);
  if (EndsWith(p, ".jsonl") || EndsWith(p, ".ndjson") || EndsWith(p, ".json")) {
    return LogFormat::kJsonLines;
  }
  return LogFormat::kCsv;
}

struct LogReader::GzHandle {
  gzFile file = nullptr;
};

LogReader::LogReader(const std::string& path, LogFormat format)
    : handle_(std::make_unique<GzHandle>()), format_(format), path_(path) {
  // gzopen reads uncompressed files transparently.
  handle_->file = path == "-" ? gzdopen(dup(STDIN_FILENO), "rb") : gzopen(path.c_str(), "rb");
  if (handle_->file == nullptr) {
    throw Error(ErrorCode::kIoFailure, "cannot open " + path);
  }
  gzbuffer(handle_->file, 1 << 17);
}

LogReader::~LogReader() {
  if (handle_ && handle_->file != nullptr) gzclose(handle_->file);
}

bool LogReader::ReadLine(std::string* line) {
  line->clear();
  char buf[8192];
  while (gzgets(handle_->file, buf, sizeof(buf)) != nullptr) {
    const size_t n = std::strlen(buf);
    line->append(buf, n);
    if (n > 0 && buf[n - 1] == '\n') return true;
  }
  int err = Z_OK;
  gzerror(handle_->file, &err);
  if (err != Z_OK && err != Z_STREAM_END) {
    throw Error(ErrorCode::kIoFailure, "read error in " + path_);
  }
  return !line->empty();
}

std::optional<DnsLogRecord> LogReader::Next() {
  std::string line;
  while (ReadLine(&line)) {
    ++lines_read_;
    std::string_view view(line);
    while (!view.empty() && (view.back() == '\n' || view.back() == '\r')) {
      view.remove_suffix(1);
    }
    if (view.empty() || view.front() == '#') continue;
    if (format_ == LogFormat::kCsv && view.starts_with("ts,")) continue;
    try {
      return ParseLogLine(view, format_);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kEmptyQname) {
        ++empty_qnames_;
      } else {
        ++malformed_;
      }
    }
  }
  return std::nullopt;
}

struct LogWriter::GzHandle {
  gzFile file = nullptr;
};

LogWriter::LogWriter(const std::string& path, LogFormat format)
    : handle_(std::make_unique<GzHandle>()), format_(format), path_(path) {
  // "T" writes without compression through the same interface.
  const char* mode = EndsWith(path, ".gz") ? "wb6" : "wbT";
  handle_->file = gzopen(path.c_str(), mode);
  if (handle_->file == nullptr) {
    throw Error(ErrorCode::kIoFailure, "cannot create " + path);
  }
  gzbuffer(handle_->file, 1 << 17);
  if (format_ == LogFormat::kCsv) {
    WriteRaw(std::string(kCsvHeader) + "\n");
  }
}

LogWriter::~LogWriter() {
  if (handle_ && handle_->file != nullptr) gzclose(handle_->file);
}

void LogWriter::WriteRaw(const std::string& text) {
  if (text.empty()) return;
  const int written = gzwrite(handle_->file, text.data(), static_cast<unsigned>(text.size()));
  if (written != static_cast<int>(text.size())) {
    throw Error(ErrorCode::kIoFailure, "write failed for " + path_);
  }
}

void LogWriter::Write(const DnsLogRecord& record) {
  std::string line = FormatLogLine(record, format_);
  line.push_back('\n');
  WriteRaw(line);
}

void LogWriter::Close() {
  if (handle_->file != nullptr) {
    if (gzclose(handle_->file) != Z_OK) {
      handle_->file = nullptr;
      throw Error(ErrorCode::kIoFailure, "close failed for " + path_);
    }
    handle_->file = nullptr;
  }
}

}  // namespace dnsexfil
