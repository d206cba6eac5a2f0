#pragma once

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <functional>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "pvdaq/civil_time.hpp"
#include "pvdaq/frame.hpp"
#include "pvdaq/result.hpp"

namespace pvdaq {

enum class CsvError { HeaderMismatch, IoError, OutOfOrder, ParseError };

inline const char* csv_error_name(CsvError e) {
  switch (e) {
    case CsvError::HeaderMismatch: return "HEADER_MISMATCH";
    case CsvError::IoError: return "IO_ERROR";
    case CsvError::OutOfOrder: return "OUT_OF_ORDER";
    case CsvError::ParseError: return "PARSE_ERROR";
  }
  return "?";
}

// timestamp + the 34 archived fields, order fixed
inline std::string csv_header() {
  std::string h = "timestamp";
  for (int i = 0; i < kFieldCount; ++i) {
    h += ',';
    h += field_name(static_cast<Field>(i));
  }
  return h;
}

inline std::string csv_row(const MeasurementFrame& frame) {
  std::string row = format_iso(frame.timestamp);
  for (int i = 0; i < kFieldCount; ++i) {
    row += ',';
    const Field f = static_cast<Field>(i);
    if (frame.is_valid(f)) row += format_field_value(f, frame.value(f));
  }
  return row;
}

struct CsvRow {
  TimeMs timestamp = 0;
  std::array<std::optional<double>, kFieldCount> cells;
  std::array<std::string, kFieldCount> raw;
};

struct ParsedCsv {
  std::filesystem::path path;
  std::vector<CsvRow> rows;
};

// Full-file parse used by recovery integrity checks, the health check and
// the consistency verifier. Any malformed line fails the parse with its
// line number.
inline Result<ParsedCsv, std::string> parse_csv_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) return std::string("cannot open " + path.string());
  ParsedCsv out;
  out.path = path;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1) {
      if (line != csv_header())
        return std::string("line 1: header mismatch");
      continue;
    }
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.push_back("");
    if (cells.size() != kFieldCount + 1)
      return std::string("line " + std::to_string(line_no) + ": expected " +
                         std::to_string(kFieldCount + 1) + " cells, got " +
                         std::to_string(cells.size()));
    CsvRow row;
    auto ts = parse_iso(cells[0]);
    if (!ts)
      return std::string("line " + std::to_string(line_no) + ": bad timestamp " + cells[0]);
    row.timestamp = *ts;
    for (int i = 0; i < kFieldCount; ++i) {
      const std::string& c = cells[i + 1];
      row.raw[i] = c;
      if (c.empty()) continue;
      try {
        size_t used = 0;
        row.cells[i] = std::stod(c, &used);
        if (used != c.size()) throw std::invalid_argument(c);
      } catch (...) {
        return std::string("line " + std::to_string(line_no) + ": bad number in " +
                           std::string(field_name(static_cast<Field>(i))));
      }
    }
    out.rows.push_back(std::move(row));
  }
  return out;
}

// Daily-rotated archive file. Appends are flushed and fsynced before they
// return, so an abrupt power loss never takes a reported row with it.
class DailyCsv {
 public:
  enum class OpenMode {
    AppendOrCreate,  // same-day resume: append when header matches
    ForceNew,        // fresh session: never touch an existing file
  };

  DailyCsv() = default;
  DailyCsv(DailyCsv&& other) noexcept { *this = std::move(other); }
  DailyCsv& operator=(DailyCsv&& other) noexcept {
    if (this != &other) {
      close();
      fd_ = other.fd_;
      other.fd_ = -1;
      path_ = std::move(other.path_);
      rows_ = other.rows_;
      last_timestamp_ = other.last_timestamp_;
      fail_hook_ = std::move(other.fail_hook_);
    }
    return *this;
  }

  static std::filesystem::path base_path(const std::filesystem::path& dir, TimeMs date) {
    return dir / ("data_" + format_date_compact(date) + ".csv");
  }

  static Result<DailyCsv, CsvError> open(const std::filesystem::path& dir, TimeMs date,
                                         OpenMode mode) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    std::filesystem::path target = base_path(dir, date);

    if (mode == OpenMode::ForceNew) {
      for (int suffix = 1; std::filesystem::exists(target); ++suffix)
        target = dir / ("data_" + format_date_compact(date) + "_" +
                        std::to_string(suffix) + ".csv");
      return create_new(target);
    }

    if (!std::filesystem::exists(target)) return create_new(target);

    // existing file: adopt it if the schema matches, never rewrite bytes
    auto parsed = parse_csv_file(target);
    if (!parsed.ok()) {
      std::ifstream probe(target);
      std::string first;
      std::getline(probe, first);
      if (!first.empty() && first.back() == '\r') first.pop_back();
      if (first != csv_header()) return CsvError::HeaderMismatch;
      return CsvError::ParseError;
    }
    DailyCsv csv;
    csv.path_ = target;
    csv.rows_ = parsed.value().rows.size();
    if (!parsed.value().rows.empty())
      csv.last_timestamp_ = parsed.value().rows.back().timestamp;
    csv.fd_ = ::open(target.c_str(), O_WRONLY | O_APPEND | O_CLOEXEC);
    if (csv.fd_ < 0) return CsvError::IoError;
    return csv;
  }

  ~DailyCsv() { close(); }

  bool is_open() const { return fd_ >= 0; }
  const std::filesystem::path& path() const { return path_; }
  size_t rows_written() const { return rows_; }
  std::optional<TimeMs> last_timestamp() const { return last_timestamp_; }

  // One row per frame, durable before return; returns total data rows.
  Result<size_t, CsvError> append(const MeasurementFrame& frame) {
    if (fd_ < 0) return CsvError::IoError;
    if (last_timestamp_ && frame.timestamp <= *last_timestamp_)
      throw std::logic_error("frame timestamps must be strictly increasing");
    if (fail_hook_ && fail_hook_()) return CsvError::IoError;
    const std::string row = csv_row(frame) + "\n";
    if (!write_all(row)) return CsvError::IoError;
    if (::fsync(fd_) != 0) return CsvError::IoError;
    ++rows_;
    last_timestamp_ = frame.timestamp;
    return rows_;
  }

  void close() {
    if (fd_ >= 0) {
      ::close(fd_);
      fd_ = -1;
    }
  }

  // test seam for exercising the IO_ERROR retention path
  void set_fail_hook(std::function<bool()> hook) { fail_hook_ = std::move(hook); }

 private:
  static Result<DailyCsv, CsvError> create_new(const std::filesystem::path& target) {
    const int fd =
        ::open(target.c_str(), O_WRONLY | O_CREAT | O_EXCL | O_CLOEXEC, 0644);
    if (fd < 0) return CsvError::IoError;
    DailyCsv csv;
    csv.fd_ = fd;
    csv.path_ = target;
    const std::string header = csv_header() + "\n";
    if (!csv.write_all(header) || ::fsync(fd) != 0) {
      csv.close();
      return CsvError::IoError;
    }
    return csv;
  }

  bool write_all(const std::string& data) {
    size_t done = 0;
    while (done < data.size()) {
      const ssize_t n = ::write(fd_, data.data() + done, data.size() - done);
      if (n < 0) {
        if (errno == EINTR) continue;
        return false;
      }
      done += static_cast<size_t>(n);
    }
    return true;
  }

  int fd_ = -1;
  std::filesystem::path path_;
  size_t rows_ = 0;
  std::optional<TimeMs> last_timestamp_;
  std::function<bool()> fail_hook_;
};

// data_YYYYMMDD*.csv files in a directory, sorted by name (chronological)
inline std::vector<std::filesystem::path> list_archive_files(
    const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> out;
  std::error_code ec;
  for (const auto& entry : std::filesystem::directory_iterator(dir, ec)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (name.rfind("data_", 0) == 0 && name.size() > 4 &&
        name.substr(name.size() - 4) == ".csv")
      out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace pvdaq
