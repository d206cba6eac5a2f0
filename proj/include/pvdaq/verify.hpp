#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "pvdaq/csv_store.hpp"
#include "pvdaq/frame.hpp"

namespace pvdaq {

// Cross-check of the two redundant stores: every valid CSV cell must appear
// in the sink export with the same value and timestamp, and vice versa.
struct VerifyReport {
  std::uint64_t csv_rows = 0;
  std::uint64_t csv_values = 0;
  std::uint64_t sink_points = 0;
  std::vector<std::string> mismatches;   // "<iso ts> <field>: <what>"
  std::vector<std::string> parse_errors;

  bool ok() const { return mismatches.empty() && parse_errors.empty(); }
};

namespace detail_verify {

// (epoch second, field name) -> serialized value
using PointMap = std::map<std::pair<std::int64_t, std::string>, std::string>;

inline bool parse_sink_line(const std::string& line, PointMap& out, std::string& error) {
  // measurement[,tag=value] field=value[,field=value] timestamp
  const auto last_space = line.rfind(' ');
  if (last_space == std::string::npos) {
    error = "missing timestamp";
    return false;
  }
  const auto first_space = line.find(' ');
  if (first_space == last_space) {
    error = "missing field set";
    return false;
  }
  std::int64_t ts = 0;
  try {
    ts = std::stoll(line.substr(last_space + 1));
  } catch (...) {
    error = "bad timestamp";
    return false;
  }

  const std::string head = line.substr(0, first_space);
  const std::string fields = line.substr(first_space + 1, last_space - first_space - 1);

  std::string measurement = head;
  std::map<std::string, std::string> tags;
  {
    std::istringstream hs(head);
    std::string part;
    bool first = true;
    while (std::getline(hs, part, ',')) {
      if (first) {
        measurement = part;
        first = false;
        continue;
      }
      const auto eq = part.find('=');
      if (eq == std::string::npos) {
        error = "bad tag: " + part;
        return false;
      }
      tags[part.substr(0, eq)] = part.substr(eq + 1);
    }
  }

  std::istringstream fs(fields);
  std::string pair;
  while (std::getline(fs, pair, ',')) {
    const auto eq = pair.find('=');
    if (eq == std::string::npos) {
      error = "bad field: " + pair;
      return false;
    }
    const std::string key = pair.substr(0, eq);
    const std::string value = pair.substr(eq + 1);

    std::string column;
    if (measurement == "pv_electrical") {
      if (!tags.count("panel")) {
        error = "pv_electrical line without panel tag";
        return false;
      }
      column = "p" + tags["panel"] + "_" + key;
    } else if (measurement == "pv_thermal") {
      if (!tags.count("sensor") || key != "temp") {
        error = "pv_thermal line without sensor tag";
        return false;
      }
      column = tags["sensor"];
    } else if (measurement == "weather") {
      column = key;
    } else {
      error = "unknown measurement: " + measurement;
      return false;
    }
    out[{ts, column}] = value;
  }
  return true;
}

}  // namespace detail_verify

inline VerifyReport verify_consistency(const std::filesystem::path& csv_dir,
                                       const std::filesystem::path& sink_export) {
  VerifyReport report;
  detail_verify::PointMap csv_points;
  detail_verify::PointMap sink_points;

  for (const auto& file : list_archive_files(csv_dir)) {
    auto parsed = parse_csv_file(file);
    if (!parsed.ok()) {
      report.parse_errors.push_back(file.string() + ": " + parsed.error());
      continue;
    }
    for (const auto& row : parsed.value().rows) {
      ++report.csv_rows;
      for (int i = 0; i < kFieldCount; ++i) {
        if (row.raw[i].empty()) continue;  // flagged fields are empty cells
        csv_points[{row.timestamp / kSecondMs, field_name(static_cast<Field>(i))}] =
            row.raw[i];
        ++report.csv_values;
      }
    }
  }

  {
    std::ifstream in(sink_export);
    if (!in) {
      report.parse_errors.push_back("cannot open sink export " + sink_export.string());
    } else {
      std::string line;
      int line_no = 0;
      while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::string error;
        if (!detail_verify::parse_sink_line(line, sink_points, error))
          report.parse_errors.push_back("sink line " + std::to_string(line_no) + ": " +
                                        error);
      }
    }
  }
  report.sink_points = sink_points.size();

  auto iso_of = [](std::int64_t epoch_s) { return format_iso(epoch_s * kSecondMs); };

  for (const auto& [key, value] : csv_points) {
    auto it = sink_points.find(key);
    if (it == sink_points.end()) {
      report.mismatches.push_back(iso_of(key.first) + " " + key.second +
                                  ": in CSV but missing from sink");
    } else if (it->second != value) {
      report.mismatches.push_back(iso_of(key.first) + " " + key.second + ": CSV=" +
                                  value + " sink=" + it->second);
    }
  }
  for (const auto& [key, value] : sink_points) {
    (void)value;
    if (!csv_points.count(key))
      report.mismatches.push_back(iso_of(key.first) + " " + key.second +
                                  ": in sink but missing from CSV");
  }
  return report;
}

}  // namespace pvdaq
