#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <string>
#include <system_error>
#include <vector>

#include "servokit/errors.hpp"

namespace servokit {

/// Shortest decimal form that round-trips to the same double. Keeps CSV
/// output byte-identical across platforms and re-readable without loss.
inline std::string format_double(double value) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

inline std::string format_int(long long value) {
  char buf[24];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

/// Split one CSV record on commas. Fields are plain (no quoting dialect);
/// surrounding whitespace is trimmed.
inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    std::string field = line.substr(
        start, comma == std::string::npos ? std::string::npos : comma - start);
    const auto a = field.find_first_not_of(" \t\r");
    const auto b = field.find_last_not_of(" \t\r");
    fields.push_back(a == std::string::npos ? std::string()
                                            : field.substr(a, b - a + 1));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return fields;
}

inline double csv_double(const std::string& field, const std::string& context) {
  double out = 0.0;
  const char* end = field.data() + field.size();
  const auto res = std::from_chars(field.data(), end, out);
  if (res.ec != std::errc{} || res.ptr != end)
    throw IoError("invalid number '" + field + "' in " + context);
  return out;
}

inline std::vector<std::string> read_text_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

inline void write_text_file(const std::string& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << body;
  if (!out) throw IoError("write failed for " + path);
}

}  // namespace servokit
