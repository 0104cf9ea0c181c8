#pragma once

#include <array>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "servokit/errors.hpp"

namespace servokit {

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline double parse_double(std::string_view s, const std::string& where) {
  double out = 0.0;
  const char* end = s.data() + s.size();
  const auto res = std::from_chars(s.data(), end, out);
  if (res.ec != std::errc{} || res.ptr != end)
    throw ConfigError("invalid number '" + std::string(s) + "' for " + where);
  return out;
}

inline std::int64_t parse_int(std::string_view s, const std::string& where) {
  std::int64_t out = 0;
  const char* end = s.data() + s.size();
  const auto res = std::from_chars(s.data(), end, out);
  if (res.ec != std::errc{} || res.ptr != end)
    throw ConfigError("invalid integer '" + std::string(s) + "' for " + where);
  return out;
}

inline std::vector<std::string> split_list(std::string_view s, char sep = ',') {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    const auto next = s.find(sep, pos);
    const auto piece = next == std::string_view::npos ? s.substr(pos)
                                                      : s.substr(pos, next - pos);
    out.emplace_back(trim(piece));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return out;
}

}  // namespace detail

/// Line-oriented `key = value` settings with `#` comments. Values read from
/// a file can be overridden (command-line flags win); unknown keys are
/// rejected against an explicit registry.
class KeyValueConfig {
 public:
  KeyValueConfig() = default;

  static KeyValueConfig from_string(std::string_view text) {
    KeyValueConfig cfg;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
      const auto nl = text.find('\n', pos);
      auto line = nl == std::string_view::npos ? text.substr(pos)
                                               : text.substr(pos, nl - pos);
      ++line_no;
      const auto hash = line.find('#');
      if (hash != std::string_view::npos) line = line.substr(0, hash);
      const auto trimmed = detail::trim(line);
      if (!trimmed.empty()) {
        const auto eq = trimmed.find('=');
        if (eq == std::string_view::npos)
          throw ConfigError("config line " + std::to_string(line_no) +
                            ": expected 'key = value'");
        const auto key = detail::trim(trimmed.substr(0, eq));
        const auto value = detail::trim(trimmed.substr(eq + 1));
        if (key.empty())
          throw ConfigError("config line " + std::to_string(line_no) +
                            ": empty key");
        cfg.values_[std::string(key)] = std::string(value);
      }
      if (nl == std::string_view::npos) break;
      pos = nl + 1;
    }
    return cfg;
  }

  static KeyValueConfig from_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open config file: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_string(buf.str());
  }

  void set(const std::string& key, const std::string& value) {
    values_[key] = value;
  }

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  std::string get_string(const std::string& key,
                         const std::string& fallback) const {
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

  double get_double(const std::string& key, double fallback) const {
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : detail::parse_double(it->second, key);
  }

  std::int64_t get_int(const std::string& key, std::int64_t fallback) const {
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : detail::parse_int(it->second, key);
  }

  bool get_bool(const std::string& key, bool fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    if (it->second == "true" || it->second == "1") return true;
    if (it->second == "false" || it->second == "0") return false;
    throw ConfigError("invalid boolean '" + it->second + "' for " + key);
  }

  template <std::size_t N>
  std::array<double, N> get_vector(const std::array<double, N>& fallback,
                                   const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    const auto parts = detail::split_list(it->second);
    if (parts.size() != N)
      throw ConfigError(key + ": expected " + std::to_string(N) +
                        " comma-separated values");
    std::array<double, N> out{};
    for (std::size_t i = 0; i < N; ++i)
      out[i] = detail::parse_double(parts[i], key);
    return out;
  }

  /// Throws ConfigError naming the first key that is not in the registry.
  void reject_unknown_keys(const std::set<std::string>& allowed) const {
    for (const auto& [key, value] : values_) {
      if (!allowed.count(key))
        throw ConfigError("unknown config key: " + key);
    }
  }

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace servokit
