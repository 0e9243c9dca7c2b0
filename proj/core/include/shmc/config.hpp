#pragma once

// Flat key = value run configuration. Values come from an optional file and
// from command-line flags; flags win. Every key read is echoed into run
// metadata, and keys no command understands are rejected up front.

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "shmc/core.hpp"

namespace shmc {

class RunConfig {
 public:
  RunConfig() = default;

  /// Parses `key = value` lines; `#` starts a comment. Keys use '_' or '-'.
  static RunConfig from_file(const std::filesystem::path& path);

  /// Later values override earlier ones.
  void set(const std::string& key, const std::string& value);
  void merge(const RunConfig& overrides);

  bool has(const std::string& key) const;
  /// Throws ConfigError naming the first key outside `allowed`.
  void check_keys(const std::set<std::string>& allowed) const;

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  std::uint64_t get_uint(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  /// Comma-separated numbers.
  std::vector<double> get_doubles(const std::string& key, const std::vector<double>& fallback) const;
  std::vector<std::string> get_strings(const std::string& key,
                                       const std::vector<std::string>& fallback) const;

  /// Resolved values of every key that was read, in key order.
  std::vector<std::pair<std::string, std::string>> echo() const;

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
  mutable std::map<std::string, std::string> used_;
};

/// Canonical key spelling: lower case, '-' replaced by '_'.
std::string normalize_key(std::string key);

}  // namespace shmc
