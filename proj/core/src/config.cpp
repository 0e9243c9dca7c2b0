#include "shmc/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>

#include "shmc/csv_io.hpp"

namespace shmc {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto pos = s.find(',', start);
    const std::string item = trim(s.substr(start, pos == std::string::npos ? std::string::npos : pos - start));
    if (!item.empty()) out.push_back(item);
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

double parse_double(const std::string& key, const std::string& text) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ConfigError("config: " + key + " expects a number, got '" + text + "'");
  }
  return v;
}

template <typename T>
T parse_integer(const std::string& key, const std::string& text) {
  T v{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ConfigError("config: " + key + " expects an integer, got '" + text + "'");
  }
  return v;
}

}  // namespace

std::string normalize_key(std::string key) {
  while (!key.empty() && key.front() == '-') key.erase(key.begin());
  for (auto& c : key) {
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (c == '-') c = '_';
  }
  return key;
}

RunConfig RunConfig::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path.string());
  RunConfig cfg;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": empty key");
    cfg.set(key, trim(line.substr(eq + 1)));
  }
  return cfg;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  values_[normalize_key(key)] = value;
}

void RunConfig::merge(const RunConfig& overrides) {
  for (const auto& [k, v] : overrides.values_) values_[k] = v;
}

bool RunConfig::has(const std::string& key) const { return values_.count(normalize_key(key)) > 0; }

void RunConfig::check_keys(const std::set<std::string>& allowed) const {
  for (const auto& [k, v] : values_) {
    if (!allowed.count(k)) throw ConfigError("unknown configuration key: " + k);
  }
}

std::string RunConfig::get_string(const std::string& key, const std::string& fallback) const {
  const std::string k = normalize_key(key);
  const auto it = values_.find(k);
  const std::string v = it == values_.end() ? fallback : it->second;
  used_[k] = v;
  return v;
}

double RunConfig::get_double(const std::string& key, double fallback) const {
  const std::string k = normalize_key(key);
  const auto it = values_.find(k);
  if (it == values_.end()) {
    used_[k] = format_double(fallback);
    return fallback;
  }
  const double v = parse_double(k, it->second);
  used_[k] = format_double(v);
  return v;
}

std::int64_t RunConfig::get_int(const std::string& key, std::int64_t fallback) const {
  const std::string k = normalize_key(key);
  const auto it = values_.find(k);
  const std::int64_t v = it == values_.end() ? fallback : parse_integer<std::int64_t>(k, it->second);
  used_[k] = std::to_string(v);
  return v;
}

std::uint64_t RunConfig::get_uint(const std::string& key, std::uint64_t fallback) const {
  const std::string k = normalize_key(key);
  const auto it = values_.find(k);
  const std::uint64_t v =
      it == values_.end() ? fallback : parse_integer<std::uint64_t>(k, it->second);
  used_[k] = std::to_string(v);
  return v;
}

bool RunConfig::get_bool(const std::string& key, bool fallback) const {
  const std::string k = normalize_key(key);
  const auto it = values_.find(k);
  bool v = fallback;
  if (it != values_.end()) {
    const std::string& s = it->second;
    if (s == "1" || s == "true" || s == "yes" || s == "on") {
      v = true;
    } else if (s == "0" || s == "false" || s == "no" || s == "off") {
      v = false;
    } else {
      throw ConfigError("config: " + k + " expects a boolean, got '" + s + "'");
    }
  }
  used_[k] = v ? "true" : "false";
  return v;
}

std::vector<double> RunConfig::get_doubles(const std::string& key,
                                           const std::vector<double>& fallback) const {
  const std::string k = normalize_key(key);
  const auto it = values_.find(k);
  std::vector<double> out = fallback;
  if (it != values_.end()) {
    out.clear();
    for (const auto& item : split_list(it->second)) out.push_back(parse_double(k, item));
  }
  std::string echo;
  for (std::size_t i = 0; i < out.size(); ++i) echo += (i ? "," : "") + format_double(out[i]);
  used_[k] = echo;
  return out;
}

std::vector<std::string> RunConfig::get_strings(const std::string& key,
                                                const std::vector<std::string>& fallback) const {
  const std::string k = normalize_key(key);
  const auto it = values_.find(k);
  std::vector<std::string> out = it == values_.end() ? fallback : split_list(it->second);
  std::string echo;
  for (std::size_t i = 0; i < out.size(); ++i) echo += (i ? "," : "") + out[i];
  used_[k] = echo;
  return out;
}

std::vector<std::pair<std::string, std::string>> RunConfig::echo() const {
  return {used_.begin(), used_.end()};
}

}  // namespace shmc
