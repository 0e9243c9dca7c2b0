#pragma once

// Small numeric CSV reader/writer and key = value metadata files.

#include <filesystem>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace shmc {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  /// Column index by name; throws IoError when absent.
  std::size_t column(std::string_view name) const;
  bool has_column(std::string_view name) const;
};

/// Reads a header row followed by numeric rows. Blank lines are skipped.
CsvTable read_csv(const std::filesystem::path& path);

/// Shortest round-trip decimal form ("%.17g" trimmed through std::to_chars).
std::string format_double(double v);

/// Joins already formatted fields with commas and a trailing newline.
void write_csv_row(std::ostream& os, const std::vector<std::string>& fields);

/// Writes `content` to `path`, creating parent directories.
void write_text_file(const std::filesystem::path& path, std::string_view content);

/// Ordered key = value lines.
void write_metadata(const std::filesystem::path& path,
                    const std::vector<std::pair<std::string, std::string>>& entries);
std::map<std::string, std::string> read_metadata(const std::filesystem::path& path);

}  // namespace shmc
