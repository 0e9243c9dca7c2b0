#pragma once

// Frozen reference numbers. Each record names the oracle that produced it;
// compute_golden() re-runs those oracles so drift shows up as a failed check.

#include <filesystem>
#include <string>
#include <vector>

namespace shmc {

struct GoldenRecord {
  std::string key;
  double value = 0.0;
  double tolerance = 0.0;  // relative, with a 1e-15 absolute floor
  std::string provenance;
};

/// File layout: header `key,value,tolerance,provenance`; the provenance is
/// everything after the third comma.
std::vector<GoldenRecord> read_golden(const std::filesystem::path& path);
std::string golden_csv(const std::vector<GoldenRecord>& records);

std::vector<GoldenRecord> compute_golden();

struct GoldenCheck {
  std::string key;
  double expected;
  double actual;
  double tolerance;
  bool pass;
};

/// Compares every frozen record with the recomputed one; a key missing on
/// either side fails.
std::vector<GoldenCheck> check_golden(const std::vector<GoldenRecord>& frozen,
                                      const std::vector<GoldenRecord>& computed);

bool within_tolerance(double expected, double actual, double tolerance);

}  // namespace shmc
