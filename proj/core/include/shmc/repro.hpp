#pragma once

// Reproduction checks with pass/fail verdicts. Slope verdicts whose fit has
// r^2 < 0.9 are reported as inconclusive rather than asserted.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace shmc {

enum class Verdict { kPass, kFail, kInconclusive };

std::string_view to_string(Verdict v);

struct ReproCheck {
  std::string name;
  Verdict verdict;
  double value;
  std::string criterion;  // e.g. ">= 0.4"
  double r2;              // NaN when no fit is involved
  std::string detail;
};

struct ReproOptions {
  std::uint64_t seed = 1;
  int jobs = 1;
  // Sweep size: kept samples per replicate, simulated time between kept
  // samples, replicates.
  std::size_t sweep_n = 2000;
  double sweep_thin_time = 25.0;
  int replicates = 4;
  std::size_t toy_n = 100000;
  std::size_t opcheck_trials = 100;
};

std::vector<ReproCheck> repro_fig1(const ReproOptions& opt);
std::vector<ReproCheck> repro_fig3(const ReproOptions& opt);
std::vector<ReproCheck> repro_theorems(const ReproOptions& opt);

/// Writes report.md and results.csv into dir.
void write_repro_report(const std::filesystem::path& dir, const std::string& title,
                        const std::vector<ReproCheck>& checks);

std::string repro_results_csv(const std::vector<ReproCheck>& checks);

}  // namespace shmc
