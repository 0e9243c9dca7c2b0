#pragma once

// Mini-batch schedules: which sub-potential feeds each integrator step and
// the gradient scale (K) that goes with it.

#include <cstddef>
#include <string_view>
#include <vector>

#include "shmc/core.hpp"
#include "shmc/potentials.hpp"

namespace shmc {

enum class BatchMode { kFull, kPermutation, kIid };

std::string_view to_string(BatchMode mode);
/// Accepts "full", "perm" and "iid".
BatchMode parse_batch_mode(std::string_view name);

struct BatchDraw {
  BatchSel batch;
  double scale;
};

class BatchSchedule {
 public:
  /// FULL ignores K. Throws ConfigError when K < 1.
  BatchSchedule(BatchMode mode, std::size_t n_batches, RngStream rng);

  BatchMode mode() const { return mode_; }
  std::size_t n_batches() const { return k_; }

  BatchDraw next();

 private:
  BatchMode mode_;
  std::size_t k_;
  RngStream rng_;
  std::vector<std::size_t> perm_;
  std::size_t cursor_ = 0;
};

BatchSchedule make_schedule(BatchMode mode, std::size_t n_batches, RngStream rng);

}  // namespace shmc
