#include "shmc/batching.hpp"

#include <numeric>
#include <utility>

namespace shmc {

std::string_view to_string(BatchMode mode) {
  switch (mode) {
    case BatchMode::kFull: return "full";
    case BatchMode::kPermutation: return "perm";
    case BatchMode::kIid: return "iid";
  }
  return "?";
}

BatchMode parse_batch_mode(std::string_view name) {
  if (name == "full") return BatchMode::kFull;
  if (name == "perm") return BatchMode::kPermutation;
  if (name == "iid") return BatchMode::kIid;
  throw ConfigError("unknown batch mode: " + std::string(name));
}

BatchSchedule::BatchSchedule(BatchMode mode, std::size_t n_batches, RngStream rng)
    : mode_(mode), k_(mode == BatchMode::kFull ? 1 : n_batches), rng_(std::move(rng)) {
  if (n_batches < 1) throw ConfigError("number of batches K must be >= 1");
  perm_.resize(k_);
  cursor_ = k_;
}

BatchDraw BatchSchedule::next() {
  if (mode_ == BatchMode::kFull) return {BatchSel::full(), 1.0};
  if (k_ == 1) return {BatchSel::index(0), 1.0};
  const double scale = static_cast<double>(k_);
  if (mode_ == BatchMode::kIid) return {BatchSel::index(rng_.uniform_index(k_)), scale};

  if (cursor_ == k_) {
    // Fisher-Yates from the schedule's own stream.
    std::iota(perm_.begin(), perm_.end(), std::size_t{0});
    for (std::size_t i = k_ - 1; i > 0; --i) std::swap(perm_[i], perm_[rng_.uniform_index(i + 1)]);
    cursor_ = 0;
  }
  return {BatchSel::index(perm_[cursor_++]), scale};
}

BatchSchedule make_schedule(BatchMode mode, std::size_t n_batches, RngStream rng) {
  return BatchSchedule(mode, n_batches, std::move(rng));
}

}  // namespace shmc
