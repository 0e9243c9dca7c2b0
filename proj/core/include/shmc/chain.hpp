#pragma once

// Sampling chains: burn-in, thinning, kept-sample traces and the ergodic
// diagnostics computed from them.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "shmc/batching.hpp"
#include "shmc/integrators.hpp"
#include "shmc/potentials.hpp"

namespace shmc {

using Metadata = std::vector<std::pair<std::string, std::string>>;

struct ChainConfig {
  std::size_t n_samples = 0;
  std::size_t burn_in = 2000;
  std::size_t thinning = 500;
  /// Start state; when empty theta is drawn from the prior and r ~ N(0, M).
  std::optional<State> init;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;

  void validate() const;
  std::size_t total_steps() const { return burn_in + n_samples * thinning; }
};

struct Trace {
  std::vector<State> states;
  std::vector<std::size_t> steps;  // 1-based step index of each kept state
  Metadata meta;
  Index dim = 0;
  double step_duration = 0.0;
  std::size_t total_steps = 0;
  double effective_time = 0.0;
  double wall_seconds = 0.0;  // kept out of persisted files

  std::size_t size() const { return states.size(); }
  bool empty() const { return states.empty(); }
};

/// Thrown by the chain runners; carries the samples kept before the failure.
class ChainDivergence : public DivergenceError {
 public:
  ChainDivergence(const DivergenceError& cause, std::size_t step, Trace partial);
  const Trace& partial() const { return partial_; }

 private:
  Trace partial_;
};

/// Called after every step (burn-in included) with the noise that step used.
using StepObserver = std::function<void(std::size_t step, const State& z, const Matrix& noise)>;

/// One transition of an arbitrary Markov kernel, in place.
using KernelStep = std::function<void(State& z)>;

/// Drives `kernel` for cfg.total_steps() steps from `init` and keeps every
/// thinning-th state after burn-in.
Trace collect_chain(const KernelStep& kernel, State init, const ChainConfig& cfg,
                    double step_duration, Metadata meta);

/// Integrator chain under a batch schedule. Noise comes from
/// RngStream(cfg.seed, cfg.stream); the schedule owns its own stream.
Trace run_chain(const Potential& potential, const IntegratorSpec& spec, BatchSchedule& schedule,
                const ChainConfig& cfg, const StepObserver& observer = {});

/// Fields describing a chain run, in a stable order.
Metadata chain_metadata(const Potential& potential, const IntegratorSpec& spec,
                        const BatchSchedule& schedule, const ChainConfig& cfg);

double ergodic_average(const Trace& trace, const std::function<double(const State&)>& phi);

enum class Block { kR, kTheta };

/// Lag-1 sample autocorrelation sum_t (x_t - m)(x_{t+1} - m) / sum_t (x_t - m)^2.
/// Throws ContractError for fewer than 3 samples or zero variance.
double acf1(const Trace& trace, Index coord, Block which);
double acf1(const std::vector<double>& x);

/// Kept-sample values of one coordinate.
std::vector<double> trace_column(const Trace& trace, Index coord, Block which);

/// `step,time,theta_0..,r_0..` rows.
void write_trace_csv(const std::filesystem::path& path, const Trace& trace);

}  // namespace shmc
