#pragma once

// Experiment drivers behind the CLI commands. Each returns plain data; the
// *_csv helpers render it in the documented schemas.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "shmc/analytic_toy.hpp"
#include "shmc/batching.hpp"
#include "shmc/chain.hpp"
#include "shmc/integrators.hpp"
#include "shmc/operator_lab.hpp"
#include "shmc/potentials.hpp"

namespace shmc {

struct ModelConfig {
  ModelKind kind = ModelKind::kLinearGaussian;
  std::size_t n_batches = 1;
  std::string data_path;  // empty: synthetic data
  SyntheticRegression regression;
  std::size_t logistic_n = 64;
  double logistic_prior_var = 1.0;
  ToyData toy;
  std::uint64_t data_seed = 1;
};

PotentialPtr build_model(const ModelConfig& cfg);

/// Runs fn(i) for i in [0, n) on up to `jobs` threads. Exceptions are
/// rethrown (the one from the lowest index) after all workers finish.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

// ---------------------------------------------------------------------------
// sample

struct SampleConfig {
  ModelConfig model;
  std::string scheme = "leapfrog";  // or "exact" for the toy model
  double eta = 0.01;
  double friction = 5.0;
  Vector mass;  // empty: identity
  int inner_steps = 1;
  double v_hat = 0.0;
  BatchMode mode = BatchMode::kFull;
  ChainConfig chain;
};

Trace run_sample(const SampleConfig& cfg);

// ---------------------------------------------------------------------------
// sweep

struct SweepConfig {
  ModelConfig model;
  std::vector<Scheme> schemes{Scheme::kMt3};
  std::vector<double> etas{0.04, 0.02, 0.01, 0.005};
  std::vector<std::size_t> batch_counts{1};
  BatchMode mode = BatchMode::kPermutation;
  double friction = 5.0;
  Vector mass;  // empty: identity
  int inner_steps = 1;
  double v_hat = 0.0;
  std::size_t n = 25000;  // kept samples per replicate
  std::size_t burn_in = 20000;
  std::size_t thinning = 400;
  // > 0: thinning per cell is ceil(thin_time / step duration) instead, so
  // every cell covers the same simulated time.
  double thin_time = 0.0;
  int replicates = 4;
  std::uint64_t seed = 1;
  int jobs = 1;
  bool coupled = true;
  std::size_t self_reps = 50;
  std::size_t self_max_m = 20000;
};

struct SweepCell {
  Scheme scheme;
  double eta;
  std::size_t thinning;
  std::size_t n_batches;
  BatchMode mode;
  int inner_steps;
  std::size_t n;  // kept samples pooled over replicates
  double ks;
  double ks_q05_self;
  double ks_q95_self;
  double mean_err;
  double var_err;
  double mean_err_cv;
  double var_err_cv;
  double var_err_cv_se;
  double r_var_err;
  std::optional<double> var_err_exact;  // discrete-Lyapunov value, full batch only
  bool diverged = false;
};

struct SlopeRow {
  Scheme scheme;
  std::size_t n_batches;
  BatchMode mode;
  int inner_steps;
  std::string metric;
  std::size_t points;
  oplab::SlopeFit all;
  // Widest contiguous window of >= 3 points with r^2 >= 0.95 (smallest etas
  // on ties); empty when none qualifies.
  std::optional<oplab::SlopeFit> window;
  double window_eta_lo = 0.0;
  double window_eta_hi = 0.0;
};

struct SweepResult {
  std::vector<SweepCell> cells;
  std::vector<SlopeRow> slopes;
};

SweepResult run_sweep(const SweepConfig& cfg);

/// Slope fits per (scheme, K, mode, N_l) for var_err_cv and var_err.
std::vector<SlopeRow> fit_sweep_slopes(const std::vector<SweepCell>& cells);

std::string sweep_summary_csv(const SweepResult& result);
std::string sweep_slopes_csv(const SweepResult& result);

// ---------------------------------------------------------------------------
// toy

struct ToyRunConfig {
  ToyParams params;
  double eta = 0.4;
  std::size_t n = 100000;
  std::size_t burn_in = 1000;
  std::size_t thinning = 0;  // 0: ceil(4 / eta), about four time units
  std::uint64_t seed = 1;
  int bins = 128;
};

struct Histogram {
  double lo = 0.0;
  double hi = 0.0;
  std::vector<std::size_t> counts;
};

struct ToyModeResult {
  ToyMode mode;
  double ks;
  double mean;
  double variance;
  Histogram histogram;
};

struct ToyRunResult {
  std::size_t thinning;
  ToyModeResult full;
  ToyModeResult minibatch;
};

std::size_t toy_default_thinning(double eta);
ToyRunResult run_toy(const ToyRunConfig& cfg);

Histogram make_histogram(const std::vector<double>& values, double lo, double hi, int bins);

std::string toy_summary_csv(const ToyRunConfig& cfg, const ToyRunResult& result);
std::string histogram_csv(const Histogram& h);

// ---------------------------------------------------------------------------
// opcheck

struct OpcheckConfig {
  std::size_t trials = 100;
  std::vector<std::size_t> ks{2, 3};
  std::vector<Index> ns{2, 3, 4};
  std::vector<double> etas{0.1, 0.05, 0.025, 0.0125};
  std::uint64_t seed = 1;
  bool frobenius = false;
};

struct OpcheckRow {
  std::size_t trial;
  std::size_t k;
  Index n;
  std::string mode;  // forward, averaged, randomized
  double eta;
  double error;
};

struct OpcheckSlope {
  std::size_t trial;
  std::size_t k;
  Index n;
  std::string mode;
  oplab::SlopeFit fit;
};

struct OpcheckResult {
  std::vector<OpcheckRow> rows;
  std::vector<OpcheckSlope> slopes;
};

OpcheckResult run_opcheck(const OpcheckConfig& cfg);

std::string opcheck_csv(const OpcheckResult& result);
std::string opcheck_slopes_csv(const OpcheckResult& result);

struct BchCheckConfig {
  std::size_t pairs = 20;
  Index n = 3;
  std::vector<double> eps{0.1, 0.05, 0.025, 0.0125};
  std::uint64_t seed = 1;
};

/// Slope of ||exp(eA) exp(eB) - exp(Z_2(eA, eB))|| in e, one per pair.
std::vector<oplab::SlopeFit> run_bch_check(const BchCheckConfig& cfg);

// ---------------------------------------------------------------------------
// geom

struct GeomConfig {
  ModelConfig model;
  std::vector<Scheme> schemes{Scheme::kEuler, Scheme::kLeapfrog, Scheme::kLieTrotter};
  double eta = 0.1;
  std::vector<double> frictions{0.0, 2.0};
  Vector mass;  // empty: identity
  int inner_steps = 1;
  std::size_t probes = 10;
  double eps = 1e-5;
  std::uint64_t seed = 1;
};

struct GeomRow {
  Scheme scheme;
  double eta;
  double friction;
  std::size_t probe;
  double det_j;
  std::optional<double> det_target;
  double symp_residual;
};

std::vector<GeomRow> run_geom(const GeomConfig& cfg);

std::string geom_csv(const std::vector<GeomRow>& rows);

}  // namespace shmc
