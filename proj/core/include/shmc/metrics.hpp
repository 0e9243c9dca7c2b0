#pragma once

// Kolmogorov distances, self-distance calibration and moment errors against
// analytic posteriors.

#include <cstddef>
#include <vector>

#include "shmc/chain.hpp"
#include "shmc/core.hpp"
#include "shmc/potentials.hpp"

namespace shmc {

/// Sorted, finite, non-empty sample.
class EmpiricalSample {
 public:
  explicit EmpiricalSample(std::vector<double> values);

  const std::vector<double>& values() const { return values_; }
  std::size_t n() const { return values_.size(); }

 private:
  std::vector<double> values_;
};

/// sup_x |F_a(x) - F_b(x)| over right-continuous ECDFs.
double kolmogorov_distance(const EmpiricalSample& a, const EmpiricalSample& b);

/// Standard normal CDF via erfc.
double normal_cdf(double x);

/// One-sample distance to N(mean, variance).
double ks_vs_gaussian(const EmpiricalSample& a, double mean, double variance);

/// Linear-interpolation quantile of sorted data, p in [0, 1].
double quantile_sorted(const std::vector<double>& sorted, double p);

struct SelfDistance {
  double q05 = 0.0;
  double q50 = 0.0;
  double q95 = 0.0;
};

/// Quantiles of the distance between two independent size-m subsamples
/// (without replacement) of the oracle, over `reps` repetitions.
SelfDistance self_distance(const EmpiricalSample& oracle, std::size_t m, std::size_t reps,
                           RngStream& rng);

struct MomentErrors {
  Vector mean_error;
  Vector variance_error;
};

/// Componentwise |sample mean - mean| and |sample variance - variance| of
/// theta over kept states. Population variance (a single sample has 0).
MomentErrors moment_errors(const Trace& trace, const GaussianPosterior& post);

/// Streaming per-coordinate mean and population variance (Welford).
class MomentAccumulator {
 public:
  explicit MomentAccumulator(Index dim = 0);

  void add(const Vector& x);
  void merge(const MomentAccumulator& other);

  std::size_t count() const { return n_; }
  const Vector& mean() const { return mean_; }
  Vector variance() const;

 private:
  std::size_t n_ = 0;
  Vector mean_;
  Vector m2_;
  Vector delta_;
};

}  // namespace shmc
