#include "shmc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace shmc {

EmpiricalSample::EmpiricalSample(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) throw ContractError("empirical sample is empty");
  for (double v : values_) {
    if (!std::isfinite(v)) throw ContractError("empirical sample has non-finite values");
  }
  std::sort(values_.begin(), values_.end());
}

double kolmogorov_distance(const EmpiricalSample& a, const EmpiricalSample& b) {
  const auto& x = a.values();
  const auto& y = b.values();
  const double na = static_cast<double>(x.size());
  const double nb = static_cast<double>(y.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < x.size() || j < y.size()) {
    double v;
    if (j == y.size() || (i < x.size() && x[i] <= y[j])) {
      v = x[i];
    } else {
      v = y[j];
    }
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double ks_vs_gaussian(const EmpiricalSample& a, double mean, double variance) {
  if (!(variance > 0.0)) throw ContractError("ks_vs_gaussian: variance must be > 0");
  const double sd = std::sqrt(variance);
  const double n = static_cast<double>(a.n());
  double d = 0.0;
  for (std::size_t i = 0; i < a.n(); ++i) {
    const double f = normal_cdf((a.values()[i] - mean) / sd);
    d = std::max({d, std::abs(static_cast<double>(i + 1) / n - f),
                  std::abs(static_cast<double>(i) / n - f)});
  }
  return d;
}

double quantile_sorted(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) throw ContractError("quantile of empty data");
  if (!(p >= 0.0 && p <= 1.0)) throw ContractError("quantile level must be in [0, 1]");
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

namespace {

std::vector<double> subsample(const std::vector<double>& pool, std::size_t m, RngStream& rng,
                              std::vector<std::size_t>& idx) {
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::vector<double> out(m);
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t j = i + rng.uniform_index(idx.size() - i);
    std::swap(idx[i], idx[j]);
    out[i] = pool[idx[i]];
  }
  return out;
}

}  // namespace

SelfDistance self_distance(const EmpiricalSample& oracle, std::size_t m, std::size_t reps,
                           RngStream& rng) {
  if (m < 1 || m > oracle.n()) throw ContractError("self_distance: need 1 <= m <= n");
  if (reps < 20) throw ContractError("self_distance: need at least 20 repetitions");
  std::vector<std::size_t> idx(oracle.n());
  std::vector<double> d;
  d.reserve(reps);
  for (std::size_t r = 0; r < reps; ++r) {
    EmpiricalSample a(subsample(oracle.values(), m, rng, idx));
    EmpiricalSample b(subsample(oracle.values(), m, rng, idx));
    d.push_back(kolmogorov_distance(a, b));
  }
  std::sort(d.begin(), d.end());
  return {quantile_sorted(d, 0.05), quantile_sorted(d, 0.5), quantile_sorted(d, 0.95)};
}

MomentErrors moment_errors(const Trace& trace, const GaussianPosterior& post) {
  if (trace.empty()) throw ContractError("moment_errors: empty trace");
  MomentAccumulator acc(trace.states.front().dim());
  for (const auto& z : trace.states) acc.add(z.theta);
  if (post.mean.size() != acc.mean().size()) {
    throw ContractError("moment_errors: posterior dimension mismatch");
  }
  return {(acc.mean() - post.mean).cwiseAbs(),
          (acc.variance() - post.covariance.diagonal()).cwiseAbs()};
}

MomentAccumulator::MomentAccumulator(Index dim)
    : mean_(Vector::Zero(dim)), m2_(Vector::Zero(dim)), delta_(Vector::Zero(dim)) {}

void MomentAccumulator::add(const Vector& x) {
  if (x.size() != mean_.size()) throw ContractError("MomentAccumulator: dimension mismatch");
  ++n_;
  delta_ = x - mean_;
  mean_ += delta_ / static_cast<double>(n_);
  m2_.array() += delta_.array() * (x - mean_).array();
}

void MomentAccumulator::merge(const MomentAccumulator& other) {
  if (other.n_ == 0) return;
  if (n_ == 0) {
    *this = other;
    return;
  }
  const double na = static_cast<double>(n_);
  const double nb = static_cast<double>(other.n_);
  const Vector delta = other.mean_ - mean_;
  mean_ += delta * (nb / (na + nb));
  m2_ += other.m2_ + delta.cwiseAbs2() * (na * nb / (na + nb));
  n_ += other.n_;
}

Vector MomentAccumulator::variance() const {
  if (n_ == 0) return Vector::Zero(mean_.size());
  return m2_ / static_cast<double>(n_);
}

}  // namespace shmc
