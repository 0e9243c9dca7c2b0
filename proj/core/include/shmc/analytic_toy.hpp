#pragma once

// Exact transition kernels of the conjugate 1-D toy model in phase space
// z = (r, theta):  dz = A (z - [0, center]) dt + [sqrt(2C) dW, 0],
// A = [[-C, -1/sigma_l2], [1, 0]].

#include <Eigen/Core>
#include <utility>

#include "shmc/chain.hpp"
#include "shmc/core.hpp"
#include "shmc/potentials.hpp"

namespace shmc {

using Matrix2 = Eigen::Matrix2d;
using Vector2 = Eigen::Vector2d;

struct ToyParams {
  double sigma_x2 = 2.0;
  double sigma_theta2 = 0.5;
  double x1 = 4.0;
  double x2 = -3.2;
  double friction = 2.0;

  void validate() const;
  double v() const { return sigma_x2 / sigma_theta2 + 2.0; }
  double sigma_l2() const { return 1.0 / (1.0 / sigma_theta2 + 2.0 / sigma_x2); }
  double mean() const { return (x1 + x2) / v(); }
  /// Center of the batch-i dynamics, i in {0, 1}.
  double batch_center(int i) const { return 2.0 * (i == 0 ? x1 : x2) / v(); }
  Matrix2 drift() const;
  /// diag(1, sigma_l2), the stationary covariance of the full dynamics.
  Matrix2 stationary_cov() const;
  ToyData data() const { return {x1, x2, sigma_x2, sigma_theta2}; }
};

/// exp(tA) in closed form; a series in (q t)^2 handles the (nearly)
/// defective case.
Matrix2 matexp2(const Matrix2& a, double t);

struct Gaussian2 {
  Vector2 mean;
  Matrix2 cov;
};

/// Law of z(eta) given z0 for the dynamics centred at `center`.
Gaussian2 toy_transition(const Vector2& z0, double eta, const ToyParams& p, double center);

enum class ToyMode { kFull, kMinibatch };

std::string_view to_string(ToyMode mode);

/// Precomputed exact sampler for a fixed eta.
class ToyKernel {
 public:
  ToyKernel(const ToyParams& p, double eta, ToyMode mode);

  /// One exact step. MINIBATCH flips a fair coin for the center first.
  Vector2 step(const Vector2& z, RngStream& rng) const;

  const Matrix2& propagator() const { return e_; }
  const Matrix2& cov_factor() const { return l_; }

 private:
  ToyParams p_;
  double eta_;
  ToyMode mode_;
  Matrix2 e_;
  Matrix2 l_;
};

Vector2 toy_exact_step(const Vector2& z0, double eta, const ToyParams& p, ToyMode mode,
                       RngStream& rng);

/// (mean, variance) of the posterior.
std::pair<double, double> toy_posterior(const ToyParams& p);

/// Exact-kernel chain; theta starts from the prior, r from N(0, 1), unless
/// cfg.init is set. Stored states are 1-D.
Trace run_toy_chain(const ToyParams& p, double eta, ToyMode mode, const ChainConfig& cfg);

}  // namespace shmc
