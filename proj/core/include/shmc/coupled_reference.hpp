#pragma once

// Gaussian-target analysis of the integrators: exact affine step maps,
// stationary moments of the numerical chain (discrete Lyapunov), and an
// exact-SDE reference chain driven by the same Brownian increments as the
// numerical chain. The coupled difference of ergodic averages estimates the
// stationary bias with far less noise than either average alone.

#include "shmc/integrators.hpp"
#include "shmc/potentials.hpp"

namespace shmc {

/// z' = F z + G vec(noise) + b for a quadratic potential, in [r; theta]
/// coordinates; vec stacks noise columns.
struct AffineStep {
  Matrix f;
  Matrix g;
  Vector b;
};

AffineStep affine_step_map(const GradientField& grad, const IntegratorSpec& spec);

/// S = F S F^T + Q by repeated doubling. Throws when F is not stable.
Matrix solve_discrete_lyapunov(const Matrix& f, const Matrix& q);

struct StationaryMoments {
  Vector mean;  // [r; theta]
  Matrix cov;
};

/// Exact stationary law of the numerical chain on a quadratic potential
/// (full batch).
StationaryMoments stationary_moments(const Potential& potential, const IntegratorSpec& spec);

/// Full-batch Hessian of a quadratic potential, assembled column by column.
Matrix quadratic_hessian(const Potential& potential);

class CoupledGaussianReference {
 public:
  /// The potential must be quadratic with an analytic posterior; C > 0.
  CoupledGaussianReference(const Potential& potential, const IntegratorSpec& spec,
                           int quad_panels = 2048);

  void reset(const State& z);

  /// Advances the exact chain over spec.step_duration() given the noise the
  /// numerical scheme used for this step; rng supplies the independent part.
  /// For the symmetric scheme the reference trails the numerical chain by
  /// one step in position.
  void advance(const Matrix& noise, RngStream& rng);

  /// Same step without the independent part: the chain becomes the
  /// conditional mean of the exact one given the shared noise, with
  /// stationary covariance exact_cov() - residual_stationary_cov().
  void advance_projected(const Matrix& noise);

  /// Stationary covariance of the dropped independent part.
  Matrix residual_stationary_cov() const;

  State state() const { return State::from_stacked(x_); }
  const Vector& stacked() const { return x_; }

  const Matrix& propagator() const { return e_; }
  const Matrix& loading() const { return b_; }
  const Matrix& residual_factor() const { return l_; }
  /// Exact transition covariance over one step.
  const Matrix& transition_cov() const { return sigma_; }

 private:
  Index d_;
  Vector center_;
  Matrix e_;
  Matrix b_;
  Matrix l_;
  Matrix sigma_;
  Vector x_;
  Vector zeta_;
  int scheme_draws_ = 1;
  // symmetric scheme only
  Vector half_decay_, half_sd_, full_sd_, pending_, combined_;

  const Vector& shared_noise(const Matrix& noise);
};

}  // namespace shmc
