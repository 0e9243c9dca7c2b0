#pragma once

// Finite-difference Jacobians of one integrator step with frozen noise and
// the quasi-symplectic identities they should satisfy.

#include <optional>

#include "shmc/integrators.hpp"

namespace shmc {

/// z -> psi(z) with the noise held fixed.
struct FrozenStep {
  IntegratorSpec spec;
  Matrix noise;  // d x spec.noise_draws()
  const GradientField* grad = nullptr;

  State apply(const State& z) const;
};

FrozenStep freeze_step(const IntegratorSpec& spec, const GradientField& grad, RngStream& rng);

/// Central differences, ordering [r; theta]. eps in [1e-7, 1e-3].
Matrix jacobian_fd(const FrozenStep& step, const State& z0, double eps = 1e-5);

/// prod_i (1 - eta C / M_ii).
double det_target_leapfrog(double eta, double friction, const MassMatrix& mass);
/// prod_i exp(-N_l eta C / M_ii).
double det_target_lie_trotter(double eta, double friction, const MassMatrix& mass, int n_l);
/// Scheme-specific determinant of the step Jacobian, when it is constant.
std::optional<double> det_target(const IntegratorSpec& spec);

double det_residual_leapfrog(const Matrix& j, double eta, double friction, const MassMatrix& mass);
double det_residual_lie_trotter(const Matrix& j, double eta, double friction,
                                const MassMatrix& mass, int n_l);

/// Spectral norm of J^T S J - S with S = [[0, -I], [I, 0]].
double symplectic_residual(const Matrix& j);

}  // namespace shmc
