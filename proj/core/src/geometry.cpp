#include "shmc/geometry.hpp"

#include <Eigen/LU>
#include <cmath>

#include "shmc/operator_lab.hpp"

namespace shmc {

State FrozenStep::apply(const State& z) const {
  if (grad == nullptr) throw ContractError("frozen step has no gradient provider");
  return step_with_noise(z, *grad, spec, noise);
}

FrozenStep freeze_step(const IntegratorSpec& spec, const GradientField& grad, RngStream& rng) {
  FrozenStep f{spec, Matrix(), &grad};
  Stepper(spec).draw_noise(rng, f.noise);
  return f;
}

Matrix jacobian_fd(const FrozenStep& step, const State& z0, double eps) {
  if (!(eps >= 1e-7 && eps <= 1e-3)) throw ContractError("jacobian_fd: eps must be in [1e-7, 1e-3]");
  const Vector base = z0.stacked();
  const Index n = base.size();
  Matrix j(n, n);
  for (Index c = 0; c < n; ++c) {
    Vector plus = base;
    Vector minus = base;
    plus[c] += eps;
    minus[c] -= eps;
    const Vector fp = step.apply(State::from_stacked(plus)).stacked();
    const Vector fm = step.apply(State::from_stacked(minus)).stacked();
    j.col(c) = (fp - fm) / (2.0 * eps);
  }
  if (!j.allFinite()) throw ContractError("jacobian_fd: non-finite probe evaluation");
  return j;
}

double det_target_leapfrog(double eta, double friction, const MassMatrix& mass) {
  return (1.0 - (eta * friction) * mass.inverse().array()).prod();
}

double det_target_lie_trotter(double eta, double friction, const MassMatrix& mass, int n_l) {
  return mass.decay(friction, static_cast<double>(n_l) * eta).prod();
}

std::optional<double> det_target(const IntegratorSpec& spec) {
  switch (spec.scheme) {
    case Scheme::kLeapfrog:
    case Scheme::kSghmc: return det_target_leapfrog(spec.eta, spec.friction, spec.mass);
    case Scheme::kLieTrotter:
    case Scheme::kHmcPartial:
      return det_target_lie_trotter(spec.eta, spec.friction, spec.mass, spec.inner_steps);
    case Scheme::kSpv:
    case Scheme::kSymmetric: return det_target_lie_trotter(spec.eta, spec.friction, spec.mass, 1);
    case Scheme::kEuler:
    case Scheme::kMt3: return std::nullopt;
  }
  return std::nullopt;
}

double det_residual_leapfrog(const Matrix& j, double eta, double friction, const MassMatrix& mass) {
  if (j.rows() != j.cols() || j.rows() != 2 * mass.dim()) {
    throw ContractError("det_residual: Jacobian must be 2d x 2d");
  }
  return std::abs(j.determinant() - det_target_leapfrog(eta, friction, mass));
}

double det_residual_lie_trotter(const Matrix& j, double eta, double friction,
                                const MassMatrix& mass, int n_l) {
  if (j.rows() != j.cols() || j.rows() != 2 * mass.dim()) {
    throw ContractError("det_residual: Jacobian must be 2d x 2d");
  }
  return std::abs(j.determinant() - det_target_lie_trotter(eta, friction, mass, n_l));
}

double symplectic_residual(const Matrix& j) {
  if (j.rows() != j.cols() || j.rows() % 2 != 0) {
    throw ContractError("symplectic_residual: Jacobian must be square of even size");
  }
  const Index d = j.rows() / 2;
  Matrix s = Matrix::Zero(2 * d, 2 * d);
  s.topRightCorner(d, d) = -Matrix::Identity(d, d);
  s.bottomLeftCorner(d, d) = Matrix::Identity(d, d);
  return oplab::spectral_norm(j.transpose() * s * j - s);
}

}  // namespace shmc
