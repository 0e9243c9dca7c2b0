#include "shmc/coupled_reference.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <cmath>
#include <functional>
#include <vector>

#include "shmc/operator_lab.hpp"

namespace shmc {

AffineStep affine_step_map(const GradientField& grad, const IntegratorSpec& spec) {
  const Index d = spec.dim();
  const Index n = 2 * d;
  const Index m = d * spec.noise_draws();
  const Matrix zero_noise = Matrix::Zero(d, spec.noise_draws());
  Stepper stepper(spec);
  auto apply = [&](const Vector& z, const Matrix& noise) {
    State s = State::from_stacked(z);
    stepper.advance(s, grad, noise);
    return s.stacked();
  };
  AffineStep out;
  out.b = apply(Vector::Zero(n), zero_noise);
  out.f.resize(n, n);
  for (Index c = 0; c < n; ++c) {
    out.f.col(c) = apply(Vector::Unit(n, c), zero_noise) - out.b;
  }
  out.g.resize(n, m);
  for (Index c = 0; c < m; ++c) {
    Matrix noise = zero_noise;
    noise(c % d, c / d) = 1.0;
    out.g.col(c) = apply(Vector::Zero(n), noise) - out.b;
  }
  return out;
}

Matrix solve_discrete_lyapunov(const Matrix& f, const Matrix& q) {
  Matrix s = q;
  Matrix a = f;
  for (int it = 0; it < 200; ++it) {
    const Matrix next = s + a * s * a.transpose();
    a = a * a;
    const double change = (next - s).norm();
    s = next;
    if (!s.allFinite()) break;
    if (change <= 1e-15 * s.norm() && a.norm() < 1e-8) return 0.5 * (s + s.transpose());
  }
  throw ContractError("discrete Lyapunov equation: step map is not stable");
}

Matrix quadratic_hessian(const Potential& potential) {
  const Index d = potential.dim();
  Matrix h(d, d);
  const Vector at = Vector::Zero(d);
  for (Index c = 0; c < d; ++c) h.col(c) = potential.hessian_vec(at, Vector::Unit(d, c));
  return 0.5 * (h + h.transpose());
}

StationaryMoments stationary_moments(const Potential& potential, const IntegratorSpec& spec) {
  const BoundGradient grad(potential);
  const AffineStep step = affine_step_map(grad, spec);
  const Index n = step.f.rows();
  StationaryMoments out;
  out.mean = (Matrix::Identity(n, n) - step.f).lu().solve(step.b);
  out.cov = solve_discrete_lyapunov(step.f, step.g * step.g.transpose());
  return out;
}

namespace {

// Weight function of one scheme noise variable as a functional of the
// Brownian path on [0, T]: w = \int g(s) dW(s) with \int g^2 = 1.
struct NoiseFunctional {
  int first_node;
  int last_node;
  std::function<double(double s)> g;
};

std::vector<NoiseFunctional> noise_functionals(const IntegratorSpec& spec, double mass_ii,
                                               int panels) {
  const double t = spec.step_duration();
  const double c = spec.friction / mass_ii;
  const double s2c = std::sqrt(2.0 * spec.friction);
  // Normalized exact-OU kernel on an interval of length len ending at end.
  auto ou = [=](double end, double len) {
    const double norm = std::sqrt(mass_ii * -std::expm1(-2.0 * c * len));
    return [=](double s) { return s2c * std::exp(-c * (end - s)) / norm; };
  };
  switch (spec.scheme) {
    case Scheme::kEuler:
    case Scheme::kLeapfrog:
    case Scheme::kSghmc:
      return {{0, panels, [t](double) { return 1.0 / std::sqrt(t); }}};
    case Scheme::kMt3:
      return {{0, panels, [t](double) { return 1.0 / std::sqrt(t); }},
              {0, panels,
               [t](double s) { return 2.0 * std::sqrt(3.0) * (0.5 * t - s) / (t * std::sqrt(t)); }}};
    case Scheme::kSpv:
    case Scheme::kLieTrotter:
    case Scheme::kHmcPartial: return {{0, panels, ou(t, t)}};
    // The symmetric scheme's position path is a Lie-Trotter path whose full
    // refresh is the pair (w2 of step n-1, w1 of step n); see advance().
    case Scheme::kSymmetric: return {{0, panels, ou(t, t)}};
  }
  return {};
}

}  // namespace

CoupledGaussianReference::CoupledGaussianReference(const Potential& potential,
                                                   const IntegratorSpec& spec, int quad_panels)
    : d_(potential.dim()) {
  spec.validate();
  if (!(spec.friction > 0.0)) throw ConfigError("coupled reference needs C > 0");
  if (!(spec.eta > 0.0)) throw ConfigError("coupled reference needs eta > 0");
  if (spec.dim() != d_) throw ConfigError("mass matrix dimension does not match the model");
  if (quad_panels < 8 || quad_panels % 4 != 0) {
    throw ContractError("coupled reference: panels must be a positive multiple of 4");
  }
  const GaussianPosterior post = potential.analytic_posterior();
  const Matrix h = quadratic_hessian(potential);
  const Index n = 2 * d_;
  const Vector& inv = spec.mass.inverse();

  Matrix a = Matrix::Zero(n, n);
  a.topLeftCorner(d_, d_) = (-spec.friction * inv).asDiagonal();
  a.topRightCorner(d_, d_) = -h;
  a.bottomLeftCorner(d_, d_) = inv.asDiagonal();

  const double t = spec.step_duration();
  e_ = oplab::matrix_exp(t * a);
  Matrix s_inf = Matrix::Zero(n, n);
  s_inf.topLeftCorner(d_, d_) = spec.mass.diag().asDiagonal();
  s_inf.bottomRightCorner(d_, d_) = post.covariance;
  sigma_ = s_inf - e_ * s_inf * e_.transpose();
  sigma_ = 0.5 * (sigma_ + sigma_.transpose());

  center_ = Vector::Zero(n);
  center_.tail(d_) = post.mean;

  // Columns of exp((T - s_k) A) acting on the momentum block, k = 0..N.
  const int panels = quad_panels;
  const double ds = t / panels;
  const Matrix p = oplab::matrix_exp(ds * a);
  std::vector<Matrix> kernel(panels + 1);
  kernel[panels] = Matrix::Identity(n, n).leftCols(d_);
  for (int k = panels - 1; k >= 0; --k) kernel[k] = p * kernel[k + 1];

  const int draws = spec.scheme == Scheme::kSymmetric ? 1 : spec.noise_draws();
  scheme_draws_ = spec.noise_draws();
  if (spec.scheme == Scheme::kSymmetric) {
    const Vector x = (0.5 * spec.friction * spec.eta) * spec.mass.inverse();
    half_decay_ = (-x.array()).exp().matrix();
    half_sd_ = (-(-2.0 * x.array()).expm1()).sqrt().matrix().cwiseProduct(spec.mass.diag().cwiseSqrt());
    full_sd_ = (-(-4.0 * x.array()).expm1()).sqrt().matrix().cwiseProduct(spec.mass.diag().cwiseSqrt());
    pending_ = Vector::Zero(d_);
    combined_.resize(d_);
  }
  const double s2c = std::sqrt(2.0 * spec.friction);
  b_ = Matrix::Zero(n, d_ * draws);
  for (Index j = 0; j < d_; ++j) {
    const auto fns = noise_functionals(spec, spec.mass.diag()[j], panels);
    for (int col = 0; col < draws; ++col) {
      const auto& fn = fns[static_cast<std::size_t>(col)];
      const int len = fn.last_node - fn.first_node;
      Vector acc = Vector::Zero(n);
      for (int k = fn.first_node; k <= fn.last_node; ++k) {
        const int local = k - fn.first_node;
        const double w = (local == 0 || local == len) ? 1.0 : (local % 2 ? 4.0 : 2.0);
        acc += (w * fn.g(k * ds)) * kernel[static_cast<std::size_t>(k)].col(j);
      }
      b_.col(col * d_ + j) = (s2c * ds / 3.0) * acc;
    }
  }

  const Matrix resid = sigma_ - b_ * b_.transpose();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (resid + resid.transpose()));
  l_ = eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
  x_ = center_;
  zeta_.resize(n);
}

void CoupledGaussianReference::reset(const State& z) {
  if (z.dim() != d_) throw ContractError("coupled reference: state dimension mismatch");
  x_ = z.stacked();
  if (pending_.size() != 0) pending_.setZero();
}

const Vector& CoupledGaussianReference::shared_noise(const Matrix& noise) {
  if (noise.rows() != d_ || noise.cols() != scheme_draws_) {
    throw ContractError("coupled reference: noise shape mismatch");
  }
  if (pending_.size() == 0) {
    combined_ = Eigen::Map<const Vector>(noise.data(), noise.size());
    return combined_;
  }
  // Two half refreshes compose to one full refresh of the same law.
  combined_ = (half_decay_.cwiseProduct(half_sd_).cwiseProduct(pending_) +
               half_sd_.cwiseProduct(noise.col(0)))
                  .cwiseQuotient(full_sd_);
  pending_ = noise.col(1);
  return combined_;
}

void CoupledGaussianReference::advance(const Matrix& noise, RngStream& rng) {
  const Vector& xi = shared_noise(noise);
  rng.fill_normal(zeta_);
  x_ = center_ + e_ * (x_ - center_) + b_ * xi + l_ * zeta_;
}

void CoupledGaussianReference::advance_projected(const Matrix& noise) {
  const Vector& xi = shared_noise(noise);
  x_ = center_ + e_ * (x_ - center_) + b_ * xi;
}

Matrix CoupledGaussianReference::residual_stationary_cov() const {
  return solve_discrete_lyapunov(e_, l_ * l_.transpose());
}

}  // namespace shmc
