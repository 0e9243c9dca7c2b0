#include "shmc/analytic_toy.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

#include "shmc/csv_io.hpp"

namespace shmc {

void ToyParams::validate() const {
  if (!(sigma_x2 > 0.0) || !(sigma_theta2 > 0.0)) throw ConfigError("toy: variances must be > 0");
  if (!(friction > 0.0)) throw ConfigError("toy: friction C must be > 0");
  if (!std::isfinite(x1) || !std::isfinite(x2)) throw ConfigError("toy: observations must be finite");
}

Matrix2 ToyParams::drift() const {
  Matrix2 a;
  a << -friction, -1.0 / sigma_l2(), 1.0, 0.0;
  return a;
}

Matrix2 ToyParams::stationary_cov() const {
  Matrix2 s = Matrix2::Zero();
  s(0, 0) = 1.0;
  s(1, 1) = sigma_l2();
  return s;
}

Matrix2 matexp2(const Matrix2& a, double t) {
  const double m = 0.5 * a.trace();
  const double q2 = m * m - a.determinant();
  const Matrix2 b = a - m * Matrix2::Identity();
  const double x = q2 * t * t;
  double c = 0.0;  // cosh(q t)
  double s = 0.0;  // sinh(q t) / q
  if (std::abs(x) < 1e-2) {
    double term = 1.0;
    for (int k = 0; k < 12; ++k) {
      c += term / std::tgamma(2.0 * k + 1.0);
      s += term / std::tgamma(2.0 * k + 2.0);
      term *= x;
    }
    s *= t;
  } else if (q2 > 0.0) {
    const double q = std::sqrt(q2);
    c = std::cosh(q * t);
    s = std::sinh(q * t) / q;
  } else {
    const double q = std::sqrt(-q2);
    c = std::cos(q * t);
    s = std::sin(q * t) / q;
  }
  return std::exp(m * t) * (c * Matrix2::Identity() + s * b);
}

namespace {

Matrix2 clamp_psd(const Matrix2& cov) {
  const Matrix2 sym = 0.5 * (cov + cov.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix2> eig(sym);
  Vector2 ev = eig.eigenvalues();
  for (Index i = 0; i < 2; ++i) {
    if (ev[i] < 0.0) ev[i] = 0.0;
  }
  return eig.eigenvectors() * ev.asDiagonal() * eig.eigenvectors().transpose();
}

// Symmetric square root-like factor L with L L^T = cov; survives rank loss.
Matrix2 psd_factor(const Matrix2& cov) {
  Eigen::SelfAdjointEigenSolver<Matrix2> eig(0.5 * (cov + cov.transpose()));
  const Vector2 ev = eig.eigenvalues().cwiseMax(0.0);
  return eig.eigenvectors() * ev.cwiseSqrt().asDiagonal();
}

}  // namespace

Gaussian2 toy_transition(const Vector2& z0, double eta, const ToyParams& p, double center) {
  p.validate();
  if (!(eta >= 0.0)) throw ContractError("toy_transition: eta must be >= 0");
  const Matrix2 e = matexp2(p.drift(), eta);
  const Vector2 c(0.0, center);
  const Matrix2 s = p.stationary_cov();
  return {e * (z0 - c) + c, clamp_psd(s - e * s * e.transpose())};
}

std::string_view to_string(ToyMode mode) {
  return mode == ToyMode::kFull ? "full" : "minibatch";
}

ToyKernel::ToyKernel(const ToyParams& p, double eta, ToyMode mode)
    : p_(p), eta_(eta), mode_(mode) {
  p_.validate();
  if (!(eta > 0.0)) throw ConfigError("toy: eta must be > 0");
  e_ = matexp2(p_.drift(), eta_);
  const Matrix2 s = p_.stationary_cov();
  l_ = psd_factor(s - e_ * s * e_.transpose());
}

Vector2 ToyKernel::step(const Vector2& z, RngStream& rng) const {
  double center = p_.mean();
  if (mode_ == ToyMode::kMinibatch) center = p_.batch_center(rng.uniform() < 0.5 ? 0 : 1);
  const Vector2 c(0.0, center);
  const double w0 = rng.normal();
  const double w1 = rng.normal();
  return e_ * (z - c) + c + l_ * Vector2(w0, w1);
}

Vector2 toy_exact_step(const Vector2& z0, double eta, const ToyParams& p, ToyMode mode,
                       RngStream& rng) {
  if (eta == 0.0) return z0;
  return ToyKernel(p, eta, mode).step(z0, rng);
}

std::pair<double, double> toy_posterior(const ToyParams& p) {
  p.validate();
  return {p.mean(), p.sigma_l2()};
}

Trace run_toy_chain(const ToyParams& p, double eta, ToyMode mode, const ChainConfig& cfg) {
  const ToyKernel kernel(p, eta, mode);
  RngStream rng(cfg.seed, cfg.stream);
  State init;
  if (cfg.init) {
    if (cfg.init->dim() != 1) throw ConfigError("toy: initial state must be 1-D");
    init = *cfg.init;
  } else {
    const double theta = std::sqrt(p.sigma_theta2) * rng.normal();
    const double r = rng.normal();
    init = State(Vector::Constant(1, r), Vector::Constant(1, theta));
  }
  KernelStep step = [&](State& z) {
    const Vector2 next = kernel.step(Vector2(z.r[0], z.theta[0]), rng);
    z.r[0] = next[0];
    z.theta[0] = next[1];
  };
  Metadata meta{{"model", "toy"},
                {"scheme", "exact"},
                {"mode", std::string(to_string(mode))},
                {"x1", format_double(p.x1)},
                {"x2", format_double(p.x2)},
                {"sigma_x2", format_double(p.sigma_x2)},
                {"sigma_theta2", format_double(p.sigma_theta2)},
                {"C", format_double(p.friction)},
                {"eta", format_double(eta)},
                {"n", std::to_string(cfg.n_samples)},
                {"burn_in", std::to_string(cfg.burn_in)},
                {"thin", std::to_string(cfg.thinning)},
                {"seed", std::to_string(cfg.seed)},
                {"stream", std::to_string(cfg.stream)},
                {"init", cfg.init ? "fixed" : "prior"}};
  return collect_chain(step, std::move(init), cfg, eta, std::move(meta));
}

}  // namespace shmc
