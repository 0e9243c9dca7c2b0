#include <gtest/gtest.h>

#include <cmath>

#include "shmc/coupled_reference.hpp"
#include "shmc/integrators.hpp"
#include "shmc/operator_lab.hpp"

using namespace shmc;

namespace {

// Anharmonic test potential U = sum(theta^2 / 2 + theta^4 / 40).
FunctionGradient quartic(Index d) {
  return FunctionGradient(
      d, [](const Vector& t) -> Vector { return t + 0.1 * t.array().cube().matrix(); },
      [](const Vector& t, const Vector& v) -> Vector {
        return (1.0 + 0.3 * t.array().square()).matrix().cwiseProduct(v);
      });
}

Vector g(const GradientField& f, const Vector& t) {
  Vector out;
  f.gradient(t, out);
  return out;
}

// Reference updates written straight from the scheme definitions.
State ref_euler(const State& z, const GradientField& f, const IntegratorSpec& s, const Matrix& w) {
  const Vector& mi = s.mass.inverse();
  State out = z;
  out.theta = z.theta + s.eta * mi.cwiseProduct(z.r);
  out.r = z.r - s.eta * s.friction * mi.cwiseProduct(z.r) - s.eta * g(f, z.theta) +
          std::sqrt(2 * s.friction * s.eta) * w.col(0);
  return out;
}

State ref_leapfrog(const State& z, const GradientField& f, const IntegratorSpec& s, const Matrix& w,
                   double noise_var) {
  const Vector& mi = s.mass.inverse();
  const Vector ts = z.theta + 0.5 * s.eta * mi.cwiseProduct(z.r);
  State out = z;
  out.r = z.r - s.eta * g(f, ts) - s.eta * s.friction * mi.cwiseProduct(z.r) +
          std::sqrt(noise_var * s.eta) * w.col(0);
  out.theta = ts + 0.5 * s.eta * mi.cwiseProduct(out.r);
  return out;
}

Vector ref_ou(const Vector& r, double t, const IntegratorSpec& s, const Vector& w) {
  const Vector x = s.friction * t * s.mass.inverse();
  const Vector a = (-x.array()).exp();
  const Vector sd = (s.mass.diag().array() * (1.0 - (-2.0 * x.array()).exp())).sqrt();
  return a.cwiseProduct(r) + sd.cwiseProduct(w);
}

State ref_det_leapfrog(State z, const GradientField& f, const IntegratorSpec& s) {
  const Vector& mi = s.mass.inverse();
  const Vector ts = z.theta + 0.5 * s.eta * mi.cwiseProduct(z.r);
  z.r = z.r - s.eta * g(f, ts);
  z.theta = ts + 0.5 * s.eta * mi.cwiseProduct(z.r);
  return z;
}

State ref_spv(const State& z, const GradientField& f, const IntegratorSpec& s, const Matrix& w) {
  const Vector& mi = s.mass.inverse();
  const Vector ts = z.theta + 0.5 * s.eta * mi.cwiseProduct(z.r);
  const Vector x = s.friction * s.eta * mi;
  const Vector a = (-x.array()).exp();
  State out = z;
  out.r = ref_ou(z.r, s.eta, s, w.col(0)) -
          ((1.0 - a.array()) * s.mass.diag().array() / s.friction * g(f, ts).array()).matrix();
  out.theta = ts + 0.5 * s.eta * mi.cwiseProduct(out.r);
  return out;
}

State ref_lie_trotter(State z, const GradientField& f, const IntegratorSpec& s, const Matrix& w) {
  for (int i = 0; i < s.inner_steps; ++i) z = ref_det_leapfrog(z, f, s);
  z.r = ref_ou(z.r, s.inner_steps * s.eta, s, w.col(0));
  return z;
}

State ref_symmetric(State z, const GradientField& f, const IntegratorSpec& s, const Matrix& w) {
  z.r = ref_ou(z.r, 0.5 * s.eta, s, w.col(0));
  z = ref_det_leapfrog(z, f, s);
  z.r = ref_ou(z.r, 0.5 * s.eta, s, w.col(1));
  return z;
}

IntegratorSpec spec_for(Scheme s, double eta = 0.05, double c = 1.5, Index d = 3) {
  const MassMatrix m = s == Scheme::kHmcPartial
                           ? MassMatrix::identity(d)
                           : MassMatrix(Vector::LinSpaced(d, 0.5, 2.0));
  return IntegratorSpec(s, eta, c, m, s == Scheme::kLieTrotter ? 3 : 1, 0.0);
}

Matrix random_noise(RngStream& rng, const IntegratorSpec& s) {
  Matrix w(s.dim(), s.noise_draws());
  for (Index c = 0; c < w.cols(); ++c) w.col(c) = standard_normal_vector(rng, s.dim());
  return w;
}

State random_state(RngStream& rng, Index d) {
  return State(standard_normal_vector(rng, d), standard_normal_vector(rng, d));
}

void expect_state_near(const State& a, const State& b, double tol) {
  EXPECT_LE((a.stacked() - b.stacked()).cwiseAbs().maxCoeff(), tol);
}

const Scheme kAllSchemes[] = {Scheme::kEuler,     Scheme::kLeapfrog, Scheme::kSpv,
                              Scheme::kLieTrotter, Scheme::kSymmetric, Scheme::kMt3,
                              Scheme::kSghmc,     Scheme::kHmcPartial};

}  // namespace

TEST(Integrators, NamesRoundTrip) {
  for (Scheme s : kAllSchemes) EXPECT_EQ(parse_scheme(to_string(s)), s);
  EXPECT_THROW(parse_scheme("rk4"), ConfigError);
}

TEST(Integrators, MatchReferenceUpdates) {
  RngStream rng(5, 0);
  const FunctionGradient f = quartic(3);
  for (int t = 0; t < 20; ++t) {
    const State z = random_state(rng, 3);
    {
      const auto s = spec_for(Scheme::kEuler);
      const Matrix w = random_noise(rng, s);
      expect_state_near(step_with_noise(z, f, s, w), ref_euler(z, f, s, w), 1e-13);
    }
    {
      const auto s = spec_for(Scheme::kLeapfrog);
      const Matrix w = random_noise(rng, s);
      expect_state_near(step_with_noise(z, f, s, w), ref_leapfrog(z, f, s, w, 2 * s.friction),
                        1e-13);
    }
    {
      IntegratorSpec s = spec_for(Scheme::kSghmc);
      s.v_hat = 0.5;
      const Matrix w = random_noise(rng, s);
      expect_state_near(step_with_noise(z, f, s, w),
                        ref_leapfrog(z, f, s, w, 2 * (s.friction - s.v_hat)), 1e-13);
    }
    {
      const auto s = spec_for(Scheme::kSpv);
      const Matrix w = random_noise(rng, s);
      expect_state_near(step_with_noise(z, f, s, w), ref_spv(z, f, s, w), 1e-13);
    }
    {
      const auto s = spec_for(Scheme::kLieTrotter);
      const Matrix w = random_noise(rng, s);
      expect_state_near(step_with_noise(z, f, s, w), ref_lie_trotter(z, f, s, w), 1e-13);
    }
    {
      const auto s = spec_for(Scheme::kSymmetric);
      const Matrix w = random_noise(rng, s);
      expect_state_near(step_with_noise(z, f, s, w), ref_symmetric(z, f, s, w), 1e-13);
    }
  }
}

TEST(Integrators, HandEvaluatedSteps) {
  const FunctionGradient f(1, [](const Vector& t) -> Vector { return t; });
  const State z((Vector(1) << 0.0).finished(), (Vector(1) << 1.0).finished());
  const Matrix w = Matrix::Zero(1, 1);
  const IntegratorSpec lf(Scheme::kLeapfrog, 0.1, 0.0, MassMatrix::identity(1));
  const State a = step_with_noise(z, f, lf, w);
  EXPECT_NEAR(a.r[0], -0.1, 1e-15);
  EXPECT_NEAR(a.theta[0], 0.995, 1e-15);
  const IntegratorSpec eu(Scheme::kEuler, 0.1, 0.0, MassMatrix::identity(1));
  const State b = step_with_noise(z, f, eu, w);
  EXPECT_NEAR(b.r[0], -0.1, 1e-15);
  EXPECT_NEAR(b.theta[0], 1.0, 1e-15);
}

TEST(Integrators, OuExactStep) {
  const MassMatrix m = MassMatrix::identity(1);
  const Vector r = Vector::Ones(1);
  const Vector zero = Vector::Zero(1);
  EXPECT_NEAR(ou_exact_step(r, zero, 0.5, 1.0, m, zero)[0], std::exp(-0.5), 1e-15);
  EXPECT_NEAR(ou_exact_step(zero, zero, 0.5, 1.0, m, r)[0], std::sqrt(1 - std::exp(-1.0)), 1e-15);
  EXPECT_EQ(ou_exact_step(r, zero, 0.0, 1.0, m, r)[0], 1.0);
  // C = 0 is the deterministic limit r - eta f.
  const Vector f = Vector::Constant(1, 2.0);
  EXPECT_NEAR(ou_exact_step(r, f, 0.3, 0.0, m, r)[0], 1.0 - 0.6, 1e-15);
  // Small C approaches the same limit.
  EXPECT_NEAR(ou_exact_step(r, f, 0.3, 1e-9, m, zero)[0], 0.4, 1e-8);
  // Forcing: stationary point of the drift is -f M / C.
  const Vector mu = Vector::Constant(1, -2.0 / 3.0);
  EXPECT_NEAR(ou_exact_step(mu, f, 0.7, 3.0, m, zero)[0], mu[0], 1e-14);
}

TEST(Integrators, OuSemigroup) {
  const MassMatrix m((Vector(2) << 0.5, 3.0).finished());
  const double c = 1.3, t1 = 0.2, t2 = 0.45;
  const Vector r = (Vector(2) << 1.0, -2.0).finished();
  const Vector zero = Vector::Zero(2);
  const Vector two = ou_exact_step(ou_exact_step(r, zero, t1, c, m, zero), zero, t2, c, m, zero);
  EXPECT_LT((two - ou_exact_step(r, zero, t1 + t2, c, m, zero)).norm(), 1e-15);
  // Variances compose: a2^2 v1 + v2 = v12.
  for (Index i = 0; i < 2; ++i) {
    const Vector e = Vector::Unit(2, i);
    const double s1 = ou_exact_step(zero, zero, t1, c, m, e)[i];
    const double s2 = ou_exact_step(zero, zero, t2, c, m, e)[i];
    const double a2 = ou_exact_step(e, zero, t2, c, m, zero)[i];
    const double s12 = ou_exact_step(zero, zero, t1 + t2, c, m, e)[i];
    EXPECT_NEAR(a2 * a2 * s1 * s1 + s2 * s2, s12 * s12, 1e-12);
  }
}

TEST(Integrators, OuLongTimeIsStationary) {
  const MassMatrix m((Vector(1) << 2.0).finished());
  RngStream rng(17, 0);
  const int n = 1000000;
  double s = 0, s2 = 0;
  const Vector r = Vector::Constant(1, 5.0), zero = Vector::Zero(1);
  for (int i = 0; i < n; ++i) {
    const double x = ou_exact_step(r, zero, 50.0, 1.0, m, rng)[0];
    s += x;
    s2 += x * x;
  }
  const double var = s2 / n - (s / n) * (s / n);
  EXPECT_NEAR(s / n, 0.0, 4 * std::sqrt(2.0 / n));
  EXPECT_NEAR(var, 2.0, 4 * 2.0 * std::sqrt(2.0 / n));
}

TEST(Integrators, ZeroStepIsIdentity) {
  RngStream rng(6, 0);
  const FunctionGradient f = quartic(3);
  const State z = random_state(rng, 3);
  for (Scheme sc : kAllSchemes) {
    const auto s = spec_for(sc, 0.0);
    const Matrix w = random_noise(rng, s);
    expect_state_near(step_with_noise(z, f, s, w), z, 0.0);
  }
}

TEST(Integrators, FreeFlight) {
  const FunctionGradient f(2, [](const Vector& t) -> Vector { return Vector::Zero(t.size()); },
                           [](const Vector&, const Vector& v) -> Vector { return 0 * v; });
  const State z((Vector(2) << 1.0, -2.0).finished(), (Vector(2) << 0.3, 0.1).finished());
  for (Scheme sc : kAllSchemes) {
    if (sc == Scheme::kSpv) continue;  // needs C > 0
    IntegratorSpec s(sc, 0.1, 0.0, MassMatrix::identity(2));
    const Matrix w = Matrix::Zero(2, s.noise_draws());
    const State out = step_with_noise(z, f, s, w);
    EXPECT_LT((out.r - z.r).norm(), 1e-15) << to_string(sc);
    EXPECT_LT((out.theta - z.theta - 0.1 * z.r).norm(), 1e-15) << to_string(sc);
  }
}

TEST(Integrators, NoiseFrozenReductions) {
  RngStream rng(7, 0);
  const FunctionGradient f = quartic(3);
  const State z = random_state(rng, 3);
  const auto lt = spec_for(Scheme::kLieTrotter);
  // Deterministic leapfrog followed by exponential decay.
  State expect = z;
  for (int i = 0; i < lt.inner_steps; ++i) expect = ref_det_leapfrog(expect, f, lt);
  expect.r = lt.mass.decay(lt.friction, lt.inner_steps * lt.eta).cwiseProduct(expect.r);
  expect_state_near(step_with_noise(z, f, lt, Matrix::Zero(3, 1)), expect, 1e-14);

  const auto sym = spec_for(Scheme::kSymmetric);
  State e2 = z;
  e2.r = sym.mass.decay(sym.friction, 0.5 * sym.eta).cwiseProduct(e2.r);
  e2 = ref_det_leapfrog(e2, f, sym);
  e2.r = sym.mass.decay(sym.friction, 0.5 * sym.eta).cwiseProduct(e2.r);
  expect_state_near(step_with_noise(z, f, sym, Matrix::Zero(3, 2)), e2, 1e-14);

  const auto lf = spec_for(Scheme::kLeapfrog);
  IntegratorSpec sg = spec_for(Scheme::kSghmc);
  expect_state_near(step_with_noise(z, f, lf, Matrix::Zero(3, 1)),
                    step_with_noise(z, f, sg, Matrix::Zero(3, 1)), 0.0);
}

TEST(Integrators, SpvSmallFrictionLimitIsLeapfrogMomentum) {
  const FunctionGradient f = quartic(2);
  const State z((Vector(2) << 0.4, -1.0).finished(), (Vector(2) << 1.0, 0.5).finished());
  const IntegratorSpec spv(Scheme::kSpv, 0.1, 1e-9, MassMatrix::identity(2));
  const IntegratorSpec det(Scheme::kLeapfrog, 0.1, 0.0, MassMatrix::identity(2));
  expect_state_near(step_with_noise(z, f, spv, Matrix::Zero(2, 1)),
                    step_with_noise(z, f, det, Matrix::Zero(2, 1)), 1e-9);
}

TEST(Integrators, HmcPartialIsLieTrotterBitForBit) {
  const FunctionGradient f = quartic(3);
  for (int nl : {1, 4}) {
    const IntegratorSpec lt(Scheme::kLieTrotter, 0.03, 2.0, MassMatrix::identity(3), nl);
    const IntegratorSpec hmc(Scheme::kHmcPartial, 0.03, 2.0, MassMatrix::identity(3), nl);
    RngStream a(11, 2), b(11, 2), init(3, 0);
    State za = random_state(init, 3), zb = za;
    Stepper sa(lt), sb(hmc);
    for (int i = 0; i < 500; ++i) {
      sa.step(za, f, a);
      sb.step(zb, f, b);
    }
    EXPECT_EQ(za, zb);
  }
}

TEST(Integrators, SghmcNoiseAmplitude) {
  const FunctionGradient f(1, [](const Vector& t) -> Vector { return 0 * t; });
  IntegratorSpec s(Scheme::kSghmc, 0.01, 5.0, MassMatrix::identity(1), 1, 1.0);
  const State z(Vector::Zero(1), Vector::Zero(1));
  const State out = step_with_noise(z, f, s, Matrix::Ones(1, 1));
  EXPECT_NEAR(out.r[0], std::sqrt(0.08), 1e-15);
  s.v_hat = 5.0;
  EXPECT_EQ(step_with_noise(z, f, s, Matrix::Ones(1, 1)).r[0], 0.0);
}

TEST(Integrators, MethodChecksSchemes) {
  const FunctionGradient f = quartic(1);
  RngStream rng(1, 0);
  const State z(Vector::Ones(1), Vector::Ones(1));
  const IntegratorSpec lf(Scheme::kLeapfrog, 0.1, 1.0, MassMatrix::identity(1));
  EXPECT_THROW(euler_step(z, f, lf, rng), ContractError);
  EXPECT_NO_THROW(leapfrog_step(z, f, lf, rng));
}

TEST(Integrators, SpecValidation) {
  const auto bad = [](IntegratorSpec s) { EXPECT_THROW(s.validate(), ConfigError); };
  bad(IntegratorSpec(Scheme::kLeapfrog, -0.1, 1.0, MassMatrix::identity(1)));
  bad(IntegratorSpec(Scheme::kLeapfrog, 0.1, -1.0, MassMatrix::identity(1)));
  bad(IntegratorSpec(Scheme::kLieTrotter, 0.1, 1.0, MassMatrix::identity(1), 0));
  bad(IntegratorSpec(Scheme::kSghmc, 0.1, 1.0, MassMatrix::identity(1), 1, 2.0));
  bad(IntegratorSpec(Scheme::kHmcPartial, 0.1, 1.0, MassMatrix(Vector::Constant(1, 2.0))));
  EXPECT_NO_THROW(IntegratorSpec(Scheme::kLieTrotter, 0.0, 0.0, MassMatrix::identity(1)).validate());
  const IntegratorSpec lt(Scheme::kLieTrotter, 0.01, 5.0, MassMatrix::identity(1), 10);
  EXPECT_NEAR(lt.step_duration(), 0.1, 1e-16);
  EXPECT_NEAR(std::exp(-lt.friction * lt.step_duration()), 0.60653065971263342, 1e-15);
}

TEST(Integrators, Mt3NeedsHessian) {
  const FunctionGradient f(1, [](const Vector& t) -> Vector { return t; });
  const IntegratorSpec s(Scheme::kMt3, 0.1, 1.0, MassMatrix::identity(1));
  EXPECT_THROW(step_with_noise(State(Vector::Ones(1), Vector::Ones(1)), f, s, Matrix::Zero(1, 2)),
               ConfigError);
}

TEST(Integrators, DivergenceCarriesState) {
  const FunctionGradient f(1, [](const Vector& t) -> Vector { return 1e308 * t; });
  Stepper s(IntegratorSpec(Scheme::kEuler, 1.0, 0.0, MassMatrix::identity(1)));
  State z(Vector::Constant(1, 1e10), Vector::Constant(1, 1e10));
  try {
    s.advance(z, f, Matrix::Zero(1, 1));
    FAIL() << "expected divergence";
  } catch (const DivergenceError& e) {
    EXPECT_EQ(e.scheme(), Scheme::kEuler);
    EXPECT_FALSE(e.state().finite());
  }
}

// Local error of the one-step law on a Gaussian target, against the exact
// linear SDE: the mean and covariance of z(eta) come from the matrix
// exponential of the drift and a fine quadrature of the noise integral.
TEST(Integrators, LocalWeakOrderOnGaussianTarget) {
  const double c = 1.0;
  const double hess = 2.0;
  const FunctionGradient f(1, [=](const Vector& t) -> Vector { return hess * t; },
                           [=](const Vector&, const Vector& v) -> Vector { return hess * v; });
  Matrix a(2, 2);
  a << -c, -hess, 1.0, 0.0;
  auto exact = [&](double eta, Matrix& fe, Matrix& q) {
    fe = oplab::matrix_exp(eta * a);
    const int panels = 4000;
    q.setZero(2, 2);
    for (int k = 0; k <= panels; ++k) {
      const double s = eta * k / panels;
      const double w = (k == 0 || k == panels) ? 1 : (k % 2 ? 4 : 2);
      const Vector col = oplab::matrix_exp(s * a).col(0);
      q += w * 2 * c * col * col.transpose();
    }
    q *= eta / panels / 3.0;
  };
  struct Expect {
    Scheme s;
    double min_slope;
  };
  // Local error of the one-step law. Leapfrog and Lie-Trotter put all noise
  // into r, so their local covariance error is eta^2.
  for (const Expect e : {Expect{Scheme::kEuler, 1.8}, Expect{Scheme::kLeapfrog, 1.8},
                         Expect{Scheme::kSpv, 2.8}, Expect{Scheme::kLieTrotter, 1.8},
                         Expect{Scheme::kSymmetric, 2.8}, Expect{Scheme::kMt3, 3.8}}) {
    std::vector<double> etas, errs;
    for (double eta : {0.08, 0.04, 0.02, 0.01}) {
      const IntegratorSpec spec(e.s, eta, c, MassMatrix::identity(1));
      const AffineStep step = affine_step_map(f, spec);
      Matrix fe, q;
      exact(eta, fe, q);
      const double err = std::max((step.f - fe).norm(), (step.g * step.g.transpose() - q).norm());
      etas.push_back(eta);
      errs.push_back(err);
    }
    const auto fit = oplab::error_order_slope(etas, errs);
    EXPECT_GE(fit.slope, e.min_slope) << to_string(e.s);
  }
}

TEST(Integrators, StationaryVarianceOrders) {
  RngStream rng(1, 0);
  SyntheticRegression cfg;
  const auto pot = make_linear_gaussian(make_synthetic_regression(cfg, rng));
  const GaussianPosterior post = pot->analytic_posterior();
  struct Expect {
    Scheme s;
    double lo, hi;
  };
  for (const Expect e : {Expect{Scheme::kEuler, 0.8, 1.3}, Expect{Scheme::kLeapfrog, -1, 1e9},
                         Expect{Scheme::kSpv, 1.8, 2.2}, Expect{Scheme::kLieTrotter, 1.9, 2.1},
                         Expect{Scheme::kSymmetric, 1.9, 2.1}, Expect{Scheme::kMt3, 2.7, 3.3}}) {
    std::vector<double> etas, errs;
    for (double eta : {0.04, 0.02, 0.01, 0.005}) {
      const IntegratorSpec spec(e.s, eta, 5.0, MassMatrix::identity(2));
      const StationaryMoments sm = stationary_moments(*pot, spec);
      const Matrix cov = sm.cov.bottomRightCorner(2, 2);
      etas.push_back(eta);
      errs.push_back((cov.diagonal() - post.covariance.diagonal()).cwiseAbs().maxCoeff());
    }
    if (e.s == Scheme::kLeapfrog) {
      // Stochastic leapfrog keeps the position marginal exact on a Gaussian.
      EXPECT_LT(errs.back(), 1e-10);
      continue;
    }
    const auto fit = oplab::error_order_slope(etas, errs);
    EXPECT_GT(fit.slope, e.lo) << to_string(e.s);
    EXPECT_LT(fit.slope, e.hi) << to_string(e.s);
  }
}

// Drift-kick-drift leapfrog conserves h theta^2 / (1 - eta^2 h / 4) + r^2 and
// the refresh keeps r ~ N(0, 1), so the theta variance is 1/h - eta^2/4.
TEST(Integrators, LieTrotterStationaryVarianceClosedForm) {
  const double h = 3.0;
  const FunctionGradient f(1, [=](const Vector& t) -> Vector { return h * t; },
                           [=](const Vector&, const Vector& v) -> Vector { return h * v; });
  for (double eta : {0.2, 0.1, 0.05}) {
    const IntegratorSpec spec(Scheme::kLieTrotter, eta, 2.0, MassMatrix::identity(1));
    const AffineStep step = affine_step_map(f, spec);
    const Matrix s = solve_discrete_lyapunov(step.f, step.g * step.g.transpose());
    EXPECT_NEAR(s(1, 1), 1.0 / h - eta * eta / 4.0, 1e-10);
    EXPECT_NEAR(s(0, 0), 1.0, 1e-10);
  }
}
