#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <cmath>

#include "shmc/coupled_reference.hpp"
#include "shmc/metrics.hpp"
#include "shmc/operator_lab.hpp"

using namespace shmc;

namespace {

PotentialPtr regression() {
  RngStream rng(1, 0);
  return make_linear_gaussian(make_synthetic_regression(SyntheticRegression{}, rng));
}

Matrix exact_stationary(const Potential& pot, const MassMatrix& m) {
  const Index d = pot.dim();
  Matrix s = Matrix::Zero(2 * d, 2 * d);
  s.topLeftCorner(d, d) = m.diag().asDiagonal();
  s.bottomRightCorner(d, d) = pot.analytic_posterior().covariance;
  return s;
}

const Scheme kCoupled[] = {Scheme::kEuler,     Scheme::kLeapfrog,  Scheme::kSpv, Scheme::kLieTrotter,
                           Scheme::kSymmetric, Scheme::kMt3,       Scheme::kSghmc};

}  // namespace

TEST(CoupledReference, PropagatorAndTransitionCov) {
  const auto pot = regression();
  const MassMatrix m((Vector(2) << 1.0, 2.0).finished());
  const IntegratorSpec spec(Scheme::kLieTrotter, 0.05, 3.0, m, 2);
  const CoupledGaussianReference ref(*pot, spec);
  const Matrix h = quadratic_hessian(*pot);
  Matrix a = Matrix::Zero(4, 4);
  a.topLeftCorner(2, 2) = (-3.0 * m.inverse()).asDiagonal();
  a.topRightCorner(2, 2) = -h;
  a.bottomLeftCorner(2, 2) = m.inverse().asDiagonal();
  EXPECT_LT((ref.propagator() - oplab::matrix_exp(0.1 * a)).norm(), 1e-13);
  const Matrix s = exact_stationary(*pot, m);
  const Matrix& e = ref.propagator();
  EXPECT_LT((e * s * e.transpose() + ref.transition_cov() - s).norm(), 1e-13);
}

TEST(CoupledReference, SharedPartFitsInsideTransitionCov) {
  const auto pot = regression();
  for (Scheme sc : kCoupled) {
    const IntegratorSpec spec(sc, 0.04, 5.0, MassMatrix::identity(2));
    const CoupledGaussianReference ref(*pot, spec);
    const Matrix resid = ref.transition_cov() - ref.loading() * ref.loading().transpose();
    Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (resid + resid.transpose()));
    EXPECT_GT(eig.eigenvalues().minCoeff(), -1e-9) << to_string(sc);
    const Matrix l = ref.residual_factor();
    EXPECT_LT((l * l.transpose() - resid).norm(), 1e-9) << to_string(sc);
  }
}

TEST(CoupledReference, ProjectedPlusResidualIsExact) {
  const auto pot = regression();
  const Matrix s = exact_stationary(*pot, MassMatrix::identity(2));
  for (Scheme sc : kCoupled) {
    const IntegratorSpec spec(sc, 0.02, 5.0, MassMatrix::identity(2));
    const CoupledGaussianReference ref(*pot, spec);
    const Matrix proj = solve_discrete_lyapunov(
        ref.propagator(), ref.loading() * ref.loading().transpose());
    EXPECT_LT((proj + ref.residual_stationary_cov() - s).norm(), 1e-8) << to_string(sc);
  }
}

TEST(CoupledReference, AdvanceHasExactLaw) {
  const auto pot = regression();
  const IntegratorSpec spec(Scheme::kMt3, 0.2, 2.0, MassMatrix::identity(2));
  CoupledGaussianReference ref(*pot, spec);
  const State z0(Vector::Ones(2), Vector::Constant(2, -1.0));
  const GaussianPosterior post = pot->analytic_posterior();
  Vector c = Vector::Zero(4);
  c.tail(2) = post.mean;
  const Vector mean = c + ref.propagator() * (z0.stacked() - c);
  RngStream noise_rng(1, 0), rng(1, 1);
  const int n = 100000;
  MomentAccumulator acc(4);
  Matrix w(2, 2);
  for (int i = 0; i < n; ++i) {
    ref.reset(z0);
    for (Index j = 0; j < 2; ++j) w.col(j) = standard_normal_vector(noise_rng, 2);
    ref.advance(w, rng);
    acc.add(ref.stacked());
  }
  const Vector var = ref.transition_cov().diagonal();
  for (Index i = 0; i < 4; ++i) {
    EXPECT_NEAR(acc.mean()[i], mean[i], 5 * std::sqrt(var[i] / n)) << i;
    EXPECT_NEAR(acc.variance()[i], var[i], 5 * var[i] * std::sqrt(2.0 / n)) << i;
  }
}

// The coupled difference estimates the exact stationary variance error.
TEST(CoupledReference, CoupledEstimateMatchesLyapunov) {
  const auto pot = regression();
  for (Scheme sc : {Scheme::kLieTrotter, Scheme::kSymmetric, Scheme::kEuler}) {
    const IntegratorSpec spec(sc, 0.04, 5.0, MassMatrix::identity(2));
    const double exact =
        stationary_moments(*pot, spec).cov(2, 2) - pot->analytic_posterior().covariance(0, 0);
    CoupledGaussianReference ref(*pot, spec);
    const double resid = ref.residual_stationary_cov()(2, 2);
    std::vector<double> reps;
    for (int rep = 0; rep < 4; ++rep) {
      RngStream rng(10 + rep, 0);
      State z(standard_normal_vector(rng, 2), pot->analytic_posterior().mean);
      ref.reset(z);
      Stepper stepper(spec);
      BoundGradient grad(*pot);
      Matrix noise(2, spec.noise_draws());
      MomentAccumulator num(1), rf(1);
      for (int i = 0; i < 150000; ++i) {
        stepper.draw_noise(rng, noise);
        stepper.advance(z, grad, noise);
        ref.advance_projected(noise);
        if (i < 2000) continue;
        num.add(z.theta.head(1));
        rf.add(ref.stacked().segment(2, 1));
      }
      reps.push_back(num.variance()[0] - rf.variance()[0] - resid);
    }
    double m = 0, s2 = 0;
    for (double r : reps) m += r / reps.size();
    for (double r : reps) s2 += (r - m) * (r - m) / (reps.size() - 1);
    const double se = std::sqrt(s2 / reps.size());
    EXPECT_NEAR(m, exact, std::max(5 * se, 0.1 * std::abs(exact))) << to_string(sc);
  }
}

TEST(CoupledReference, Contracts) {
  const auto pot = regression();
  EXPECT_THROW(CoupledGaussianReference(
                   *pot, IntegratorSpec(Scheme::kLeapfrog, 0.1, 0.0, MassMatrix::identity(2))),
               ConfigError);
  EXPECT_THROW(CoupledGaussianReference(
                   *pot, IntegratorSpec(Scheme::kLeapfrog, 0.1, 1.0, MassMatrix::identity(3))),
               ConfigError);
  CoupledGaussianReference ref(*pot, IntegratorSpec(Scheme::kLeapfrog, 0.1, 1.0,
                                                    MassMatrix::identity(2)));
  EXPECT_THROW(ref.advance_projected(Matrix::Zero(2, 2)), ContractError);
  EXPECT_THROW(solve_discrete_lyapunov(2 * Matrix::Identity(2, 2), Matrix::Identity(2, 2)),
               ContractError);
}
