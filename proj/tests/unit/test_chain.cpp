#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "shmc/chain.hpp"
#include "shmc/csv_io.hpp"
#include "shmc/metrics.hpp"

using namespace shmc;

namespace {

PotentialPtr regression(std::size_t k = 1) {
  RngStream rng(1, 0);
  return make_linear_gaussian(make_synthetic_regression(SyntheticRegression{}, rng), k);
}

ChainConfig small_chain(std::size_t n = 50, std::size_t thin = 7) {
  ChainConfig c;
  c.n_samples = n;
  c.burn_in = 13;
  c.thinning = thin;
  c.seed = 42;
  return c;
}

}  // namespace

TEST(Chain, KeepsEveryThinnedStep) {
  const auto pot = regression();
  const IntegratorSpec spec(Scheme::kLeapfrog, 0.01, 5.0, MassMatrix::identity(2));
  BatchSchedule sched(BatchMode::kFull, 1, RngStream(42, 1));
  const Trace t = run_chain(*pot, spec, sched, small_chain());
  ASSERT_EQ(t.size(), 50u);
  EXPECT_EQ(t.steps.front(), 20u);
  EXPECT_EQ(t.steps.back(), 13u + 50 * 7);
  EXPECT_EQ(t.total_steps, 13u + 50 * 7);
  EXPECT_NEAR(t.effective_time, 0.01 * t.total_steps, 1e-12);
}

TEST(Chain, LieTrotterTimeCountsInnerSteps) {
  const auto pot = regression();
  const IntegratorSpec spec(Scheme::kLieTrotter, 0.01, 5.0, MassMatrix::identity(2), 10);
  BatchSchedule sched(BatchMode::kFull, 1, RngStream(42, 1));
  const Trace t = run_chain(*pot, spec, sched, small_chain(5, 2));
  EXPECT_NEAR(t.effective_time, 0.1 * t.total_steps, 1e-12);
}

TEST(Chain, Deterministic) {
  const auto pot = regression(4);
  const IntegratorSpec spec(Scheme::kMt3, 0.02, 5.0, MassMatrix::identity(2));
  BatchSchedule s1(BatchMode::kPermutation, 4, RngStream(42, 1));
  BatchSchedule s2(BatchMode::kPermutation, 4, RngStream(42, 1));
  const Trace a = run_chain(*pot, spec, s1, small_chain());
  const Trace b = run_chain(*pot, spec, s2, small_chain());
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a.states[i], b.states[i]);
}

TEST(Chain, ObserverSeesEveryStep) {
  const auto pot = regression();
  const IntegratorSpec spec(Scheme::kSymmetric, 0.01, 5.0, MassMatrix::identity(2));
  BatchSchedule sched(BatchMode::kFull, 1, RngStream(42, 1));
  std::size_t calls = 0;
  const Trace t = run_chain(*pot, spec, sched, small_chain(), [&](std::size_t step, const State&,
                                                                  const Matrix& noise) {
    ++calls;
    EXPECT_EQ(step, calls);
    EXPECT_EQ(noise.cols(), 2);
  });
  EXPECT_EQ(calls, t.total_steps);
}

TEST(Chain, FixedInitIsUsed) {
  const auto pot = regression();
  const IntegratorSpec spec(Scheme::kLeapfrog, 0.01, 5.0, MassMatrix::identity(2));
  ChainConfig c = small_chain(1, 1);
  c.burn_in = 0;
  c.init = State(Vector::Zero(2), Vector::Constant(2, 100.0));
  BatchSchedule sched(BatchMode::kFull, 1, RngStream(42, 1));
  const Trace t = run_chain(*pot, spec, sched, c);
  EXPECT_NEAR(t.states[0].theta[0], 100.0, 1.0);
}

TEST(Chain, DivergenceKeepsPartialTrace) {
  const auto pot = regression();
  const IntegratorSpec spec(Scheme::kEuler, 3.0, 0.0, MassMatrix::identity(2));
  ChainConfig c = small_chain(2000, 1);
  c.burn_in = 0;
  BatchSchedule sched(BatchMode::kFull, 1, RngStream(42, 1));
  try {
    run_chain(*pot, spec, sched, c);
    FAIL() << "expected divergence";
  } catch (const ChainDivergence& e) {
    EXPECT_GT(e.step(), 0u);
    EXPECT_EQ(e.partial().size(), e.step() - 1);
    EXPECT_EQ(e.scheme(), Scheme::kEuler);
  }
}

TEST(Chain, ConfigErrors) {
  const auto pot = regression(2);
  const IntegratorSpec spec(Scheme::kLeapfrog, 0.01, 5.0, MassMatrix::identity(2));
  BatchSchedule wrong_k(BatchMode::kPermutation, 3, RngStream(1, 0));
  EXPECT_THROW(run_chain(*pot, spec, wrong_k, small_chain()), ConfigError);
  const IntegratorSpec wrong_d(Scheme::kLeapfrog, 0.01, 5.0, MassMatrix::identity(3));
  BatchSchedule full(BatchMode::kFull, 1, RngStream(1, 0));
  EXPECT_THROW(run_chain(*pot, wrong_d, full, small_chain()), ConfigError);
  ChainConfig c = small_chain();
  c.thinning = 0;
  EXPECT_THROW(run_chain(*pot, spec, full, c), ConfigError);
  const IntegratorSpec zero(Scheme::kLeapfrog, 0.0, 5.0, MassMatrix::identity(2));
  EXPECT_THROW(run_chain(*pot, zero, full, small_chain()), ConfigError);
}

// Theorem-1 style check: the sampled theta moments approach the posterior.
TEST(Chain, LongRunMomentsMatchPosterior) {
  const auto pot = regression();
  const GaussianPosterior post = pot->analytic_posterior();
  const IntegratorSpec spec(Scheme::kLieTrotter, 0.01, 5.0, MassMatrix::identity(2));
  BatchSchedule sched(BatchMode::kFull, 1, RngStream(7, 1));
  ChainConfig c = small_chain(20000, 100);
  c.seed = 7;
  const Trace t = run_chain(*pot, spec, sched, c);
  const MomentErrors e = moment_errors(t, post);
  for (Index i = 0; i < 2; ++i) {
    const double sd = std::sqrt(post.covariance(i, i));
    EXPECT_LT(e.mean_error[i], 5 * sd / std::sqrt(20000.0));
    EXPECT_LT(e.variance_error[i], 5 * post.covariance(i, i) * std::sqrt(2.0 / 20000));
  }
}

TEST(Chain, Acf1) {
  EXPECT_NEAR(acf1(std::vector<double>{1, -1, 1, -1, 1, -1}), -5.0 / 6.0, 1e-15);
  EXPECT_THROW(acf1(std::vector<double>{1, 1, 1}), ContractError);
  EXPECT_THROW(acf1(std::vector<double>{1, 2}), ContractError);
  // AR(1) with coefficient 0.8.
  RngStream rng(3, 0);
  std::vector<double> x{0.0};
  for (int i = 0; i < 200000; ++i) x.push_back(0.8 * x.back() + rng.normal());
  EXPECT_NEAR(acf1(x), 0.8, 0.01);
}

TEST(Chain, TraceCsv) {
  const auto pot = regression();
  const IntegratorSpec spec(Scheme::kLeapfrog, 0.01, 5.0, MassMatrix::identity(2));
  BatchSchedule sched(BatchMode::kFull, 1, RngStream(42, 1));
  const Trace t = run_chain(*pot, spec, sched, small_chain(4, 2));
  const auto path = std::filesystem::temp_directory_path() / "shmc_test_chain" / "trace.csv";
  write_trace_csv(path, t);
  const CsvTable table = read_csv(path);
  ASSERT_EQ(table.rows.size(), 4u);
  EXPECT_EQ(table.header, (std::vector<std::string>{"step", "time", "theta_0", "theta_1", "r_0", "r_1"}));
  EXPECT_EQ(table.rows[1][table.column("theta_1")], t.states[1].theta[1]);
  EXPECT_NEAR(table.rows[1][table.column("time")], 0.01 * t.steps[1], 1e-12);
  EXPECT_EQ(trace_column(t, 1, Block::kR)[3], t.states[3].r[1]);
  EXPECT_NEAR(ergodic_average(t, [](const State& z) { return z.theta[0]; }),
              (t.states[0].theta[0] + t.states[1].theta[0] + t.states[2].theta[0] +
               t.states[3].theta[0]) / 4,
              1e-15);
}
