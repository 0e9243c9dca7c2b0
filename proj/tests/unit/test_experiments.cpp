#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "shmc/experiments.hpp"

using namespace shmc;

namespace {

SweepConfig tiny_sweep() {
  SweepConfig s;
  s.schemes = {Scheme::kLieTrotter, Scheme::kMt3};
  s.etas = {0.08, 0.04, 0.02};
  s.batch_counts = {1, 4};
  s.n = 300;
  s.burn_in = 200;
  s.thinning = 5;
  s.replicates = 2;
  s.self_reps = 20;
  return s;
}

std::string header(const std::string& csv) { return csv.substr(0, csv.find('\n')); }

std::size_t lines(const std::string& csv) {
  return static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n'));
}

}  // namespace

TEST(Experiments, BuildModel) {
  ModelConfig m;
  EXPECT_EQ(build_model(m)->dim(), 2);
  m.kind = ModelKind::kToy1d;
  m.n_batches = 2;
  EXPECT_EQ(build_model(m)->n_batches(), 2u);
  m.kind = ModelKind::kLogistic2d;
  m.n_batches = 1;
  EXPECT_EQ(build_model(m)->n_observations(), 64u);
  m.data_path = "/nonexistent/file.csv";
  EXPECT_ANY_THROW(build_model(m));
}

TEST(Experiments, ParallelForRethrowsLowestIndex) {
  std::vector<int> hit(10, 0);
  parallel_for(10, 3, [&](std::size_t i) { hit[i] = 1; });
  EXPECT_EQ(std::count(hit.begin(), hit.end(), 1), 10);
  try {
    parallel_for(10, 4, [](std::size_t i) {
      if (i == 3 || i == 7) throw std::runtime_error(std::to_string(i));
    });
    FAIL();
  } catch (const std::runtime_error& e) {
    EXPECT_STREQ(e.what(), "3");
  }
}

TEST(Experiments, SweepDeterministicAcrossJobCounts) {
  SweepConfig a = tiny_sweep();
  SweepConfig b = tiny_sweep();
  b.jobs = 3;
  const SweepResult ra = run_sweep(a), rb = run_sweep(b);
  EXPECT_EQ(sweep_summary_csv(ra), sweep_summary_csv(rb));
  EXPECT_EQ(sweep_slopes_csv(ra), sweep_slopes_csv(rb));
  EXPECT_EQ(ra.cells.size(), 2u * 2 * 3);
  EXPECT_EQ(header(sweep_summary_csv(ra)),
            "scheme,eta,K,mode,n,ks,ks_q05_self,ks_q95_self,mean_err,var_err,mean_err_cv,"
            "var_err_cv,var_err_cv_se,var_err_exact,r_var_err,nl,thin");
  for (const SweepCell& c : ra.cells) {
    EXPECT_EQ(c.n, 600u);
    EXPECT_EQ(c.var_err_exact.has_value(), c.n_batches == 1);
    EXPECT_EQ(c.mode, c.n_batches == 1 ? BatchMode::kFull : BatchMode::kPermutation);
    EXPECT_LE(c.ks_q05_self, c.ks_q95_self);
  }
}

TEST(Experiments, SweepThinTime) {
  SweepConfig s = tiny_sweep();
  s.schemes = {Scheme::kLieTrotter};
  s.batch_counts = {1};
  s.inner_steps = 2;
  s.thin_time = 0.5;
  const SweepResult r = run_sweep(s);
  EXPECT_EQ(r.cells[0].thinning, 4u);  // 0.5 / (2 * 0.08) rounded up
  EXPECT_EQ(r.cells[2].thinning, 13u);
}

TEST(Experiments, SweepDivergenceMarksCell) {
  SweepConfig s = tiny_sweep();
  s.schemes = {Scheme::kEuler};
  s.batch_counts = {1};
  s.etas = {1.5, 0.04, 0.02};
  s.coupled = false;
  const SweepResult r = run_sweep(s);
  EXPECT_TRUE(r.cells[0].diverged);
  EXPECT_TRUE(std::isnan(r.cells[0].var_err));
  EXPECT_FALSE(r.cells[1].diverged);
}

TEST(Experiments, SlopeFitsAndWindow) {
  std::vector<SweepCell> cells;
  const std::vector<double> etas{0.08, 0.04, 0.02, 0.01, 0.005};
  for (double eta : etas) {
    SweepCell c{};
    c.scheme = Scheme::kMt3;
    c.eta = eta;
    c.n_batches = 1;
    c.mode = BatchMode::kFull;
    c.inner_steps = 1;
    // Pre-asymptotic first point, then clean cubic decay.
    c.var_err_cv = eta > 0.07 ? 1.0 : std::pow(eta, 3);
    c.var_err = c.var_err_cv;
    cells.push_back(c);
  }
  const auto rows = fit_sweep_slopes(cells);
  ASSERT_EQ(rows.size(), 2u);
  const SlopeRow& cv = rows[0].metric == "var_err_cv" ? rows[0] : rows[1];
  EXPECT_EQ(cv.points, 5u);
  ASSERT_TRUE(cv.window.has_value());
  EXPECT_NEAR(cv.window->slope, 3.0, 1e-12);
  EXPECT_DOUBLE_EQ(cv.window_eta_hi, 0.04);
  EXPECT_DOUBLE_EQ(cv.window_eta_lo, 0.005);
}

TEST(Experiments, ToyRun) {
  ToyRunConfig t;
  t.n = 20000;
  const ToyRunResult r = run_toy(t);
  EXPECT_EQ(r.thinning, 10u);
  EXPECT_LT(r.full.ks, 0.02);
  EXPECT_GT(r.minibatch.ks, 0.05);
  std::size_t total = 0;
  for (auto c : r.full.histogram.counts) total += c;
  EXPECT_EQ(r.full.histogram.counts.size(), 128u);
  EXPECT_LE(total, 20000u);
  EXPECT_GT(total, 19990u);
  EXPECT_EQ(header(toy_summary_csv(t, r)), "mode,eta,n,thin,ks,mean,var,post_mean,post_var");
  EXPECT_EQ(header(histogram_csv(r.full.histogram)), "bin_lo,bin_hi,count,density");
  EXPECT_EQ(toy_default_thinning(0.01), 400u);
}

TEST(Experiments, Histogram) {
  const Histogram h = make_histogram({0.1, 0.2, 0.9, 1.5, -3.0}, 0.0, 1.0, 2);
  EXPECT_EQ(h.counts, (std::vector<std::size_t>{2, 1}));
}

TEST(Experiments, Opcheck) {
  OpcheckConfig o;
  o.trials = 6;
  const OpcheckResult r = run_opcheck(o);
  EXPECT_EQ(r.slopes.size(), 6u * 3);
  EXPECT_EQ(r.rows.size(), 6u * 3 * 4);
  for (const auto& s : r.slopes) {
    if (s.mode == "forward") EXPECT_NEAR(s.fit.slope, 2.0, 0.3);
    else EXPECT_NEAR(s.fit.slope, 3.0, 0.3);
  }
  EXPECT_EQ(header(opcheck_csv(r)), "trial,K,n,mode,eta,error");
  EXPECT_EQ(header(opcheck_slopes_csv(r)), "trial,K,n,mode,slope,r2");
  o.ks = {7};
  EXPECT_THROW(run_opcheck(o), ConfigError);
}

TEST(Experiments, BchCheck) {
  for (const auto& f : run_bch_check(BchCheckConfig{})) EXPECT_NEAR(f.slope, 3.0, 0.1);
}

TEST(Experiments, Geom) {
  GeomConfig g;
  g.probes = 3;
  const auto rows = run_geom(g);
  EXPECT_EQ(rows.size(), 3u * 2 * 3);
  for (const auto& r : rows) {
    if (r.det_target) EXPECT_NEAR(r.det_j / *r.det_target, 1.0, 1e-6);
  }
  const std::string csv = geom_csv(rows);
  EXPECT_EQ(lines(csv), rows.size() + 1);
  EXPECT_EQ(header(csv), "scheme,eta,C,det_J,det_target,det_residual,symp_residual");
}

TEST(Experiments, SampleExactToyAndIntegrator) {
  SampleConfig s;
  s.model.kind = ModelKind::kToy1d;
  s.scheme = "exact";
  s.eta = 0.4;
  s.friction = 2.0;
  s.chain.n_samples = 10;
  s.chain.thinning = 2;
  s.chain.seed = 1;
  EXPECT_EQ(run_sample(s).size(), 10u);
  s.scheme = "mt3";
  s.model.kind = ModelKind::kLinearGaussian;
  s.model.n_batches = 4;
  s.mode = BatchMode::kPermutation;
  const Trace t = run_sample(s);
  EXPECT_EQ(t.dim, 2);
  s.model.kind = ModelKind::kLinearGaussian;
  s.scheme = "exact";
  EXPECT_THROW(run_sample(s), ConfigError);
}
