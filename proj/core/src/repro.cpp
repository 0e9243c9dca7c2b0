#include "shmc/repro.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "shmc/csv_io.hpp"
#include "shmc/experiments.hpp"

namespace shmc {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Verdict verdict(bool ok) { return ok ? Verdict::kPass : Verdict::kFail; }

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

const SlopeRow& find_slope(const SweepResult& r, Scheme s, std::size_t k, int nl) {
  for (const auto& row : r.slopes) {
    if (row.scheme == s && row.n_batches == k && row.inner_steps == nl &&
        row.metric == "var_err_cv") {
      return row;
    }
  }
  throw ContractError("no slope row for " + std::string(to_string(s)) + " K=" + std::to_string(k));
}

// The asymptotic window when one qualifies, else the full-grid fit.
oplab::SlopeFit chosen(const SlopeRow& row) { return row.window ? *row.window : row.all; }

SweepResult sweep(const ReproOptions& opt, std::vector<Scheme> schemes,
                  std::vector<std::size_t> ks, int nl) {
  SweepConfig cfg;
  cfg.schemes = std::move(schemes);
  cfg.batch_counts = std::move(ks);
  cfg.inner_steps = nl;
  cfg.n = opt.sweep_n;
  cfg.thin_time = opt.sweep_thin_time;
  cfg.replicates = opt.replicates;
  cfg.seed = opt.seed;
  cfg.jobs = opt.jobs;
  cfg.self_reps = 20;
  return run_sweep(cfg);
}

ReproCheck gap_check(const std::string& name, const SlopeRow& full, const SlopeRow& mini,
                     bool expect_gap) {
  const oplab::SlopeFit a = chosen(full);
  const oplab::SlopeFit b = chosen(mini);
  const double gap = a.slope - b.slope;
  const double r2 = std::min(a.r2, b.r2);
  ReproCheck c{name,
               expect_gap ? verdict(gap >= 0.4) : verdict(std::abs(gap) <= 0.4),
               gap,
               expect_gap ? ">= 0.4" : "|gap| <= 0.4",
               r2,
               "slope(full) " + fmt(a.slope) + ", slope(K=8) " + fmt(b.slope)};
  if (!(r2 >= 0.9)) c.verdict = Verdict::kInconclusive;
  return c;
}

}  // namespace

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::kPass: return "pass";
    case Verdict::kFail: return "fail";
    case Verdict::kInconclusive: return "inconclusive";
  }
  return "?";
}

std::vector<ReproCheck> repro_fig1(const ReproOptions& opt) {
  const SweepResult r = sweep(opt, {Scheme::kMt3, Scheme::kLieTrotter}, {1, 8}, 1);
  return {gap_check("fig1.mt3_slope_gap", find_slope(r, Scheme::kMt3, 1, 1),
                    find_slope(r, Scheme::kMt3, 8, 1), true),
          gap_check("fig1.lie_trotter_slope_gap", find_slope(r, Scheme::kLieTrotter, 1, 1),
                    find_slope(r, Scheme::kLieTrotter, 8, 1), false)};
}

std::vector<ReproCheck> repro_fig3(const ReproOptions& opt) {
  std::vector<ReproCheck> out;
  ToyRunConfig cfg;
  cfg.n = opt.toy_n;
  cfg.seed = opt.seed;
  const ToyRunResult coarse = run_toy(cfg);
  out.push_back({"fig3.full_ks", verdict(coarse.full.ks < 0.012), coarse.full.ks, "< 0.012", kNaN,
                 "eta 0.4"});
  out.push_back({"fig3.minibatch_ks", verdict(coarse.minibatch.ks > 0.05), coarse.minibatch.ks,
                 "> 0.05", kNaN, "eta 0.4"});
  const double ratio = coarse.minibatch.ks / coarse.full.ks;
  out.push_back({"fig3.ks_separation", verdict(ratio > 10.0), ratio, "> 10", kNaN,
                 "minibatch / full KS at eta 0.4"});

  cfg.eta = 0.01;
  const ToyRunResult fine = run_toy(cfg);
  const double fine_ratio = fine.minibatch.ks / fine.full.ks;
  out.push_back({"fig3.small_eta_recovery", verdict(fine_ratio < 3.0), fine_ratio, "< 3", kNaN,
                 "minibatch KS " + fmt(fine.minibatch.ks) + ", full KS " + fmt(fine.full.ks) +
                     " at eta 0.01"});
  return out;
}

std::vector<ReproCheck> repro_theorems(const ReproOptions& opt) {
  std::vector<ReproCheck> out;

  OpcheckConfig oc;
  oc.trials = opt.opcheck_trials;
  oc.ks = {2, 3, 4};
  oc.seed = opt.seed;
  const OpcheckResult ops = run_opcheck(oc);
  auto fraction = [&](const std::string& mode, double lo, double hi) {
    std::size_t hit = 0;
    std::size_t total = 0;
    std::vector<double> r2s;
    for (const auto& s : ops.slopes) {
      if (s.mode != mode) continue;
      ++total;
      r2s.push_back(s.fit.r2);
      if (s.fit.slope >= lo && s.fit.slope <= hi) ++hit;
    }
    std::sort(r2s.begin(), r2s.end());
    const double med = r2s.empty() ? kNaN : r2s[r2s.size() / 2];
    return std::pair<double, double>{total ? static_cast<double>(hit) / total : 0.0, med};
  };
  const std::pair<const char*, std::pair<double, double>> modes[] = {
      {"forward", {1.7, 2.3}}, {"averaged", {2.7, 3.3}}, {"randomized", {2.7, 3.3}}};
  for (const auto& [mode, band] : modes) {
    const auto [frac, med_r2] = fraction(mode, band.first, band.second);
    ReproCheck c{std::string("theorems.opcheck_") + mode, verdict(frac >= 0.95), frac, ">= 0.95",
                 med_r2,
                 "fraction of trials with slope in [" + fmt(band.first) + ", " + fmt(band.second) +
                     "]; r2 column is the median"};
    if (!(med_r2 >= 0.9)) c.verdict = Verdict::kInconclusive;
    out.push_back(c);
  }

  {
    RngStream rng(opt.seed, 77);
    const oplab::GeneratorSet g = oplab::random_generator_set(1, 3, rng);
    double worst = 0.0;
    for (double eta : oc.etas) {
      const Matrix ref = oplab::reference_flow(g, eta);
      const double err =
          oplab::spectral_norm(oplab::splitting_product(g, eta, oplab::SplitOrder::kForward) - ref) /
          oplab::spectral_norm(ref);
      worst = std::max(worst, err);
    }
    out.push_back({"theorems.single_batch_exact", verdict(worst < 1e-13), worst, "< 1e-13", kNaN,
                   "K = 1 splitting vs reference flow, relative"});
  }

  {
    BchCheckConfig bc;
    bc.seed = opt.seed;
    const auto fits = run_bch_check(bc);
    double worst = 0.0;
    double min_r2 = 1.0;
    for (const auto& f : fits) {
      worst = std::max(worst, std::abs(f.slope - 3.0));
      min_r2 = std::min(min_r2, f.r2);
    }
    ReproCheck c{"theorems.bch_order", verdict(worst <= 0.1), worst, "max |slope - 3| <= 0.1",
                 min_r2, std::to_string(fits.size()) + " random pairs"};
    if (!(min_r2 >= 0.9)) c.verdict = Verdict::kInconclusive;
    out.push_back(c);
  }

  {
    const SweepResult one = sweep(opt, {Scheme::kLieTrotter}, {1}, 1);
    const SweepResult ten = sweep(opt, {Scheme::kLieTrotter}, {1}, 10);
    const oplab::SlopeFit a = chosen(find_slope(one, Scheme::kLieTrotter, 1, 1));
    const oplab::SlopeFit b = chosen(find_slope(ten, Scheme::kLieTrotter, 1, 10));
    const double diff = std::abs(a.slope - b.slope);
    ReproCheck c{"theorems.inner_steps_independence", verdict(diff <= 0.4), diff, "<= 0.4",
                 std::min(a.r2, b.r2),
                 "slope(N_l=1) " + fmt(a.slope) + ", slope(N_l=10) " + fmt(b.slope)};
    if (!(c.r2 >= 0.9)) c.verdict = Verdict::kInconclusive;
    out.push_back(c);
  }
  return out;
}

std::string repro_results_csv(const std::vector<ReproCheck>& checks) {
  std::ostringstream os;
  write_csv_row(os, {"check", "verdict", "value", "criterion", "r2"});
  for (const auto& c : checks) {
    write_csv_row(os, {c.name, std::string(to_string(c.verdict)), format_double(c.value),
                       c.criterion, format_double(c.r2)});
  }
  return os.str();
}

void write_repro_report(const std::filesystem::path& dir, const std::string& title,
                        const std::vector<ReproCheck>& checks) {
  std::ostringstream md;
  md << "# " << title << "\n\n| check | verdict | value | criterion | r2 | detail |\n"
     << "|---|---|---|---|---|---|\n";
  for (const auto& c : checks) {
    md << "| " << c.name << " | " << to_string(c.verdict) << " | " << fmt(c.value) << " | "
       << c.criterion << " | " << (std::isnan(c.r2) ? std::string("-") : fmt(c.r2)) << " | "
       << c.detail << " |\n";
  }
  write_text_file(dir / "report.md", md.str());
  write_text_file(dir / "results.csv", repro_results_csv(checks));
}

}  // namespace shmc
