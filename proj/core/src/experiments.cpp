#include "shmc/experiments.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "shmc/coupled_reference.hpp"
#include "shmc/csv_io.hpp"
#include "shmc/geometry.hpp"
#include "shmc/metrics.hpp"

namespace shmc {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

MassMatrix resolve_mass(const Vector& mass, Index d) {
  if (mass.size() == 0) return MassMatrix::identity(d);
  if (mass.size() != d) throw ConfigError("mass diagonal length does not match the model dimension");
  return MassMatrix(mass);
}

std::string opt_double(const std::optional<double>& v) {
  return format_double(v.value_or(kNaN));
}

// Independent streams per purpose, derived from a base id.
enum StreamSlot : std::uint64_t { kNoise = 0, kSchedule = 1, kInit = 3, kSelf = 4 };

std::uint64_t stream_id(std::uint64_t base, StreamSlot slot) { return base * 8 + slot; }

}  // namespace

PotentialPtr build_model(const ModelConfig& cfg) {
  RngStream rng(cfg.data_seed, 0);
  switch (cfg.kind) {
    case ModelKind::kToy1d: {
      const ToyData data = cfg.data_path.empty() ? cfg.toy : load_toy_csv(cfg.data_path);
      return make_toy_1d(data, cfg.n_batches);
    }
    case ModelKind::kLinearGaussian: {
      if (cfg.data_path.empty()) {
        return make_linear_gaussian(make_synthetic_regression(cfg.regression, rng), cfg.n_batches);
      }
      return make_linear_gaussian(
          load_regression_csv(cfg.data_path, default_frequencies(cfg.regression.n_features),
                              cfg.regression.noise_var, cfg.regression.prior_var),
          cfg.n_batches);
    }
    case ModelKind::kLogistic2d: {
      LogisticData data;
      if (cfg.data_path.empty()) {
        Vector truth(2);
        truth << 1.5, -1.0;
        data = make_synthetic_logistic(cfg.logistic_n, truth, rng);
      } else {
        data = load_logistic_csv(cfg.data_path);
      }
      return make_logistic_2d(data.features, data.labels, cfg.n_batches, cfg.logistic_prior_var);
    }
  }
  throw ConfigError("unknown model");
}

void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(jobs, 1)));
  std::vector<std::exception_ptr> errors(n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::mutex mu;
    std::size_t next = 0;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        while (true) {
          std::size_t i;
          {
            std::lock_guard<std::mutex> lock(mu);
            if (next >= n) return;
            i = next++;
          }
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

// ---------------------------------------------------------------------------
// sample

Trace run_sample(const SampleConfig& cfg) {
  if (!(cfg.eta > 0.0)) throw ConfigError("eta must be > 0");
  if (cfg.scheme == "exact") {
    if (cfg.model.kind != ModelKind::kToy1d) {
      throw ConfigError("scheme exact is available for the toy model only");
    }
    ToyParams p;
    const ToyData data =
        cfg.model.data_path.empty() ? cfg.model.toy : load_toy_csv(cfg.model.data_path);
    p.x1 = data.x1;
    p.x2 = data.x2;
    p.sigma_x2 = data.sigma_x2;
    p.sigma_theta2 = data.sigma_theta2;
    p.friction = cfg.friction;
    const ToyMode mode = cfg.mode == BatchMode::kFull ? ToyMode::kFull : ToyMode::kMinibatch;
    return run_toy_chain(p, cfg.eta, mode, cfg.chain);
  }
  const PotentialPtr potential = build_model(cfg.model);
  IntegratorSpec spec(parse_scheme(cfg.scheme), cfg.eta, cfg.friction,
                      resolve_mass(cfg.mass, potential->dim()), cfg.inner_steps, cfg.v_hat);
  spec.validate();
  if (spec.scheme == Scheme::kMt3 && !(spec.friction >= 0.0)) throw ConfigError("mt3: C must be >= 0");
  BatchSchedule schedule(cfg.mode, potential->n_batches(),
                         RngStream(cfg.chain.seed, cfg.chain.stream + (std::uint64_t{1} << 40)));
  return run_chain(*potential, spec, schedule, cfg.chain);
}

// ---------------------------------------------------------------------------
// sweep

namespace {

struct ReplicateResult {
  MomentAccumulator num;
  MomentAccumulator ref;
  MomentAccumulator mom;
  std::vector<double> kept;
  bool diverged = false;
};

double mean_abs(const Vector& v) { return v.cwiseAbs().mean(); }

std::size_t cell_thinning(const SweepConfig& cfg, const IntegratorSpec& spec) {
  if (cfg.thin_time <= 0.0) return cfg.thinning;
  return static_cast<std::size_t>(
      std::max(1.0, std::ceil(cfg.thin_time / spec.step_duration() - 1e-9)));
}

}  // namespace

SweepResult run_sweep(const SweepConfig& cfg) {
  if (cfg.schemes.empty() || cfg.etas.empty() || cfg.batch_counts.empty()) {
    throw ConfigError("sweep: schemes, eta grid and K list must be non-empty");
  }
  if (cfg.replicates < 1) throw ConfigError("sweep: replicates must be >= 1");
  if (cfg.thinning < 1) throw ConfigError("sweep: thinning must be >= 1");
  if (cfg.thin_time < 0.0) throw ConfigError("sweep: thin_time must be >= 0");
  for (double eta : cfg.etas) {
    if (!(eta > 0.0)) throw ConfigError("sweep: every eta must be > 0");
  }

  struct CellSpec {
    Scheme scheme;
    double eta;
    std::size_t k;
  };
  std::vector<CellSpec> specs;
  for (Scheme s : cfg.schemes) {
    for (std::size_t k : cfg.batch_counts) {
      for (double eta : cfg.etas) specs.push_back({s, eta, k});
    }
  }

  std::map<std::size_t, PotentialPtr> models;
  for (std::size_t k : cfg.batch_counts) {
    ModelConfig m = cfg.model;
    m.n_batches = k;
    models[k] = build_model(m);
  }
  const Potential& any = *models.begin()->second;
  const GaussianPosterior post = any.analytic_posterior();
  const Index d = any.dim();
  const bool quadratic = any.kind() != ModelKind::kLogistic2d;
  const MassMatrix mass = resolve_mass(cfg.mass, d);
  const Matrix post_chol = post.covariance.llt().matrixL();

  for (const auto& c : specs) {
    IntegratorSpec(c.scheme, c.eta, cfg.friction, mass, cfg.inner_steps, cfg.v_hat).validate();
  }

  const auto reps = static_cast<std::size_t>(cfg.replicates);
  std::vector<ReplicateResult> results(specs.size() * reps);
  std::vector<Vector> out_resid(results.size());

  parallel_for(results.size(), cfg.jobs, [&](std::size_t task) {
    const std::size_t cell = task / reps;
    const std::size_t rep = task % reps;
    const CellSpec& c = specs[cell];
    const Potential& potential = *models.at(c.k);
    const IntegratorSpec spec(c.scheme, c.eta, cfg.friction, mass, cfg.inner_steps, cfg.v_hat);
    const std::uint64_t base = cell * 4096 + rep;
    const BatchMode mode = c.k == 1 ? BatchMode::kFull : cfg.mode;

    RngStream init_rng(cfg.seed, stream_id(base, kInit));
    Vector theta = post.mean + post_chol * standard_normal_vector(init_rng, d);
    Vector r = mass.diag().cwiseSqrt().cwiseProduct(standard_normal_vector(init_rng, d));
    const State init(std::move(r), std::move(theta));

    ChainConfig chain;
    chain.n_samples = cfg.n;
    chain.burn_in = cfg.burn_in;
    chain.thinning = cell_thinning(cfg, spec);
    chain.init = init;
    chain.seed = cfg.seed;
    chain.stream = stream_id(base, kNoise);

    BatchSchedule schedule(mode, c.k, RngStream(cfg.seed, stream_id(base, kSchedule)));
    std::optional<CoupledGaussianReference> reference;
    if (cfg.coupled && quadratic) {
      reference.emplace(potential, spec);
      reference->reset(init);
      out_resid[task] = reference->residual_stationary_cov().bottomRightCorner(d, d).diagonal();
    }

    ReplicateResult& out = results[task];
    out.num = MomentAccumulator(d);
    out.ref = MomentAccumulator(d);
    out.mom = MomentAccumulator(d);
    auto observer = [&](std::size_t step, const State& z, const Matrix& noise) {
      if (reference) reference->advance_projected(noise);
      if (step <= cfg.burn_in) return;
      out.num.add(z.theta);
      out.mom.add(z.r);
      if (reference) out.ref.add(reference->stacked().tail(d));
    };
    try {
      const Trace trace = run_chain(potential, spec, schedule, chain, observer);
      out.kept = trace_column(trace, 0, Block::kTheta);
    } catch (const DivergenceError&) {
      out.diverged = true;
    }
  });

  SweepResult result;
  for (std::size_t cell = 0; cell < specs.size(); ++cell) {
    const CellSpec& c = specs[cell];
    SweepCell row{};
    row.scheme = c.scheme;
    row.eta = c.eta;
    row.n_batches = c.k;
    row.mode = c.k == 1 ? BatchMode::kFull : cfg.mode;
    row.inner_steps = cfg.inner_steps;
    row.thinning = cell_thinning(
        cfg, IntegratorSpec(c.scheme, c.eta, cfg.friction, mass, cfg.inner_steps, cfg.v_hat));

    MomentAccumulator num(d);
    MomentAccumulator mom(d);
    std::vector<double> kept;
    Matrix mean_diff(d, static_cast<Index>(reps));
    Matrix var_diff(d, static_cast<Index>(reps));
    for (std::size_t rep = 0; rep < reps; ++rep) {
      const ReplicateResult& rr = results[cell * reps + rep];
      row.diverged = row.diverged || rr.diverged;
      if (rr.diverged) continue;
      num.merge(rr.num);
      mom.merge(rr.mom);
      kept.insert(kept.end(), rr.kept.begin(), rr.kept.end());
      mean_diff.col(static_cast<Index>(rep)) = rr.num.mean() - rr.ref.mean();
      // The projected reference is short of the exact variance by the
      // stationary covariance of the dropped part.
      var_diff.col(static_cast<Index>(rep)) = rr.num.variance() - rr.ref.variance();
      if (out_resid[cell * reps + rep].size() == d) {
        var_diff.col(static_cast<Index>(rep)) -= out_resid[cell * reps + rep];
      }
    }

    if (row.diverged || kept.empty()) {
      row.diverged = true;
      row.n = kept.size();
      row.ks = row.ks_q05_self = row.ks_q95_self = kNaN;
      row.mean_err = row.var_err = row.mean_err_cv = row.var_err_cv = kNaN;
      row.var_err_cv_se = row.r_var_err = kNaN;
      result.cells.push_back(row);
      continue;
    }

    row.n = kept.size();
    const double mu0 = post.mean[0];
    const double var0 = post.covariance(0, 0);
    row.ks = ks_vs_gaussian(EmpiricalSample(kept), mu0, var0);
    {
      const std::size_t m = std::min(kept.size(), cfg.self_max_m);
      RngStream self_rng(cfg.seed, stream_id(cell * 4096 + 4095, kSelf));
      std::vector<double> oracle(4 * m);
      for (auto& v : oracle) v = mu0 + std::sqrt(var0) * self_rng.normal();
      const SelfDistance sd = self_distance(EmpiricalSample(std::move(oracle)), m,
                                            std::max<std::size_t>(cfg.self_reps, 20), self_rng);
      row.ks_q05_self = sd.q05;
      row.ks_q95_self = sd.q95;
    }
    row.mean_err = mean_abs(num.mean() - post.mean);
    row.var_err = mean_abs(num.variance() - post.covariance.diagonal());
    row.r_var_err = mean_abs(mom.variance() - mass.diag());

    if (cfg.coupled && quadratic) {
      const double nrep = static_cast<double>(reps);
      const Vector mean_bar = mean_diff.rowwise().mean();
      const Vector var_bar = var_diff.rowwise().mean();
      row.mean_err_cv = mean_abs(mean_bar);
      row.var_err_cv = mean_abs(var_bar);
      if (reps > 1) {
        const Vector sd = ((var_diff.colwise() - var_bar).cwiseAbs2().rowwise().sum() /
                           (nrep - 1.0))
                              .cwiseSqrt();
        row.var_err_cv_se = sd.mean() / std::sqrt(nrep);
      } else {
        row.var_err_cv_se = kNaN;
      }
    } else {
      row.mean_err_cv = row.var_err_cv = row.var_err_cv_se = kNaN;
    }

    if (quadratic && c.k == 1) {
      try {
        const IntegratorSpec spec(c.scheme, c.eta, cfg.friction, mass, cfg.inner_steps, cfg.v_hat);
        const StationaryMoments sm = stationary_moments(*models.at(c.k), spec);
        row.var_err_exact =
            mean_abs(sm.cov.bottomRightCorner(d, d).diagonal() - post.covariance.diagonal());
      } catch (const ContractError&) {
        row.var_err_exact.reset();
      }
    }
    result.cells.push_back(row);
  }
  result.slopes = fit_sweep_slopes(result.cells);
  return result;
}

std::vector<SlopeRow> fit_sweep_slopes(const std::vector<SweepCell>& cells) {
  struct Key {
    Scheme scheme;
    std::size_t k;
    BatchMode mode;
    int nl;
    bool operator==(const Key& o) const {
      return scheme == o.scheme && k == o.k && mode == o.mode && nl == o.nl;
    }
  };
  std::vector<Key> keys;
  for (const auto& c : cells) {
    const Key key{c.scheme, c.n_batches, c.mode, c.inner_steps};
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) keys.push_back(key);
  }

  std::vector<SlopeRow> out;
  for (const Key& key : keys) {
    for (const std::string metric : {"var_err_cv", "var_err"}) {
      std::vector<std::pair<double, double>> pts;
      for (const auto& c : cells) {
        if (!(Key{c.scheme, c.n_batches, c.mode, c.inner_steps} == key)) continue;
        const double v = metric == "var_err_cv" ? c.var_err_cv : c.var_err;
        if (std::isfinite(v) && v > 0.0) pts.emplace_back(c.eta, v);
      }
      std::sort(pts.begin(), pts.end(), [](auto& a, auto& b) { return a.first > b.first; });
      if (pts.size() < 3) continue;
      std::vector<double> etas;
      std::vector<double> errs;
      for (const auto& [e, v] : pts) {
        etas.push_back(e);
        errs.push_back(v);
      }
      SlopeRow row{key.scheme, key.k, key.mode, key.nl, metric, pts.size(),
                   oplab::error_order_slope(etas, errs), std::nullopt};
      for (std::size_t len = pts.size(); len >= 3 && !row.window; --len) {
        for (std::size_t start = pts.size() - len + 1; start-- > 0;) {
          const std::vector<double> we(etas.begin() + start, etas.begin() + start + len);
          const std::vector<double> wv(errs.begin() + start, errs.begin() + start + len);
          const oplab::SlopeFit fit = oplab::error_order_slope(we, wv);
          if (fit.r2 >= 0.95) {
            row.window = fit;
            row.window_eta_hi = we.front();
            row.window_eta_lo = we.back();
            break;
          }
        }
      }
      out.push_back(row);
    }
  }
  return out;
}

std::string sweep_summary_csv(const SweepResult& result) {
  std::ostringstream os;
  write_csv_row(os, {"scheme", "eta", "K", "mode", "n", "ks", "ks_q05_self", "ks_q95_self",
                     "mean_err", "var_err", "mean_err_cv", "var_err_cv", "var_err_cv_se",
                     "var_err_exact", "r_var_err", "nl", "thin"});
  for (const auto& c : result.cells) {
    write_csv_row(os, {std::string(to_string(c.scheme)), format_double(c.eta),
                       std::to_string(c.n_batches), std::string(to_string(c.mode)),
                       std::to_string(c.n), format_double(c.ks), format_double(c.ks_q05_self),
                       format_double(c.ks_q95_self), format_double(c.mean_err),
                       format_double(c.var_err), format_double(c.mean_err_cv),
                       format_double(c.var_err_cv), format_double(c.var_err_cv_se),
                       opt_double(c.var_err_exact), format_double(c.r_var_err),
                       std::to_string(c.inner_steps), std::to_string(c.thinning)});
  }
  return os.str();
}

std::string sweep_slopes_csv(const SweepResult& result) {
  std::ostringstream os;
  write_csv_row(os, {"scheme", "K", "mode", "nl", "metric", "points", "slope", "r2", "eta_hi",
                     "eta_lo", "slope_window", "r2_window"});
  for (const auto& s : result.slopes) {
    write_csv_row(os, {std::string(to_string(s.scheme)), std::to_string(s.n_batches),
                       std::string(to_string(s.mode)), std::to_string(s.inner_steps), s.metric,
                       std::to_string(s.points), format_double(s.all.slope),
                       format_double(s.all.r2),
                       format_double(s.window ? s.window_eta_hi : kNaN),
                       format_double(s.window ? s.window_eta_lo : kNaN),
                       format_double(s.window ? s.window->slope : kNaN),
                       format_double(s.window ? s.window->r2 : kNaN)});
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// toy

std::size_t toy_default_thinning(double eta) {
  return static_cast<std::size_t>(std::max(1.0, std::ceil(4.0 / eta - 1e-9)));
}

Histogram make_histogram(const std::vector<double>& values, double lo, double hi, int bins) {
  if (bins < 1 || !(hi > lo)) throw ContractError("histogram: need bins >= 1 and hi > lo");
  Histogram h{lo, hi, std::vector<std::size_t>(static_cast<std::size_t>(bins), 0)};
  const double width = (hi - lo) / bins;
  for (double v : values) {
    if (v < lo || v >= hi) continue;
    auto b = static_cast<std::size_t>((v - lo) / width);
    h.counts[std::min(b, h.counts.size() - 1)]++;
  }
  return h;
}

ToyRunResult run_toy(const ToyRunConfig& cfg) {
  cfg.params.validate();
  if (!(cfg.eta > 0.0)) throw ConfigError("toy: eta must be > 0");
  if (cfg.n < 1) throw ConfigError("toy: n must be >= 1");
  ToyRunResult out{};
  out.thinning = cfg.thinning == 0 ? toy_default_thinning(cfg.eta) : cfg.thinning;
  const auto [mean, var] = toy_posterior(cfg.params);
  const double sd = std::sqrt(var);

  auto one = [&](ToyMode mode, std::uint64_t stream) {
    ChainConfig chain;
    chain.n_samples = cfg.n;
    chain.burn_in = cfg.burn_in;
    chain.thinning = out.thinning;
    chain.seed = cfg.seed;
    chain.stream = stream;
    const Trace trace = run_toy_chain(cfg.params, cfg.eta, mode, chain);
    const std::vector<double> theta = trace_column(trace, 0, Block::kTheta);
    MomentAccumulator acc(1);
    for (double v : theta) acc.add(Vector::Constant(1, v));
    return ToyModeResult{mode, ks_vs_gaussian(EmpiricalSample(theta), mean, var),
                         acc.mean()[0], acc.variance()[0],
                         make_histogram(theta, mean - 6.0 * sd, mean + 6.0 * sd, cfg.bins)};
  };
  out.full = one(ToyMode::kFull, 0);
  out.minibatch = one(ToyMode::kMinibatch, 1);
  return out;
}

std::string toy_summary_csv(const ToyRunConfig& cfg, const ToyRunResult& result) {
  std::ostringstream os;
  const auto [mean, var] = toy_posterior(cfg.params);
  write_csv_row(os, {"mode", "eta", "n", "thin", "ks", "mean", "var", "post_mean", "post_var"});
  for (const auto* m : {&result.full, &result.minibatch}) {
    write_csv_row(os, {std::string(to_string(m->mode)), format_double(cfg.eta),
                       std::to_string(cfg.n), std::to_string(result.thinning),
                       format_double(m->ks), format_double(m->mean), format_double(m->variance),
                       format_double(mean), format_double(var)});
  }
  return os.str();
}

std::string histogram_csv(const Histogram& h) {
  std::ostringstream os;
  write_csv_row(os, {"bin_lo", "bin_hi", "count", "density"});
  const double width = (h.hi - h.lo) / static_cast<double>(h.counts.size());
  std::size_t total = 0;
  for (auto c : h.counts) total += c;
  for (std::size_t b = 0; b < h.counts.size(); ++b) {
    const double lo = h.lo + width * static_cast<double>(b);
    const double density =
        total ? static_cast<double>(h.counts[b]) / (static_cast<double>(total) * width) : 0.0;
    write_csv_row(os, {format_double(lo), format_double(lo + width), std::to_string(h.counts[b]),
                       format_double(density)});
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// opcheck

OpcheckResult run_opcheck(const OpcheckConfig& cfg) {
  if (cfg.ks.empty() || cfg.ns.empty()) throw ConfigError("opcheck: K and n lists must be non-empty");
  for (auto k : cfg.ks) {
    if (k < 1) throw ConfigError("opcheck: K must be >= 1");
    if (k > 6) throw ConfigError("opcheck: K > 6 is not supported (exact K! enumeration)");
  }
  for (auto n : cfg.ns) {
    if (n < 1 || n > 8) throw ConfigError("opcheck: n must be in 1..8");
  }
  if (cfg.etas.size() < 3) throw ConfigError("opcheck: need at least 3 step sizes");
  auto norm = [&](const Matrix& m) { return cfg.frobenius ? m.norm() : oplab::spectral_norm(m); };

  OpcheckResult out;
  for (std::size_t t = 0; t < cfg.trials; ++t) {
    const std::size_t k = cfg.ks[t % cfg.ks.size()];
    const Index n = cfg.ns[(t / cfg.ks.size()) % cfg.ns.size()];
    RngStream rng(cfg.seed, t);
    const oplab::GeneratorSet g = oplab::random_generator_set(k, n, rng);
    std::map<std::string, std::vector<double>> errs;
    for (double eta : cfg.etas) {
      const Matrix ref = oplab::reference_flow(g, eta);
      const std::pair<std::string, Matrix> modes[] = {
          {"forward", oplab::splitting_product(g, eta, oplab::SplitOrder::kForward)},
          {"averaged", oplab::splitting_product(g, eta, oplab::SplitOrder::kAveraged)},
          {"randomized", oplab::randomized_expectation(g, eta)}};
      for (const auto& [mode, p] : modes) {
        const double e = norm(p - ref);
        out.rows.push_back({t, k, n, mode, eta, e});
        errs[mode].push_back(e);
      }
    }
    for (const std::string mode : {"forward", "averaged", "randomized"}) {
      oplab::SlopeFit fit{kNaN, kNaN, kNaN};
      const auto& e = errs[mode];
      if (std::all_of(e.begin(), e.end(), [](double v) { return v > 0.0; })) {
        fit = oplab::error_order_slope(cfg.etas, e);
      }
      out.slopes.push_back({t, k, n, mode, fit});
    }
  }
  return out;
}

std::string opcheck_csv(const OpcheckResult& result) {
  std::ostringstream os;
  write_csv_row(os, {"trial", "K", "n", "mode", "eta", "error"});
  for (const auto& r : result.rows) {
    write_csv_row(os, {std::to_string(r.trial), std::to_string(r.k), std::to_string(r.n), r.mode,
                       format_double(r.eta), format_double(r.error)});
  }
  return os.str();
}

std::string opcheck_slopes_csv(const OpcheckResult& result) {
  std::ostringstream os;
  write_csv_row(os, {"trial", "K", "n", "mode", "slope", "r2"});
  for (const auto& s : result.slopes) {
    write_csv_row(os, {std::to_string(s.trial), std::to_string(s.k), std::to_string(s.n), s.mode,
                       format_double(s.fit.slope), format_double(s.fit.r2)});
  }
  return os.str();
}

std::vector<oplab::SlopeFit> run_bch_check(const BchCheckConfig& cfg) {
  std::vector<oplab::SlopeFit> out;
  for (std::size_t p = 0; p < cfg.pairs; ++p) {
    RngStream rng(cfg.seed, 1000 + p);
    const oplab::GeneratorSet g = oplab::random_generator_set(2, cfg.n, rng);
    std::vector<double> errs;
    for (double e : cfg.eps) {
      const Matrix a = e * g.mats[0];
      const Matrix b = e * g.mats[1];
      const Matrix lhs = oplab::matrix_exp(a) * oplab::matrix_exp(b);
      errs.push_back(oplab::spectral_norm(lhs - oplab::matrix_exp(oplab::bch_truncated(a, b, 2))));
    }
    out.push_back(oplab::error_order_slope(cfg.eps, errs));
  }
  return out;
}

// ---------------------------------------------------------------------------
// geom

std::vector<GeomRow> run_geom(const GeomConfig& cfg) {
  const PotentialPtr potential = build_model(cfg.model);
  const Index d = potential->dim();
  const MassMatrix mass = resolve_mass(cfg.mass, d);
  const BoundGradient grad(*potential);
  std::vector<GeomRow> rows;
  std::uint64_t scheme_index = 0;
  for (Scheme scheme : cfg.schemes) {
    for (double c : cfg.frictions) {
      const IntegratorSpec spec(scheme, cfg.eta, c, mass, cfg.inner_steps);
      spec.validate();
      for (std::size_t probe = 0; probe < cfg.probes; ++probe) {
        RngStream rng(cfg.seed, scheme_index * 1'000'000 + probe);
        State z0(standard_normal_vector(rng, d), potential->sample_prior(rng));
        const FrozenStep step = freeze_step(spec, grad, rng);
        const Matrix j = jacobian_fd(step, z0, cfg.eps);
        rows.push_back({scheme, cfg.eta, c, probe, j.determinant(), det_target(spec),
                        symplectic_residual(j)});
      }
    }
    ++scheme_index;
  }
  return rows;
}

std::string geom_csv(const std::vector<GeomRow>& rows) {
  std::ostringstream os;
  write_csv_row(os, {"scheme", "eta", "C", "det_J", "det_target", "det_residual", "symp_residual"});
  for (const auto& r : rows) {
    const double resid = r.det_target ? std::abs(r.det_j - *r.det_target) : kNaN;
    write_csv_row(os, {std::string(to_string(r.scheme)), format_double(r.eta),
                       format_double(r.friction), format_double(r.det_j), opt_double(r.det_target),
                       format_double(resid), format_double(r.symp_residual)});
  }
  return os.str();
}

}  // namespace shmc
