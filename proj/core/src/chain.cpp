#include "shmc/chain.hpp"

#include <chrono>
#include <sstream>

#include "shmc/csv_io.hpp"

namespace shmc {

void ChainConfig::validate() const {
  if (thinning < 1) throw ConfigError("thinning must be >= 1");
  if (n_samples > 0 && (n_samples * thinning) / thinning != n_samples) {
    throw ConfigError("n_samples * thinning overflows");
  }
}

ChainDivergence::ChainDivergence(const DivergenceError& cause, std::size_t step, Trace partial)
    : DivergenceError(cause.scheme(), cause.eta(), step, cause.state()),
      partial_(std::move(partial)) {}

Trace collect_chain(const KernelStep& kernel, State init, const ChainConfig& cfg,
                    double step_duration, Metadata meta) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  Trace trace;
  trace.meta = std::move(meta);
  trace.step_duration = step_duration;
  trace.dim = init.dim();
  trace.states.reserve(cfg.n_samples);
  trace.steps.reserve(cfg.n_samples);

  State z = std::move(init);
  const std::size_t total = cfg.total_steps();
  for (std::size_t step = 1; step <= total; ++step) {
    try {
      kernel(z);
    } catch (const DivergenceError& e) {
      trace.total_steps = step;
      trace.effective_time = static_cast<double>(step) * step_duration;
      throw ChainDivergence(e, step, std::move(trace));
    }
    if (step > cfg.burn_in && (step - cfg.burn_in) % cfg.thinning == 0) {
      trace.states.push_back(z);
      trace.steps.push_back(step);
    }
  }
  trace.total_steps = total;
  trace.effective_time = static_cast<double>(total) * step_duration;
  trace.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return trace;
}

Metadata chain_metadata(const Potential& potential, const IntegratorSpec& spec,
                        const BatchSchedule& schedule, const ChainConfig& cfg) {
  Metadata meta = potential.describe();
  std::ostringstream mass;
  for (Index i = 0; i < spec.mass.dim(); ++i) {
    if (i) mass << ' ';
    mass << format_double(spec.mass.diag()[i]);
  }
  meta.insert(meta.end(), {
                              {"scheme", std::string(to_string(spec.scheme))},
                              {"eta", format_double(spec.eta)},
                              {"C", format_double(spec.friction)},
                              {"mass", mass.str()},
                              {"nl", std::to_string(spec.inner_steps)},
                              {"vhat", format_double(spec.v_hat)},
                              {"mode", std::string(to_string(schedule.mode()))},
                              {"batches", std::to_string(schedule.n_batches())},
                              {"n", std::to_string(cfg.n_samples)},
                              {"burn_in", std::to_string(cfg.burn_in)},
                              {"thin", std::to_string(cfg.thinning)},
                              {"seed", std::to_string(cfg.seed)},
                              {"stream", std::to_string(cfg.stream)},
                              {"init", cfg.init ? "fixed" : "prior"},
                          });
  return meta;
}

Trace run_chain(const Potential& potential, const IntegratorSpec& spec, BatchSchedule& schedule,
                const ChainConfig& cfg, const StepObserver& observer) {
  cfg.validate();
  if (spec.dim() != potential.dim()) {
    throw ConfigError("mass matrix dimension does not match the model");
  }
  if (schedule.mode() != BatchMode::kFull && schedule.n_batches() != potential.n_batches()) {
    throw ConfigError("schedule and potential disagree on the number of batches K");
  }
  if (spec.eta <= 0.0) throw ConfigError("eta must be > 0 for a sampling chain");

  RngStream rng(cfg.seed, cfg.stream);
  State init;
  if (cfg.init) {
    if (cfg.init->dim() != potential.dim()) throw ConfigError("initial state has wrong dimension");
    init = *cfg.init;
  } else {
    Vector theta = potential.sample_prior(rng);
    Vector r = spec.mass.diag().cwiseSqrt().cwiseProduct(standard_normal_vector(rng, spec.dim()));
    init = State(std::move(r), std::move(theta));
  }

  Stepper stepper(spec);
  BoundGradient field(potential);
  Matrix noise(spec.dim(), spec.noise_draws());
  std::size_t step = 0;
  KernelStep kernel = [&](State& z) {
    const BatchDraw draw = schedule.next();
    field.rebind(draw.batch, draw.scale);
    stepper.draw_noise(rng, noise);
    stepper.advance(z, field, noise);
    ++step;
    if (observer) observer(step, z, noise);
  };
  return collect_chain(kernel, std::move(init), cfg, spec.step_duration(),
                       chain_metadata(potential, spec, schedule, cfg));
}

double ergodic_average(const Trace& trace, const std::function<double(const State&)>& phi) {
  if (trace.empty()) throw ContractError("ergodic_average: empty trace");
  double sum = 0.0;
  for (const auto& z : trace.states) sum += phi(z);
  return sum / static_cast<double>(trace.size());
}

std::vector<double> trace_column(const Trace& trace, Index coord, Block which) {
  std::vector<double> out;
  out.reserve(trace.size());
  for (const auto& z : trace.states) {
    const Vector& v = which == Block::kR ? z.r : z.theta;
    if (coord < 0 || coord >= v.size()) throw ContractError("trace coordinate out of range");
    out.push_back(v[coord]);
  }
  return out;
}

double acf1(const std::vector<double>& x) {
  if (x.size() < 3) throw ContractError("acf1: need at least 3 samples");
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  double num = 0.0;
  double den = 0.0;
  for (std::size_t t = 0; t < x.size(); ++t) {
    const double a = x[t] - mean;
    den += a * a;
    if (t + 1 < x.size()) num += a * (x[t + 1] - mean);
  }
  if (!(den > 0.0)) throw ContractError("acf1: degenerate (constant) trace");
  return num / den;
}

double acf1(const Trace& trace, Index coord, Block which) {
  return acf1(trace_column(trace, coord, which));
}

void write_trace_csv(const std::filesystem::path& path, const Trace& trace) {
  std::ostringstream os;
  const Index d = trace.dim;
  std::vector<std::string> fields{"step", "time"};
  for (Index i = 0; i < d; ++i) fields.push_back("theta_" + std::to_string(i));
  for (Index i = 0; i < d; ++i) fields.push_back("r_" + std::to_string(i));
  write_csv_row(os, fields);
  for (std::size_t k = 0; k < trace.size(); ++k) {
    fields.clear();
    fields.push_back(std::to_string(trace.steps[k]));
    fields.push_back(format_double(static_cast<double>(trace.steps[k]) * trace.step_duration));
    for (Index i = 0; i < d; ++i) fields.push_back(format_double(trace.states[k].theta[i]));
    for (Index i = 0; i < d; ++i) fields.push_back(format_double(trace.states[k].r[i]));
    write_csv_row(os, fields);
  }
  write_text_file(path, os.str());
}

}  // namespace shmc
