#include "shmc/integrators.hpp"

#include <cmath>
#include <sstream>

namespace shmc {

namespace {

struct SchemeName {
  Scheme scheme;
  std::string_view name;
};

constexpr SchemeName kSchemeNames[] = {
    {Scheme::kEuler, "euler"},         {Scheme::kLeapfrog, "leapfrog"},
    {Scheme::kSpv, "spv"},             {Scheme::kLieTrotter, "lie-trotter"},
    {Scheme::kSymmetric, "symmetric"}, {Scheme::kMt3, "mt3"},
    {Scheme::kSghmc, "sghmc"},         {Scheme::kHmcPartial, "hmc"},
};

// -expm1(-2x) = 1 - e^{-2x}, the OU variance factor.
Vector ou_variance_factor(const Vector& x) {
  return x.unaryExpr([](double v) { return -std::expm1(-2.0 * v); });
}

std::string divergence_message(Scheme scheme, double eta, std::size_t step) {
  std::ostringstream os;
  os << "divergence: non-finite state after step " << step << " (scheme " << to_string(scheme)
     << ", eta " << eta << ")";
  return os.str();
}

}  // namespace

std::string_view to_string(Scheme scheme) {
  for (const auto& s : kSchemeNames) {
    if (s.scheme == scheme) return s.name;
  }
  return "?";
}

Scheme parse_scheme(std::string_view name) {
  for (const auto& s : kSchemeNames) {
    if (s.name == name) return s.scheme;
  }
  throw ConfigError("unknown scheme: " + std::string(name));
}

void GradientField::hessian_vec(const Vector&, const Vector&, Vector&) const {
  throw ConfigError("gradient provider has no Hessian-vector product");
}

void BoundGradient::gradient(const Vector& theta, Vector& out) const {
  potential_->gradient_into(theta, batch_, out);
  if (scale_ != 1.0) out *= scale_;
}

void BoundGradient::hessian_vec(const Vector& theta, const Vector& v, Vector& out) const {
  potential_->hessian_vec_into(theta, v, batch_, out);
  if (scale_ != 1.0) out *= scale_;
}

void FunctionGradient::hessian_vec(const Vector& theta, const Vector& v, Vector& out) const {
  if (!hess_) GradientField::hessian_vec(theta, v, out);
  out = hess_(theta, v);
}

void IntegratorSpec::validate() const {
  if (!(eta >= 0.0) || !std::isfinite(eta)) throw ConfigError("eta must be finite and >= 0");
  if (!(friction >= 0.0) || !std::isfinite(friction)) {
    throw ConfigError("friction C must be finite and >= 0");
  }
  if (inner_steps < 1) throw ConfigError("inner steps N_l must be >= 1");
  if (!(v_hat >= 0.0)) throw ConfigError("v_hat must be >= 0");
  if (scheme == Scheme::kSghmc && v_hat > friction) {
    throw ConfigError("sghmc: v_hat > C gives a negative noise variance 2(C - v_hat) eta");
  }
  if (scheme == Scheme::kHmcPartial && !mass.is_identity()) {
    throw ConfigError("hmc: partial refreshment is defined for M = I only");
  }
}

double IntegratorSpec::step_duration() const {
  if (scheme == Scheme::kLieTrotter || scheme == Scheme::kHmcPartial) {
    return static_cast<double>(inner_steps) * eta;
  }
  return eta;
}

int IntegratorSpec::noise_draws() const {
  return (scheme == Scheme::kSymmetric || scheme == Scheme::kMt3) ? 2 : 1;
}

DivergenceError::DivergenceError(Scheme scheme, double eta, std::size_t step, State state)
    : std::runtime_error(divergence_message(scheme, eta, step)),
      scheme_(scheme),
      eta_(eta),
      step_(step),
      state_(std::move(state)) {}

Stepper::Stepper(IntegratorSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  const Index d = spec_.dim();
  for (Vector* v : {&g_, &h_, &t1_, &t2_, &t3_, &f1_, &f2_}) v->setZero(d);
  noise_.setZero(d, spec_.noise_draws());
}

void Stepper::draw_noise(RngStream& rng, Matrix& noise) const {
  noise.resize(spec_.dim(), spec_.noise_draws());
  for (Index c = 0; c < noise.cols(); ++c) rng.fill_normal(noise.col(c));
}

void Stepper::step(State& z, const GradientField& grad, RngStream& rng) {
  draw_noise(rng, noise_);
  advance(z, grad, noise_);
}

void Stepper::advance(State& z, const GradientField& grad, const Matrix& noise) {
  if (z.dim() != spec_.dim() || grad.dim() != spec_.dim()) {
    throw ContractError("step: state, gradient and mass dimensions differ");
  }
  if (noise.rows() != spec_.dim() || noise.cols() != spec_.noise_draws()) {
    throw ContractError("step: noise matrix has the wrong shape");
  }
  switch (spec_.scheme) {
    case Scheme::kEuler: euler(z, grad, noise); break;
    case Scheme::kLeapfrog:
      stochastic_leapfrog(z, grad, noise, std::sqrt(2.0 * spec_.friction * spec_.eta));
      break;
    case Scheme::kSghmc:
      stochastic_leapfrog(z, grad, noise,
                          std::sqrt(2.0 * (spec_.friction - spec_.v_hat) * spec_.eta));
      break;
    case Scheme::kSpv: spv(z, grad, noise); break;
    case Scheme::kLieTrotter:
    case Scheme::kHmcPartial: lie_trotter(z, grad, noise); break;
    case Scheme::kSymmetric: symmetric(z, grad, noise); break;
    case Scheme::kMt3: mt3(z, grad, noise); break;
  }
  if (!z.finite()) throw DivergenceError(spec_.scheme, spec_.eta, 0, z);
}

void Stepper::euler(State& z, const GradientField& grad, const Matrix& noise) {
  const double eta = spec_.eta;
  const Vector& inv = spec_.mass.inverse();
  grad.gradient(z.theta, g_);
  h_ = z.r;
  z.r += -eta * spec_.friction * inv.cwiseProduct(h_) - eta * g_ +
         std::sqrt(2.0 * spec_.friction * eta) * noise.col(0);
  z.theta += eta * inv.cwiseProduct(h_);
}

void Stepper::stochastic_leapfrog(State& z, const GradientField& grad, const Matrix& noise,
                                  double noise_scale) {
  const double eta = spec_.eta;
  const Vector& inv = spec_.mass.inverse();
  z.theta += (0.5 * eta) * inv.cwiseProduct(z.r);
  grad.gradient(z.theta, g_);
  z.r += -eta * g_ - eta * spec_.friction * inv.cwiseProduct(z.r) + noise_scale * noise.col(0);
  z.theta += (0.5 * eta) * inv.cwiseProduct(z.r);
}

void Stepper::spv(State& z, const GradientField& grad, const Matrix& noise) {
  const double eta = spec_.eta;
  const Vector& inv = spec_.mass.inverse();
  z.theta += (0.5 * eta) * inv.cwiseProduct(z.r);
  grad.gradient(z.theta, g_);
  const Vector x = (spec_.friction * eta) * inv;
  const Vector decay = (-x.array()).exp().matrix();
  const Vector phi = x.unaryExpr([](double v) { return one_minus_exp_over_x(v); });
  const Vector sd = spec_.mass.diag().cwiseProduct(ou_variance_factor(x)).cwiseSqrt();
  z.r = decay.cwiseProduct(z.r) - eta * phi.cwiseProduct(g_) + sd.cwiseProduct(noise.col(0));
  z.theta += (0.5 * eta) * inv.cwiseProduct(z.r);
}

void Stepper::deterministic_leapfrog(State& z, const GradientField& grad, double h) {
  const Vector& inv = spec_.mass.inverse();
  z.theta += (0.5 * h) * inv.cwiseProduct(z.r);
  grad.gradient(z.theta, g_);
  z.r -= h * g_;
  z.theta += (0.5 * h) * inv.cwiseProduct(z.r);
}

// r <- e^{-C t / M} r + sqrt(M (1 - e^{-2 C t / M})) w. Lie-Trotter, HMC and
// the symmetric scheme all refresh through here.
void Stepper::refresh(Vector& r, double t, const Eigen::Ref<const Vector>& w) const {
  const Vector x = (spec_.friction * t) * spec_.mass.inverse();
  const Vector alpha = (-x.array()).exp().matrix();
  const Vector sd = spec_.mass.diag().cwiseProduct(ou_variance_factor(x)).cwiseSqrt();
  r = alpha.cwiseProduct(r) + sd.cwiseProduct(w);
}

void Stepper::lie_trotter(State& z, const GradientField& grad, const Matrix& noise) {
  for (int i = 0; i < spec_.inner_steps; ++i) deterministic_leapfrog(z, grad, spec_.eta);
  refresh(z.r, static_cast<double>(spec_.inner_steps) * spec_.eta, noise.col(0));
}

void Stepper::symmetric(State& z, const GradientField& grad, const Matrix& noise) {
  refresh(z.r, 0.5 * spec_.eta, noise.col(0));
  deterministic_leapfrog(z, grad, spec_.eta);
  refresh(z.r, 0.5 * spec_.eta, noise.col(1));
}

void Stepper::mt3(State& z, const GradientField& grad, const Matrix& noise) {
  const double h = spec_.eta;
  const double c = spec_.friction;
  const double h2 = h * h;
  const Vector& inv = spec_.mass.inverse();
  const Vector cinv = c * inv;
  const Vector& r = z.r;
  const Vector& theta = z.theta;

  // Stage 1
  t1_ = theta + (7.0 / 24.0) * h * inv.cwiseProduct(r);
  grad.gradient(t1_, g_);
  Vector r1 = (r - (7.0 / 24.0) * h * g_).cwiseQuotient(
      (Vector::Ones(r.size()) + (7.0 / 24.0) * h * cinv));
  f1_ = -g_ - cinv.cwiseProduct(r1);

  // Stage 2
  t2_ = theta + (25.0 / 24.0) * h * inv.cwiseProduct(r) + (0.5 * h2) * inv.cwiseProduct(f1_);
  grad.gradient(t2_, g_);
  Vector r2 = (r + (2.0 / 3.0) * h * f1_ - (3.0 / 8.0) * h * g_)
                  .cwiseQuotient(Vector::Ones(r.size()) + (3.0 / 8.0) * h * cinv);
  f2_ = -g_ - cinv.cwiseProduct(r2);

  // Stage 3
  t3_ = theta + h * inv.cwiseProduct(r) + (17.0 / 36.0) * h2 * inv.cwiseProduct(f1_) +
        (1.0 / 36.0) * h2 * inv.cwiseProduct(f2_);
  grad.gradient(t3_, g_);
  Vector r3 = (r + (2.0 / 3.0) * h * f1_ - (2.0 / 3.0) * h * f2_ - h * g_)
                  .cwiseQuotient(Vector::Ones(r.size()) + h * cinv);

  // Stochastic part. nu = w1/2 + w2/(2 sqrt 3) has the law of
  // h^{-3/2} \int_0^h (h - s) dW given w1 = W(h)/sqrt(h).
  const double s = std::sqrt(2.0 * c);
  const auto w1 = noise.col(0);
  const Vector nu = 0.5 * w1 + (0.5 / std::sqrt(3.0)) * noise.col(1);
  const double h15 = h * std::sqrt(h);
  const double h25 = h2 * std::sqrt(h);
  const Vector inv2 = inv.cwiseAbs2();

  z.theta = t3_ + (h15 * s) * inv.cwiseProduct(nu) - (c * h25 * s / 6.0) * inv2.cwiseProduct(w1);

  Vector rn = r3 + (std::sqrt(h) * s) * w1 - (c * h15 * s) * inv.cwiseProduct(nu) +
              (h25 * c * c * s / 6.0) * inv2.cwiseProduct(w1);
  if (s != 0.0 && h25 != 0.0) {
    h_ = s * inv.cwiseProduct(w1);
    grad.hessian_vec(t3_, h_, g_);
    rn -= (h25 / 6.0) * g_;
  }
  z.r = std::move(rn);
}

Vector ou_exact_step(const Vector& r, const Vector& f, double eta, double friction,
                     const MassMatrix& mass, const Vector& w) {
  if (r.size() != mass.dim() || f.size() != mass.dim() || w.size() != mass.dim()) {
    throw ContractError("ou_exact_step: dimension mismatch");
  }
  if (!(eta >= 0.0) || !(friction >= 0.0)) {
    throw ContractError("ou_exact_step: eta and C must be >= 0");
  }
  const Vector x = (friction * eta) * mass.inverse();
  const Vector decay = (-x.array()).exp().matrix();
  const Vector phi = x.unaryExpr([](double v) { return one_minus_exp_over_x(v); });
  const Vector sd = mass.diag().cwiseProduct(ou_variance_factor(x)).cwiseSqrt();
  return decay.cwiseProduct(r) - eta * phi.cwiseProduct(f) + sd.cwiseProduct(w);
}

Vector ou_exact_step(const Vector& r, const Vector& f, double eta, double friction,
                     const MassMatrix& mass, RngStream& rng) {
  return ou_exact_step(r, f, eta, friction, mass, standard_normal_vector(rng, mass.dim()));
}

namespace {

State run_one(const State& z, const GradientField& grad, const IntegratorSpec& spec,
              RngStream& rng, Scheme expected) {
  if (spec.scheme != expected) {
    throw ContractError("step function for " + std::string(to_string(expected)) +
                      " called with scheme " + std::string(to_string(spec.scheme)));
  }
  Stepper stepper(spec);
  State out = z;
  stepper.step(out, grad, rng);
  return out;
}

}  // namespace

State euler_step(const State& z, const GradientField& grad, const IntegratorSpec& spec,
                 RngStream& rng) {
  return run_one(z, grad, spec, rng, Scheme::kEuler);
}

State leapfrog_step(const State& z, const GradientField& grad, const IntegratorSpec& spec,
                    RngStream& rng) {
  return run_one(z, grad, spec, rng, Scheme::kLeapfrog);
}

State spv_step(const State& z, const GradientField& grad, const IntegratorSpec& spec,
               RngStream& rng) {
  return run_one(z, grad, spec, rng, Scheme::kSpv);
}

State lie_trotter_step(const State& z, const GradientField& grad, const IntegratorSpec& spec,
                       RngStream& rng) {
  return run_one(z, grad, spec, rng, Scheme::kLieTrotter);
}

State hmc_partial_step(const State& z, const GradientField& grad, const IntegratorSpec& spec,
                       RngStream& rng) {
  return run_one(z, grad, spec, rng, Scheme::kHmcPartial);
}

State symmetric_step(const State& z, const GradientField& grad, const IntegratorSpec& spec,
                     RngStream& rng) {
  return run_one(z, grad, spec, rng, Scheme::kSymmetric);
}

State mt3_step(const State& z, const GradientField& grad, const IntegratorSpec& spec,
               RngStream& rng) {
  if (!grad.has_hessian()) throw ConfigError("mt3 requires a Hessian-vector provider");
  return run_one(z, grad, spec, rng, Scheme::kMt3);
}

State sghmc_step(const State& z, const GradientField& grad, const IntegratorSpec& spec,
                 RngStream& rng) {
  return run_one(z, grad, spec, rng, Scheme::kSghmc);
}

State step_with_noise(const State& z, const GradientField& grad, const IntegratorSpec& spec,
                      const Matrix& noise) {
  Stepper stepper(spec);
  State out = z;
  stepper.advance(out, grad, noise);
  return out;
}

}  // namespace shmc
