#pragma once

// One-step transition kernels for the Hamiltonian SDE
//   dtheta = M^-1 r dt
//   dr     = -grad U(theta) dt - C M^-1 r dt + sqrt(2C) dW
// Every scheme has an explicit-noise form (advance) so that geometry probes
// and coupled reference chains can replay the exact same draws.

#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "shmc/core.hpp"
#include "shmc/potentials.hpp"

namespace shmc {

enum class Scheme { kEuler, kLeapfrog, kSpv, kLieTrotter, kSymmetric, kMt3, kSghmc, kHmcPartial };

std::string_view to_string(Scheme scheme);
Scheme parse_scheme(std::string_view name);

/// Gradient (and optionally Hessian-vector) access for one step, already
/// bound to a batch and scaled.
class GradientField {
 public:
  virtual ~GradientField() = default;
  virtual Index dim() const = 0;
  virtual void gradient(const Vector& theta, Vector& out) const = 0;
  virtual bool has_hessian() const { return false; }
  /// Throws ConfigError unless has_hessian().
  virtual void hessian_vec(const Vector& theta, const Vector& v, Vector& out) const;
};

/// scale * grad U_batch, the form seen by the integrators.
class BoundGradient final : public GradientField {
 public:
  BoundGradient(const Potential& potential, BatchSel batch = BatchSel::full(),
                double scale = 1.0)
      : potential_(&potential), batch_(batch), scale_(scale) {}

  Index dim() const override { return potential_->dim(); }
  void gradient(const Vector& theta, Vector& out) const override;
  bool has_hessian() const override { return true; }
  void hessian_vec(const Vector& theta, const Vector& v, Vector& out) const override;

  void rebind(BatchSel batch, double scale) {
    batch_ = batch;
    scale_ = scale;
  }

 private:
  const Potential* potential_;
  BatchSel batch_;
  double scale_;
};

/// Adapter for closures, mostly for tests and hand-built potentials.
class FunctionGradient final : public GradientField {
 public:
  using Grad = std::function<Vector(const Vector&)>;
  using HessVec = std::function<Vector(const Vector&, const Vector&)>;

  FunctionGradient(Index dim, Grad grad, HessVec hess = {})
      : dim_(dim), grad_(std::move(grad)), hess_(std::move(hess)) {}

  Index dim() const override { return dim_; }
  void gradient(const Vector& theta, Vector& out) const override { out = grad_(theta); }
  bool has_hessian() const override { return static_cast<bool>(hess_); }
  void hessian_vec(const Vector& theta, const Vector& v, Vector& out) const override;

 private:
  Index dim_;
  Grad grad_;
  HessVec hess_;
};

struct IntegratorSpec {
  Scheme scheme;
  double eta;
  double friction;
  MassMatrix mass;
  int inner_steps = 1;  // N_l, Lie-Trotter and HMC only
  double v_hat = 0.0;   // SGHMC only

  IntegratorSpec(Scheme s, double step, double c, MassMatrix m, int n_l = 1, double vhat = 0.0)
      : scheme(s), eta(step), friction(c), mass(std::move(m)), inner_steps(n_l), v_hat(vhat) {}

  Index dim() const { return mass.dim(); }

  /// Throws ConfigError on eta < 0, C < 0, N_l < 1, v_hat < 0, v_hat > C
  /// (SGHMC), or non-identity M (HMC). eta = 0 is accepted (identity step).
  void validate() const;

  /// Simulated time covered by one step: N_l * eta for Lie-Trotter/HMC.
  double step_duration() const;

  /// Number of d-vectors of N(0, 1) draws consumed per step.
  int noise_draws() const;
};

class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(Scheme scheme, double eta, std::size_t step, State state);

  Scheme scheme() const { return scheme_; }
  double eta() const { return eta_; }
  std::size_t step() const { return step_; }
  const State& state() const { return state_; }

 private:
  Scheme scheme_;
  double eta_;
  std::size_t step_;
  State state_;
};

/// Reusable stepping engine with preallocated workspace.
class Stepper {
 public:
  explicit Stepper(IntegratorSpec spec);

  const IntegratorSpec& spec() const { return spec_; }

  /// d x noise_draws() matrix of fresh N(0, 1) draws.
  void draw_noise(RngStream& rng, Matrix& noise) const;

  /// Applies one step in place with the given noise. Throws DivergenceError
  /// (step index 0) when the result is not finite.
  void advance(State& z, const GradientField& grad, const Matrix& noise);

  void step(State& z, const GradientField& grad, RngStream& rng);

 private:
  void euler(State& z, const GradientField& grad, const Matrix& noise);
  void stochastic_leapfrog(State& z, const GradientField& grad, const Matrix& noise,
                           double noise_scale);
  void spv(State& z, const GradientField& grad, const Matrix& noise);
  void deterministic_leapfrog(State& z, const GradientField& grad, double h);
  void refresh(Vector& r, double t, const Eigen::Ref<const Vector>& w) const;
  void lie_trotter(State& z, const GradientField& grad, const Matrix& noise);
  void symmetric(State& z, const GradientField& grad, const Matrix& noise);
  void mt3(State& z, const GradientField& grad, const Matrix& noise);

  IntegratorSpec spec_;
  Vector g_, h_, t1_, t2_, t3_, f1_, f2_;
  Matrix noise_;
};

/// Exact Ornstein-Uhlenbeck solve of dr = -(C M^-1 r + f) dt + sqrt(2C) dW
/// over time eta with constant forcing f:
///   r' = e^{-x} r - eta phi(x) f + sqrt(M (1 - e^{-2x})) w,  x = C eta / M,
/// phi(x) = (1 - e^{-x}) / x. C = 0 gives r - eta f without noise.
Vector ou_exact_step(const Vector& r, const Vector& f, double eta, double friction,
                     const MassMatrix& mass, const Vector& w);
Vector ou_exact_step(const Vector& r, const Vector& f, double eta, double friction,
                     const MassMatrix& mass, RngStream& rng);

// Single-step conveniences. Each checks that spec.scheme matches.
State euler_step(const State& z, const GradientField& grad, const IntegratorSpec& spec,
                 RngStream& rng);
State leapfrog_step(const State& z, const GradientField& grad, const IntegratorSpec& spec,
                    RngStream& rng);
State spv_step(const State& z, const GradientField& grad, const IntegratorSpec& spec,
               RngStream& rng);
State lie_trotter_step(const State& z, const GradientField& grad, const IntegratorSpec& spec,
                       RngStream& rng);
State hmc_partial_step(const State& z, const GradientField& grad, const IntegratorSpec& spec,
                       RngStream& rng);
State symmetric_step(const State& z, const GradientField& grad, const IntegratorSpec& spec,
                     RngStream& rng);
State mt3_step(const State& z, const GradientField& grad, const IntegratorSpec& spec,
               RngStream& rng);
State sghmc_step(const State& z, const GradientField& grad, const IntegratorSpec& spec,
                 RngStream& rng);

/// Dispatches on spec.scheme with explicit noise (d x noise_draws()).
State step_with_noise(const State& z, const GradientField& grad, const IntegratorSpec& spec,
                      const Matrix& noise);

}  // namespace shmc
