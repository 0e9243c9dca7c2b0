#pragma once

// Negative log posteriors U(theta) = -log p(D|theta) - log p(theta) with a
// contiguous split of the data into K batches. Batch b carries its own
// negative log-likelihood plus prior/K, so the K sub-potentials sum to U.
// Gradients returned per batch are raw; the K rescale is applied by the
// caller (see BoundGradient in integrators.hpp).

#include <cstddef>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "shmc/core.hpp"

namespace shmc {

enum class ModelKind { kToy1d, kLinearGaussian, kLogistic2d };

std::string_view to_string(ModelKind kind);
ModelKind parse_model(std::string_view name);

/// Selects the full potential or one of the K batches (0-based).
class BatchSel {
 public:
  static BatchSel full() { return BatchSel(kFull); }
  static BatchSel index(std::size_t i) { return BatchSel(i); }

  bool is_full() const { return index_ == kFull; }
  std::size_t index() const { return index_; }

  friend bool operator==(BatchSel a, BatchSel b) { return a.index_ == b.index_; }

 private:
  static constexpr std::size_t kFull = static_cast<std::size_t>(-1);
  explicit BatchSel(std::size_t i) : index_(i) {}
  std::size_t index_;
};

struct GaussianPosterior {
  Vector mean;
  Matrix covariance;
};

class Potential {
 public:
  virtual ~Potential() = default;
  Potential(const Potential&) = delete;
  Potential& operator=(const Potential&) = delete;

  virtual ModelKind kind() const = 0;
  virtual Index dim() const = 0;
  virtual std::size_t n_observations() const = 0;
  std::size_t n_batches() const { return bounds_.size() - 1; }

  /// Observation index range [first, last) of batch b.
  std::pair<std::size_t, std::size_t> batch_range(std::size_t b) const;

  double value(const Vector& theta, BatchSel batch = BatchSel::full()) const;
  Vector gradient(const Vector& theta, BatchSel batch = BatchSel::full()) const;
  Vector hessian_vec(const Vector& theta, const Vector& v,
                     BatchSel batch = BatchSel::full()) const;

  /// Allocation-free forms for the sampling loops; `out` must already have
  /// size dim(). No argument checking beyond debug asserts.
  void gradient_into(const Vector& theta, BatchSel batch, Vector& out) const;
  void hessian_vec_into(const Vector& theta, const Vector& v, BatchSel batch,
                        Vector& out) const;

  /// Exact conjugate posterior; throws UnsupportedModelError when none exists.
  virtual GaussianPosterior analytic_posterior() const;

  virtual Vector sample_prior(RngStream& rng) const = 0;

  /// Human-readable parameters echoed into run metadata.
  virtual std::vector<std::pair<std::string, std::string>> describe() const = 0;

 protected:
  Potential(std::size_t n_obs, std::size_t n_batches);

  // The sub-potential of observations [first, last) plus prior_weight * prior.
  virtual double block_value(const Vector& theta, std::size_t first, std::size_t last,
                             double prior_weight) const = 0;
  virtual void block_gradient(const Vector& theta, std::size_t first, std::size_t last,
                              double prior_weight, Vector& out) const = 0;
  virtual void block_hessian_vec(const Vector& theta, const Vector& v, std::size_t first,
                                 std::size_t last, double prior_weight,
                                 Vector& out) const = 0;

 private:
  void check(const Vector& theta, BatchSel batch) const;
  std::vector<std::size_t> bounds_;
};

using PotentialPtr = std::shared_ptr<const Potential>;

// ---------------------------------------------------------------------------
// toy-1d: two observations x1, x2 ~ N(theta, sigma_x2), prior N(0, sigma_theta2).

struct ToyData {
  double x1 = 4.0;
  double x2 = -3.2;
  double sigma_x2 = 2.0;
  double sigma_theta2 = 0.5;

  double v() const { return sigma_x2 / sigma_theta2 + 2.0; }
  double sigma_l2() const { return 1.0 / (1.0 / sigma_theta2 + 2.0 / sigma_x2); }
  double posterior_mean() const { return (x1 + x2) / v(); }
  /// Minimiser of the K = 2 sub-potential of observation i (0 or 1).
  double batch_center(std::size_t i) const { return 2.0 * (i == 0 ? x1 : x2) / v(); }
};

PotentialPtr make_toy_1d(const ToyData& data, std::size_t n_batches = 1);

// ---------------------------------------------------------------------------
// linear-gaussian: y = Phi w + N(0, noise_var), prior N(0, prior_var I).

struct LinearGaussianData {
  Matrix features;  // n x D
  Vector targets;   // n
  double noise_var = 0.1;
  double prior_var = 1.0;
};

/// Trigonometric basis sqrt(2/D) cos(omega_k x - pi/4) evaluated at inputs x.
Matrix trig_features(const Vector& x, const Vector& omegas);
/// Default frequencies omega_k = k, k = 1..D.
Vector default_frequencies(Index n_features);

struct SyntheticRegression {
  Index n_features = 2;
  std::size_t n_obs = 16;
  double noise_var = 1.0;
  double prior_var = 1.0;
  double x_min = -3.0;
  double x_max = 3.0;
};

/// Inputs uniform on [x_min, x_max] sorted ascending (so contiguous batches
/// cover distinct input regions), true weights drawn from the prior.
LinearGaussianData make_synthetic_regression(const SyntheticRegression& cfg, RngStream& rng);

PotentialPtr make_linear_gaussian(LinearGaussianData data, std::size_t n_batches = 1);

// ---------------------------------------------------------------------------
// logistic-2d: labels in {0,1}, standard-normal prior (prior_var = 1).

struct LogisticData {
  Matrix features;  // n x 2
  Eigen::VectorXi labels;
  double prior_var = 1.0;
};

PotentialPtr make_logistic_2d(const Matrix& features, const Eigen::VectorXi& labels,
                              std::size_t n_batches = 1, double prior_var = 1.0);

LogisticData make_synthetic_logistic(std::size_t n_obs, const Vector& true_theta,
                                     RngStream& rng);

// ---------------------------------------------------------------------------
// CSV ingestion (header row required).
//   toy:       column `x` with exactly two rows
//   lingauss:  column `x` (scalar input, expanded with trig_features) and `y`
//   logistic:  two feature columns followed by `label`

ToyData load_toy_csv(const std::string& path);
LinearGaussianData load_regression_csv(const std::string& path, const Vector& omegas,
                                       double noise_var, double prior_var);
LogisticData load_logistic_csv(const std::string& path);

double hamiltonian(const State& z, const Potential& potential, const MassMatrix& mass);

}  // namespace shmc
