#include "shmc/potentials.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cassert>
#include <cmath>
#include <numbers>

#include "shmc/csv_io.hpp"

namespace shmc {

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::kToy1d: return "toy";
    case ModelKind::kLinearGaussian: return "lingauss";
    case ModelKind::kLogistic2d: return "logistic2d";
  }
  return "?";
}

ModelKind parse_model(std::string_view name) {
  if (name == "toy") return ModelKind::kToy1d;
  if (name == "lingauss") return ModelKind::kLinearGaussian;
  if (name == "logistic2d") return ModelKind::kLogistic2d;
  throw ConfigError("unknown model: " + std::string(name));
}

Potential::Potential(std::size_t n_obs, std::size_t n_batches) {
  if (n_batches < 1) throw ConfigError("number of batches K must be >= 1");
  if (n_batches > std::max<std::size_t>(n_obs, 1)) {
    throw ConfigError("number of batches K exceeds the number of observations");
  }
  bounds_.resize(n_batches + 1);
  for (std::size_t b = 0; b <= n_batches; ++b) bounds_[b] = b * n_obs / n_batches;
}

std::pair<std::size_t, std::size_t> Potential::batch_range(std::size_t b) const {
  if (b >= n_batches()) throw ContractError("batch id out of range");
  return {bounds_[b], bounds_[b + 1]};
}

void Potential::check(const Vector& theta, BatchSel batch) const {
  if (theta.size() != dim()) throw ContractError("theta dimension does not match the model");
  if (!batch.is_full() && batch.index() >= n_batches()) {
    throw ContractError("batch id out of range");
  }
}

double Potential::value(const Vector& theta, BatchSel batch) const {
  check(theta, batch);
  if (batch.is_full()) return block_value(theta, 0, n_observations(), 1.0);
  const auto [first, last] = batch_range(batch.index());
  return block_value(theta, first, last, 1.0 / static_cast<double>(n_batches()));
}

Vector Potential::gradient(const Vector& theta, BatchSel batch) const {
  check(theta, batch);
  Vector out(dim());
  gradient_into(theta, batch, out);
  return out;
}

Vector Potential::hessian_vec(const Vector& theta, const Vector& v, BatchSel batch) const {
  check(theta, batch);
  if (v.size() != dim()) throw ContractError("direction dimension does not match the model");
  Vector out(dim());
  hessian_vec_into(theta, v, batch, out);
  return out;
}

void Potential::gradient_into(const Vector& theta, BatchSel batch, Vector& out) const {
  assert(out.size() == dim());
  if (batch.is_full()) {
    block_gradient(theta, 0, n_observations(), 1.0, out);
  } else {
    block_gradient(theta, bounds_[batch.index()], bounds_[batch.index() + 1],
                   1.0 / static_cast<double>(n_batches()), out);
  }
}

void Potential::hessian_vec_into(const Vector& theta, const Vector& v, BatchSel batch,
                                 Vector& out) const {
  assert(out.size() == dim());
  if (batch.is_full()) {
    block_hessian_vec(theta, v, 0, n_observations(), 1.0, out);
  } else {
    block_hessian_vec(theta, v, bounds_[batch.index()], bounds_[batch.index() + 1],
                      1.0 / static_cast<double>(n_batches()), out);
  }
}

GaussianPosterior Potential::analytic_posterior() const {
  throw UnsupportedModelError("no closed-form posterior for model " +
                              std::string(to_string(kind())));
}

double hamiltonian(const State& z, const Potential& potential, const MassMatrix& mass) {
  if (z.dim() != potential.dim() || z.dim() != mass.dim()) {
    throw ContractError("hamiltonian: dimension mismatch");
  }
  return potential.value(z.theta) + kinetic_energy(z.r, mass);
}

// ---------------------------------------------------------------------------
// Linear-Gaussian. Sufficient statistics per observation block are
// precomputed, so a block gradient costs O(D^2).

namespace {

class LinearGaussianPotential final : public Potential {
 public:
  LinearGaussianPotential(LinearGaussianData data, std::size_t n_batches,
                          ModelKind kind = ModelKind::kLinearGaussian)
      : Potential(static_cast<std::size_t>(data.targets.size()), n_batches),
        data_(std::move(data)),
        kind_(kind) {
    const Index d = data_.features.cols();
    if (data_.features.rows() != data_.targets.size()) {
      throw ContractError("linear-gaussian: features and targets disagree in length");
    }
    if (d < 1) throw ContractError("linear-gaussian: need at least one feature");
    if (!(data_.noise_var > 0.0) || !(data_.prior_var > 0.0)) {
      throw ContractError("linear-gaussian: variances must be > 0");
    }
    const std::size_t k = this->n_batches();
    gram_.resize(k);
    rhs_.resize(k);
    offset_.resize(k);
    for (std::size_t b = 0; b < k; ++b) {
      const auto [first, last] = batch_range(b);
      const auto rows = static_cast<Index>(last - first);
      const auto phi = data_.features.middleRows(static_cast<Index>(first), rows);
      const auto y = data_.targets.segment(static_cast<Index>(first), rows);
      gram_[b] = phi.transpose() * phi / data_.noise_var;
      rhs_[b] = phi.transpose() * y / data_.noise_var;
      offset_[b] = 0.5 * y.squaredNorm() / data_.noise_var;
    }
    full_gram_ = data_.features.transpose() * data_.features / data_.noise_var;
    full_rhs_ = data_.features.transpose() * data_.targets / data_.noise_var;
    full_offset_ = 0.5 * data_.targets.squaredNorm() / data_.noise_var;
  }

  ModelKind kind() const override { return kind_; }
  Index dim() const override { return data_.features.cols(); }
  std::size_t n_observations() const override {
    return static_cast<std::size_t>(data_.targets.size());
  }

  GaussianPosterior analytic_posterior() const override {
    Matrix precision = full_gram_;
    precision.diagonal().array() += 1.0 / data_.prior_var;
    Eigen::LLT<Matrix> llt(precision);
    GaussianPosterior post;
    post.mean = llt.solve(full_rhs_);
    post.covariance = llt.solve(Matrix::Identity(dim(), dim()));
    return post;
  }

  Vector sample_prior(RngStream& rng) const override {
    return std::sqrt(data_.prior_var) * standard_normal_vector(rng, dim());
  }

  std::vector<std::pair<std::string, std::string>> describe() const override {
    return {{"model", std::string(to_string(kind_))},
            {"n_obs", std::to_string(n_observations())},
            {"n_features", std::to_string(dim())},
            {"noise_var", format_double(data_.noise_var)},
            {"prior_var", format_double(data_.prior_var)},
            {"K", std::to_string(n_batches())}};
  }

 protected:
  double block_value(const Vector& theta, std::size_t first, std::size_t last,
                     double prior_weight) const override {
    const auto& [g, b, c] = block(first, last);
    return 0.5 * theta.dot(g * theta) - b.dot(theta) + c +
           prior_weight * 0.5 * theta.squaredNorm() / data_.prior_var;
  }

  void block_gradient(const Vector& theta, std::size_t first, std::size_t last,
                      double prior_weight, Vector& out) const override {
    const auto& [g, b, c] = block(first, last);
    (void)c;
    out.noalias() = g * theta;
    out -= b;
    out += (prior_weight / data_.prior_var) * theta;
  }

  void block_hessian_vec(const Vector&, const Vector& v, std::size_t first, std::size_t last,
                         double prior_weight, Vector& out) const override {
    const auto& [g, b, c] = block(first, last);
    (void)b;
    (void)c;
    out.noalias() = g * v;
    out += (prior_weight / data_.prior_var) * v;
  }

 private:
  struct BlockRef {
    const Matrix& g;
    const Vector& b;
    double c;
  };

  BlockRef block(std::size_t first, std::size_t last) const {
    if (first == 0 && last == n_observations()) return {full_gram_, full_rhs_, full_offset_};
    // Batch blocks are looked up by their first index.
    for (std::size_t k = 0; k < n_batches(); ++k) {
      if (batch_range(k).first == first) return {gram_[k], rhs_[k], offset_[k]};
    }
    assert(false);
    return {full_gram_, full_rhs_, full_offset_};
  }

  LinearGaussianData data_;
  ModelKind kind_;
  std::vector<Matrix> gram_;
  std::vector<Vector> rhs_;
  std::vector<double> offset_;
  Matrix full_gram_;
  Vector full_rhs_;
  double full_offset_ = 0.0;
};

// The toy model is a one-feature linear-Gaussian model with a column of ones.
class ToyPotential final : public Potential {
 public:
  ToyPotential(const ToyData& data, std::size_t n_batches)
      : Potential(2, n_batches), data_(data), inner_(to_regression(data), n_batches) {
    if (!(data.sigma_x2 > 0.0) || !(data.sigma_theta2 > 0.0)) {
      throw ContractError("toy: variances must be > 0");
    }
  }

  ModelKind kind() const override { return ModelKind::kToy1d; }
  Index dim() const override { return 1; }
  std::size_t n_observations() const override { return 2; }

  GaussianPosterior analytic_posterior() const override {
    GaussianPosterior post;
    post.mean = Vector::Constant(1, data_.posterior_mean());
    post.covariance = Matrix::Constant(1, 1, data_.sigma_l2());
    return post;
  }

  Vector sample_prior(RngStream& rng) const override {
    return Vector::Constant(1, std::sqrt(data_.sigma_theta2) * rng.normal());
  }

  std::vector<std::pair<std::string, std::string>> describe() const override {
    return {{"model", "toy"},
            {"x1", format_double(data_.x1)},
            {"x2", format_double(data_.x2)},
            {"sigma_x2", format_double(data_.sigma_x2)},
            {"sigma_theta2", format_double(data_.sigma_theta2)},
            {"K", std::to_string(n_batches())}};
  }

  const ToyData& data() const { return data_; }

 protected:
  double block_value(const Vector& theta, std::size_t first, std::size_t last,
                     double) const override {
    return inner_.value(theta, select(first, last));
  }
  void block_gradient(const Vector& theta, std::size_t first, std::size_t last, double,
                      Vector& out) const override {
    inner_.gradient_into(theta, select(first, last), out);
  }
  void block_hessian_vec(const Vector& theta, const Vector& v, std::size_t first,
                         std::size_t last, double, Vector& out) const override {
    inner_.hessian_vec_into(theta, v, select(first, last), out);
  }

 private:
  static LinearGaussianData to_regression(const ToyData& d) {
    LinearGaussianData lg;
    lg.features = Matrix::Ones(2, 1);
    lg.targets = Vector(2);
    lg.targets << d.x1, d.x2;
    lg.noise_var = d.sigma_x2;
    lg.prior_var = d.sigma_theta2;
    return lg;
  }
  BatchSel select(std::size_t first, std::size_t last) const {
    if (first == 0 && last == 2) return BatchSel::full();
    return BatchSel::index(first);
  }

  ToyData data_;
  LinearGaussianPotential inner_;
};

// log(1 + exp(-m)), stable for both signs of m.
double softplus_neg(double m) {
  return m > 0 ? std::log1p(std::exp(-m)) : -m + std::log1p(std::exp(m));
}

// 1 / (1 + exp(m))
double sigmoid_neg(double m) {
  if (m >= 0) {
    const double e = std::exp(-m);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(m));
}

class LogisticPotential final : public Potential {
 public:
  LogisticPotential(Matrix features, Eigen::VectorXi labels, std::size_t n_batches,
                    double prior_var)
      : Potential(static_cast<std::size_t>(labels.size()), n_batches),
        x_(std::move(features)),
        prior_var_(prior_var) {
    if (labels.size() < 1) throw ContractError("logistic-2d: need at least one observation");
    if (x_.cols() != 2 || x_.rows() != labels.size()) {
      throw ContractError("logistic-2d: features must be n x 2 with n labels");
    }
    if (!(prior_var > 0.0)) throw ContractError("logistic-2d: prior variance must be > 0");
    sign_.resize(labels.size());
    for (Index i = 0; i < labels.size(); ++i) {
      if (labels[i] != 0 && labels[i] != 1) {
        throw ContractError("logistic-2d: labels must be 0 or 1");
      }
      sign_[i] = 2.0 * labels[i] - 1.0;
    }
  }

  ModelKind kind() const override { return ModelKind::kLogistic2d; }
  Index dim() const override { return 2; }
  std::size_t n_observations() const override { return static_cast<std::size_t>(sign_.size()); }

  Vector sample_prior(RngStream& rng) const override {
    return std::sqrt(prior_var_) * standard_normal_vector(rng, 2);
  }

  std::vector<std::pair<std::string, std::string>> describe() const override {
    return {{"model", "logistic2d"},
            {"n_obs", std::to_string(n_observations())},
            {"prior_var", format_double(prior_var_)},
            {"K", std::to_string(n_batches())}};
  }

 protected:
  double block_value(const Vector& theta, std::size_t first, std::size_t last,
                     double w) const override {
    double u = 0.0;
    for (std::size_t i = first; i < last; ++i) u += softplus_neg(margin(theta, i));
    return u + w * 0.5 * theta.squaredNorm() / prior_var_;
  }

  void block_gradient(const Vector& theta, std::size_t first, std::size_t last, double w,
                      Vector& out) const override {
    out = (w / prior_var_) * theta;
    for (std::size_t i = first; i < last; ++i) {
      const auto row = static_cast<Index>(i);
      const double s = sigmoid_neg(margin(theta, i));
      out -= (sign_[row] * s) * x_.row(row).transpose();
    }
  }

  void block_hessian_vec(const Vector& theta, const Vector& v, std::size_t first,
                         std::size_t last, double w, Vector& out) const override {
    out = (w / prior_var_) * v;
    for (std::size_t i = first; i < last; ++i) {
      const auto row = static_cast<Index>(i);
      const double s = sigmoid_neg(margin(theta, i));
      out += (s * (1.0 - s) * x_.row(row).dot(v)) * x_.row(row).transpose();
    }
  }

 private:
  double margin(const Vector& theta, std::size_t i) const {
    const auto row = static_cast<Index>(i);
    return sign_[row] * x_.row(row).dot(theta);
  }

  Matrix x_;
  Vector sign_;
  double prior_var_;
};

}  // namespace

PotentialPtr make_toy_1d(const ToyData& data, std::size_t n_batches) {
  return std::make_shared<ToyPotential>(data, n_batches);
}

PotentialPtr make_linear_gaussian(LinearGaussianData data, std::size_t n_batches) {
  return std::make_shared<LinearGaussianPotential>(std::move(data), n_batches);
}

PotentialPtr make_logistic_2d(const Matrix& features, const Eigen::VectorXi& labels,
                              std::size_t n_batches, double prior_var) {
  return std::make_shared<LogisticPotential>(features, labels, n_batches, prior_var);
}

Matrix trig_features(const Vector& x, const Vector& omegas) {
  const Index d = omegas.size();
  if (d < 1) throw ContractError("trig_features: need at least one frequency");
  Matrix phi(x.size(), d);
  const double scale = std::sqrt(2.0 / static_cast<double>(d));
  for (Index i = 0; i < x.size(); ++i) {
    for (Index k = 0; k < d; ++k) {
      phi(i, k) = scale * std::cos(omegas[k] * x[i] - std::numbers::pi / 4.0);
    }
  }
  return phi;
}

Vector default_frequencies(Index n_features) {
  return Vector::LinSpaced(n_features, 1.0, static_cast<double>(n_features));
}

LinearGaussianData make_synthetic_regression(const SyntheticRegression& cfg, RngStream& rng) {
  if (cfg.n_features < 1) throw ConfigError("synthetic regression: n_features must be >= 1");
  if (!(cfg.noise_var > 0.0) || !(cfg.prior_var > 0.0)) {
    throw ConfigError("synthetic regression: variances must be > 0");
  }
  std::vector<double> xs(cfg.n_obs);
  for (auto& v : xs) v = cfg.x_min + (cfg.x_max - cfg.x_min) * rng.uniform();
  std::sort(xs.begin(), xs.end());
  const Vector x = Eigen::Map<const Vector>(xs.data(), static_cast<Index>(xs.size()));
  LinearGaussianData data;
  data.features = trig_features(x, default_frequencies(cfg.n_features));
  const Vector w_true = std::sqrt(cfg.prior_var) * standard_normal_vector(rng, cfg.n_features);
  data.targets = data.features * w_true;
  for (Index i = 0; i < data.targets.size(); ++i) {
    data.targets[i] += std::sqrt(cfg.noise_var) * rng.normal();
  }
  data.noise_var = cfg.noise_var;
  data.prior_var = cfg.prior_var;
  return data;
}

LogisticData make_synthetic_logistic(std::size_t n_obs, const Vector& true_theta,
                                     RngStream& rng) {
  if (true_theta.size() != 2) throw ContractError("logistic-2d: true theta must be 2-D");
  LogisticData data;
  data.features.resize(static_cast<Index>(n_obs), 2);
  data.labels.resize(static_cast<Index>(n_obs));
  for (Index i = 0; i < data.features.rows(); ++i) {
    data.features(i, 0) = rng.normal();
    data.features(i, 1) = rng.normal();
    const double p = 1.0 / (1.0 + std::exp(-data.features.row(i).dot(true_theta)));
    data.labels[i] = rng.uniform() < p ? 1 : 0;
  }
  return data;
}

ToyData load_toy_csv(const std::string& path) {
  const CsvTable t = read_csv(path);
  const auto col = t.column("x");
  if (t.rows.size() != 2) throw IoError(path + ": toy model expects exactly two rows");
  ToyData d;
  d.x1 = t.rows[0][col];
  d.x2 = t.rows[1][col];
  return d;
}

LinearGaussianData load_regression_csv(const std::string& path, const Vector& omegas,
                                       double noise_var, double prior_var) {
  const CsvTable t = read_csv(path);
  const auto cx = t.column("x");
  const auto cy = t.column("y");
  Vector x(static_cast<Index>(t.rows.size()));
  Vector y(x.size());
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    x[static_cast<Index>(i)] = t.rows[i][cx];
    y[static_cast<Index>(i)] = t.rows[i][cy];
  }
  LinearGaussianData data;
  data.features = trig_features(x, omegas);
  data.targets = y;
  data.noise_var = noise_var;
  data.prior_var = prior_var;
  return data;
}

LogisticData load_logistic_csv(const std::string& path) {
  const CsvTable t = read_csv(path);
  const auto cl = t.column("label");
  std::vector<std::size_t> feature_cols;
  for (std::size_t c = 0; c < t.header.size(); ++c) {
    if (c != cl) feature_cols.push_back(c);
  }
  if (feature_cols.size() != 2) throw IoError(path + ": logistic model expects two feature columns");
  LogisticData data;
  data.features.resize(static_cast<Index>(t.rows.size()), 2);
  data.labels.resize(static_cast<Index>(t.rows.size()));
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto row = static_cast<Index>(i);
    data.features(row, 0) = t.rows[i][feature_cols[0]];
    data.features(row, 1) = t.rows[i][feature_cols[1]];
    const double label = t.rows[i][cl];
    if (label != 0.0 && label != 1.0) throw ContractError(path + ": labels must be 0 or 1");
    data.labels[row] = static_cast<int>(label);
  }
  return data;
}

}  // namespace shmc
