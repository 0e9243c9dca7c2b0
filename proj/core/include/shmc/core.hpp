#pragma once

// Phase-space state, diagonal mass matrix, energies and the seeded RNG
// contract shared by every other module.

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>

namespace shmc {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Violated precondition on an argument (dimension mismatch, out-of-range id).
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Invalid or incompatible configuration, detected before any compute.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Requested operation has no meaning for the given model (e.g. a closed-form
/// posterior for logistic regression).
class UnsupportedModelError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Phase-space point z = (r, theta). Both blocks share the dimension d >= 1.
struct State {
  Vector r;
  Vector theta;

  State() = default;
  State(Vector momentum, Vector position);

  Index dim() const { return theta.size(); }
  bool finite() const;

  /// [r; theta], the ordering used for Jacobians and covariances.
  Vector stacked() const;
  static State from_stacked(const Vector& z);

  friend bool operator==(const State& a, const State& b) {
    return a.r == b.r && a.theta == b.theta;
  }
};

/// Diagonal, strictly positive mass matrix. All functions of M used by the
/// integrators are elementwise closed forms.
class MassMatrix {
 public:
  explicit MassMatrix(Vector diagonal);
  static MassMatrix identity(Index d);

  Index dim() const { return diag_.size(); }
  const Vector& diag() const { return diag_; }
  const Vector& inverse() const { return inv_; }
  Vector inverse_sqrt() const { return inv_.cwiseSqrt(); }
  bool is_identity() const;

  /// exp(-friction * t * M^-1), elementwise.
  Vector decay(double friction, double t) const;

 private:
  Vector diag_;
  Vector inv_;
};

/// Seeded stream of pseudo-random draws. Identical (seed, stream id) pairs
/// replay identical sequences; distinct stream ids are seeded through
/// std::seed_seq and are treated as independent.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed, std::uint64_t stream_id = 0);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  double normal();
  double uniform();
  std::size_t uniform_index(std::size_t n);
  void fill_normal(Eigen::Ref<Vector> out);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

/// T(r) = r^T M^-1 r / 2.
double kinetic_energy(const Vector& r, const MassMatrix& mass);

/// U(theta) + T(r).
double hamiltonian(const State& z,
                   const std::function<double(const Vector&)>& potential,
                   const MassMatrix& mass);

/// d iid N(0, 1) draws.
Vector standard_normal_vector(RngStream& rng, Index d);

/// (1 - exp(-x)) / x with the x -> 0 limit 1; accurate for tiny x.
double one_minus_exp_over_x(double x);

}  // namespace shmc
