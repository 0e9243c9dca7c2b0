#include "shmc/core.hpp"

#include <cmath>

namespace shmc {

State::State(Vector momentum, Vector position)
    : r(std::move(momentum)), theta(std::move(position)) {
  if (r.size() != theta.size()) {
    throw ContractError("State: momentum and position dimensions differ");
  }
  if (theta.size() < 1) {
    throw ContractError("State: dimension must be at least 1");
  }
}

bool State::finite() const { return r.allFinite() && theta.allFinite(); }

Vector State::stacked() const {
  Vector z(2 * dim());
  z << r, theta;
  return z;
}

State State::from_stacked(const Vector& z) {
  if (z.size() < 2 || z.size() % 2 != 0) {
    throw ContractError("State::from_stacked: expected an even, non-empty vector");
  }
  const Index d = z.size() / 2;
  return State(z.head(d), z.tail(d));
}

MassMatrix::MassMatrix(Vector diagonal) : diag_(std::move(diagonal)) {
  if (diag_.size() < 1) throw ContractError("MassMatrix: empty diagonal");
  for (Index i = 0; i < diag_.size(); ++i) {
    if (!(diag_[i] > 0.0) || !std::isfinite(diag_[i])) {
      throw ContractError("MassMatrix: diagonal entries must be finite and > 0");
    }
  }
  inv_ = diag_.cwiseInverse();
}

MassMatrix MassMatrix::identity(Index d) { return MassMatrix(Vector::Ones(d)); }

bool MassMatrix::is_identity() const { return (diag_.array() == 1.0).all(); }

Vector MassMatrix::decay(double friction, double t) const {
  return (-(friction * t) * inv_.array()).exp().matrix();
}

namespace {

std::seed_seq make_seed_seq(std::uint64_t seed, std::uint64_t stream) {
  return std::seed_seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                       static_cast<std::uint32_t>(stream),
                       static_cast<std::uint32_t>(stream >> 32), 0x5348u};
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id) {
  auto seq = make_seed_seq(seed, stream_id);
  engine_.seed(seq);
}

double RngStream::normal() { return normal_(engine_); }

double RngStream::uniform() { return uniform_(engine_); }

std::size_t RngStream::uniform_index(std::size_t n) {
  if (n == 0) throw ContractError("uniform_index: empty range");
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
}

void RngStream::fill_normal(Eigen::Ref<Vector> out) {
  for (Index i = 0; i < out.size(); ++i) out[i] = normal_(engine_);
}

double kinetic_energy(const Vector& r, const MassMatrix& mass) {
  if (r.size() != mass.dim()) {
    throw ContractError("kinetic_energy: momentum and mass dimensions differ");
  }
  return 0.5 * r.cwiseAbs2().dot(mass.inverse());
}

double hamiltonian(const State& z,
                   const std::function<double(const Vector&)>& potential,
                   const MassMatrix& mass) {
  return potential(z.theta) + kinetic_energy(z.r, mass);
}

Vector standard_normal_vector(RngStream& rng, Index d) {
  if (d < 1) throw ContractError("standard_normal_vector: d must be >= 1");
  Vector w(d);
  rng.fill_normal(w);
  return w;
}

double one_minus_exp_over_x(double x) {
  if (std::abs(x) < 1e-8) return 1.0 - 0.5 * x;
  return -std::expm1(-x) / x;
}

}  // namespace shmc
