#include "shmc/operator_lab.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace shmc::oplab {

Matrix matrix_exp(const Matrix& a) {
  if (a.rows() != a.cols()) throw ContractError("matrix_exp: matrix must be square");
  if (a.rows() > 64) throw ContractError("matrix_exp: dimension above 64");
  const double norm = a.cwiseAbs().colwise().sum().maxCoeff();
  int squarings = 0;
  if (norm > 0.5) squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
  const Matrix scaled = a / std::ldexp(1.0, squarings);

  const Index n = a.rows();
  Matrix result = Matrix::Identity(n, n);
  Matrix term = Matrix::Identity(n, n);
  for (int k = 1; k <= 24; ++k) {
    term = term * scaled / static_cast<double>(k);
    result += term;
  }
  for (int i = 0; i < squarings; ++i) result = result * result;
  return result;
}

double spectral_norm(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  const Matrix ata = a.transpose() * a;
  Vector v = Vector::LinSpaced(a.cols(), 1.0, 2.0);
  v.normalize();
  double lambda = 0.0;
  for (int it = 0; it < 50; ++it) {
    Vector w = ata * v;
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;
    v = w / norm;
    lambda = norm;
  }
  return std::sqrt(lambda);
}

Matrix GeneratorSet::sum() const {
  validate();
  Matrix s = Matrix::Zero(n(), n());
  for (const auto& m : mats) s += m;
  return s;
}

void GeneratorSet::validate() const {
  if (mats.empty()) throw ContractError("generator set is empty");
  for (const auto& m : mats) {
    if (m.rows() != m.cols() || m.rows() != mats.front().rows()) {
      throw ContractError("generators must be square with a common dimension");
    }
    if (!m.allFinite()) throw ContractError("generators must be finite");
  }
}

GeneratorSet random_generator_set(std::size_t k, Index n, RngStream& rng) {
  if (k < 1 || n < 1) throw ContractError("random_generator_set: K and n must be >= 1");
  GeneratorSet g;
  for (std::size_t i = 0; i < k; ++i) {
    Matrix m(n, n);
    for (Index c = 0; c < n; ++c) {
      for (Index r = 0; r < n; ++r) m(r, c) = 2.0 * rng.uniform() - 1.0;
    }
    g.mats.push_back(std::move(m));
  }
  return g;
}

std::string_view to_string(SplitOrder order) {
  switch (order) {
    case SplitOrder::kForward: return "forward";
    case SplitOrder::kBackward: return "backward";
    case SplitOrder::kAveraged: return "averaged";
  }
  return "?";
}

namespace {

std::vector<Matrix> factors(const GeneratorSet& g, double eta) {
  g.validate();
  const double scale = eta * static_cast<double>(g.k());
  std::vector<Matrix> out;
  out.reserve(g.k());
  for (const auto& m : g.mats) out.push_back(matrix_exp(scale * m));
  return out;
}

Matrix ordered_product(const std::vector<Matrix>& f, const std::vector<std::size_t>& order) {
  Matrix p = f[order.front()];
  for (std::size_t i = 1; i < order.size(); ++i) p = p * f[order[i]];
  return p;
}

}  // namespace

Matrix splitting_product(const GeneratorSet& g, double eta, SplitOrder order) {
  if (!(eta > 0.0)) throw ContractError("splitting_product: eta must be > 0");
  const auto f = factors(g, eta);
  std::vector<std::size_t> idx(f.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  const Matrix forward = ordered_product(f, idx);
  std::reverse(idx.begin(), idx.end());
  const Matrix backward = ordered_product(f, idx);
  switch (order) {
    case SplitOrder::kForward: return forward;
    case SplitOrder::kBackward: return backward;
    case SplitOrder::kAveraged: return 0.5 * (forward + backward);
  }
  return forward;
}

Matrix reference_flow(const GeneratorSet& g, double eta) {
  return matrix_exp(eta * static_cast<double>(g.k()) * g.sum());
}

Matrix randomized_expectation(const GeneratorSet& g, double eta) {
  g.validate();
  if (g.k() > 6) throw ContractError("randomized_expectation: K > 6 (K! enumeration only)");
  const auto f = factors(g, eta);
  std::vector<std::size_t> idx(f.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Matrix acc = Matrix::Zero(g.n(), g.n());
  std::size_t count = 0;
  do {
    acc += ordered_product(f, idx);
    ++count;
  } while (std::next_permutation(idx.begin(), idx.end()));
  return acc / static_cast<double>(count);
}

Matrix back_and_forth_expectation(const GeneratorSet& g, double eta) {
  g.validate();
  if (g.k() > 6) throw ContractError("back_and_forth_expectation: K > 6");
  const auto f = factors(g, eta);
  if (g.k() == 1) return f.front();
  std::vector<std::size_t> idx(f.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Matrix acc = Matrix::Zero(g.n(), g.n());
  std::size_t pairs = 0;
  do {
    if (idx.front() > idx.back()) continue;  // one representative per reverse pair
    std::vector<std::size_t> rev(idx.rbegin(), idx.rend());
    acc += 0.5 * (ordered_product(f, idx) + ordered_product(f, rev));
    ++pairs;
  } while (std::next_permutation(idx.begin(), idx.end()));
  return acc / static_cast<double>(pairs);
}

Matrix commutator(const Matrix& a, const Matrix& b) { return a * b - b * a; }

Matrix bch_truncated(const Matrix& a, const Matrix& b, int order) {
  if (order < 2 || order > 5) throw ContractError("bch_truncated: order must be in 2..5");
  if (a.rows() != a.cols() || a.rows() != b.rows() || b.rows() != b.cols()) {
    throw ContractError("bch_truncated: square matrices of equal size required");
  }
  const Matrix ab = commutator(a, b);
  const Matrix ba = -ab;
  Matrix z = a + b + 0.5 * ab;
  if (order >= 3) z += (commutator(a, ab) + commutator(b, ba)) / 12.0;
  if (order >= 4) z -= commutator(b, commutator(a, ab)) / 24.0;
  if (order >= 5) {
    const Matrix a_ab = commutator(a, ab);
    const Matrix aa_ab = commutator(a, a_ab);
    const Matrix b_ba = commutator(b, ba);
    const Matrix bb_ba = commutator(b, b_ba);
    z -= (commutator(b, bb_ba) + commutator(a, aa_ab)) / 720.0;
    z += (commutator(a, bb_ba) + commutator(b, aa_ab)) / 360.0;
    z += (commutator(b, commutator(a, commutator(b, ab))) +
          commutator(a, commutator(b, commutator(a, ba)))) /
         120.0;
  }
  return z;
}

SlopeFit error_order_slope(const std::vector<double>& etas, const std::vector<double>& errors) {
  if (etas.size() != errors.size()) throw ContractError("error_order_slope: length mismatch");
  if (etas.size() < 3) throw ContractError("error_order_slope: need at least 3 points");
  std::vector<double> x;
  std::vector<double> y;
  for (std::size_t i = 0; i < etas.size(); ++i) {
    if (!(etas[i] > 0.0) || !(errors[i] > 0.0)) {
      throw ContractError("error_order_slope: values must be positive");
    }
    x.push_back(std::log(etas[i]));
    y.push_back(std::log(errors[i]));
  }
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 1e-300)) throw ContractError("error_order_slope: all step sizes equal");
  SlopeFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return fit;
}

std::vector<double> geometric_grid(double start, std::size_t count, double ratio) {
  std::vector<double> out;
  double v = start;
  for (std::size_t i = 0; i < count; ++i) {
    out.push_back(v);
    v *= ratio;
  }
  return out;
}

}  // namespace shmc::oplab
