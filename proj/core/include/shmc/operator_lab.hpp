#pragma once

// Splitting error orders on finite-dimensional generators: small dense
// matrices stand in for the operators and exponentials are computed exactly.

#include <cstddef>
#include <string_view>
#include <vector>

#include "shmc/core.hpp"

namespace shmc::oplab {

/// Scaling and squaring with a 24-term Taylor polynomial. n <= 64.
Matrix matrix_exp(const Matrix& a);

/// Largest singular value by 50 power iterations on A^T A.
double spectral_norm(const Matrix& a);

struct GeneratorSet {
  std::vector<Matrix> mats;

  std::size_t k() const { return mats.size(); }
  Index n() const { return mats.empty() ? 0 : mats.front().rows(); }
  Matrix sum() const;
  /// Throws ContractError on an empty set, non-square or mismatched matrices.
  void validate() const;
};

/// K matrices of size n with iid U(-1, 1) entries.
GeneratorSet random_generator_set(std::size_t k, Index n, RngStream& rng);

enum class SplitOrder { kForward, kBackward, kAveraged };

std::string_view to_string(SplitOrder order);

/// FORWARD = e^{eta K L_1} e^{eta K L_2} ... e^{eta K L_K}, BACKWARD the
/// reverse product, AVERAGED their mean.
Matrix splitting_product(const GeneratorSet& g, double eta, SplitOrder order);

/// exp(eta K sum_i L_i), the flow every product approximates.
Matrix reference_flow(const GeneratorSet& g, double eta);

/// Exact average of the ordered product over all K! permutations. K <= 6.
Matrix randomized_expectation(const GeneratorSet& g, double eta);

/// The same average computed over reverse pairs of AVERAGED products.
Matrix back_and_forth_expectation(const GeneratorSet& g, double eta);

Matrix commutator(const Matrix& a, const Matrix& b);

/// Baker-Campbell-Hausdorff series of log(e^A e^B) through commutators of
/// the given degree (2..5).
Matrix bch_truncated(const Matrix& a, const Matrix& b, int order);

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

/// Least squares of log(error) on log(eta). Needs >= 3 positive points and
/// at least two distinct etas.
SlopeFit error_order_slope(const std::vector<double>& etas, const std::vector<double>& errors);

/// eta, eta/2, eta/4, ...
std::vector<double> geometric_grid(double start, std::size_t count, double ratio = 0.5);

}  // namespace shmc::oplab
