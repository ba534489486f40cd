#pragma once

// Dense primitives shared by every module: the complex matrix type, the
// (left, right) generator pair, approximation results and the norms used to
// score them.

#include <complex>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace smm {

using Scalar = std::complex<double>;
using DenseMatrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Error raised on contract violations and numerical failures.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Throws unless every entry of `m` is finite.
void require_finite(const DenseMatrix& m, const char* what = "matrix");

/// Length-r generator pair: the represented block is left * right.
struct FactorPair {
  DenseMatrix left;   // m x r
  DenseMatrix right;  // r x n

  FactorPair() = default;
  FactorPair(DenseMatrix l, DenseMatrix r);

  /// Rank-0 pair for an m x n block.
  static FactorPair zero(Index rows, Index cols);

  Index rank() const { return left.cols(); }
  Index rows() const { return left.rows(); }
  Index cols() const { return right.cols(); }

  DenseMatrix product() const;
};

struct ApproxResult {
  FactorPair factors;
  // Unset when the producer did not pay for dense validation.
  std::optional<double> rel_spectral_error;
  std::optional<double> rel_chebyshev_error;
  std::uint64_t entries_accessed = 0;
};

enum class Norm { spectral, chebyshev };

/// Largest singular value, by full SVD.
double spectral_norm(const DenseMatrix& m);

/// Largest singular value as the square root of the top eigenvalue of the
/// smaller Gram matrix. Same value as spectral_norm to ~1e-15 relative, at
/// roughly half the cost; used on hot validation paths.
double spectral_norm_gram(const DenseMatrix& m);

/// Largest entry modulus.
double chebyshev_norm(const DenseMatrix& m);

double norm(const DenseMatrix& m, Norm which);

/// ||m - approx.left * approx.right|| / ||m||.
double relative_error(const DenseMatrix& m, const FactorPair& approx, Norm which);

/// Best rank-r approximation in the spectral norm (Eckart-Young).
FactorPair truncated_svd(const DenseMatrix& m, Index r);

/// Singular values in decreasing order.
RealVector singular_values(const DenseMatrix& m);

/// Smallest k with sigma_{k+1} <= tol * sigma_1; zero matrices have rank 0.
Index numerical_rank(const DenseMatrix& m, double tol);

struct PowerIterationResult {
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Spectral norm estimate by power iteration on m^* m. Cross-check only.
PowerIterationResult spectral_norm_power(const DenseMatrix& m, double tol = 1e-8,
                                         int max_iter = 1000, std::uint64_t seed = 0);

/// Gaussian matrix with i.i.d. standard normal real and imaginary parts
/// scaled so each entry has unit variance.
DenseMatrix complex_gaussian(Index rows, Index cols, std::uint64_t seed);

/// Real Gaussian matrix embedded as complex.
DenseMatrix real_gaussian(Index rows, Index cols, std::uint64_t seed);

/// Haar-distributed unitary matrix from the QR of a complex Gaussian.
DenseMatrix random_unitary(Index n, std::uint64_t seed);

}  // namespace smm
