#include "smm/linalg.hpp"

#include <cmath>
#include <random>

namespace smm {

void require_finite(const DenseMatrix& m, const char* what) {
  if (!m.allFinite()) throw Error(std::string(what) + ": non-finite entry");
}

FactorPair::FactorPair(DenseMatrix l, DenseMatrix r) : left(std::move(l)), right(std::move(r)) {
  if (left.cols() != right.rows())
    throw Error("factor pair: inner dimensions disagree (" + std::to_string(left.cols()) + " vs " +
                std::to_string(right.rows()) + ")");
  if (left.cols() > std::min(left.rows(), right.cols()))
    throw Error("factor pair: rank exceeds min(m, n)");
}

FactorPair FactorPair::zero(Index rows, Index cols) {
  return FactorPair(DenseMatrix(rows, 0), DenseMatrix(0, cols));
}

DenseMatrix FactorPair::product() const {
  if (rank() == 0) return DenseMatrix::Zero(rows(), cols());
  return left * right;
}

RealVector singular_values(const DenseMatrix& m) {
  if (m.size() == 0) throw Error("empty input");
  Eigen::BDCSVD<DenseMatrix> svd(m);
  return svd.singularValues();
}

double spectral_norm(const DenseMatrix& m) {
  if (m.size() == 0) throw Error("empty input");
  return singular_values(m)(0);
}

double spectral_norm_gram(const DenseMatrix& m) {
  if (m.size() == 0) throw Error("empty input");
  const DenseMatrix gram = m.rows() >= m.cols() ? DenseMatrix(m.adjoint() * m) : DenseMatrix(m * m.adjoint());
  Eigen::SelfAdjointEigenSolver<DenseMatrix> eig(gram, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, eig.eigenvalues()(gram.rows() - 1)));
}

double chebyshev_norm(const DenseMatrix& m) {
  if (m.size() == 0) throw Error("empty input");
  return m.cwiseAbs().maxCoeff();
}

double norm(const DenseMatrix& m, Norm which) {
  return which == Norm::spectral ? spectral_norm(m) : chebyshev_norm(m);
}

double relative_error(const DenseMatrix& m, const FactorPair& approx, Norm which) {
  if (approx.rows() != m.rows() || approx.cols() != m.cols())
    throw Error("relative error: dimension mismatch");
  const double denom = norm(m, which);
  if (!(denom > 0.0)) throw Error("relative error undefined");
  return norm(m - approx.product(), which) / denom;
}

FactorPair truncated_svd(const DenseMatrix& m, Index r) {
  if (r < 0 || r > std::min(m.rows(), m.cols())) throw Error("truncated svd: rank out of range");
  if (r == 0) return FactorPair::zero(m.rows(), m.cols());
  Eigen::BDCSVD<DenseMatrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  DenseMatrix left = svd.matrixU().leftCols(r) * svd.singularValues().head(r).asDiagonal();
  DenseMatrix right = svd.matrixV().leftCols(r).adjoint();
  return FactorPair(std::move(left), std::move(right));
}

Index numerical_rank(const DenseMatrix& m, double tol) {
  if (m.size() == 0) return 0;
  const RealVector s = singular_values(m);
  if (s(0) == 0.0) return 0;
  Index k = 0;
  while (k < s.size() && s(k) > tol * s(0)) ++k;
  return k;
}

PowerIterationResult spectral_norm_power(const DenseMatrix& m, double tol, int max_iter,
                                         std::uint64_t seed) {
  if (m.size() == 0) throw Error("empty input");
  PowerIterationResult out;
  Vector x = complex_gaussian(m.cols(), 1, seed).col(0);
  x.normalize();
  double prev = 0.0;
  for (int it = 1; it <= max_iter; ++it) {
    const Vector y = m * x;
    const double sigma = y.norm();
    out.iterations = it;
    if (sigma == 0.0) {
      out.value = 0.0;
      out.converged = true;
      return out;
    }
    Vector z = m.adjoint() * y;
    x = z / z.norm();
    out.value = sigma;
    if (it > 1 && std::abs(sigma - prev) <= tol * sigma) {
      out.converged = true;
      break;
    }
    prev = sigma;
  }
  return out;
}

DenseMatrix complex_gaussian(Index rows, Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, std::sqrt(0.5));
  DenseMatrix g(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) {
      const double re = dist(rng);
      const double im = dist(rng);
      g(i, j) = Scalar(re, im);
    }
  return g;
}

DenseMatrix real_gaussian(Index rows, Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, 1.0);
  DenseMatrix g(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) g(i, j) = dist(rng);
  return g;
}

DenseMatrix random_unitary(Index n, std::uint64_t seed) {
  const DenseMatrix g = complex_gaussian(n, n, seed);
  Eigen::HouseholderQR<DenseMatrix> qr(g);
  DenseMatrix q = qr.householderQ() * DenseMatrix::Identity(n, n);
  // Fix the phase of R's diagonal so the distribution is Haar.
  const DenseMatrix& r = qr.matrixQR();
  for (Index j = 0; j < n; ++j) {
    const double a = std::abs(r(j, j));
    if (a > 0) q.col(j) *= r(j, j) / a;
  }
  return q;
}

}  // namespace smm
