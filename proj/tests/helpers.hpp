#pragma once

#include <cmath>

#include "smm/linalg.hpp"

namespace testing {

using smm::DenseMatrix;
using smm::Index;

// Random complex matrix of exact rank r.
inline DenseMatrix rank_r(Index m, Index n, Index r, std::uint64_t seed) {
  return smm::complex_gaussian(m, r, seed) * smm::complex_gaussian(r, n, seed + 7919);
}

// U diag(s) V^H with Haar U, V.
inline DenseMatrix with_spectrum(const Eigen::VectorXd& s, std::uint64_t seed) {
  const Index n = s.size();
  const DenseMatrix u = smm::random_unitary(n, seed);
  const DenseMatrix v = smm::random_unitary(n, seed + 104729);
  return u * s.cast<smm::Scalar>().asDiagonal() * v.adjoint();
}

inline double max_abs_scan(const DenseMatrix& m) {
  double best = 0.0;
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) best = std::max(best, std::abs(m(i, j)));
  return best;
}

inline DenseMatrix from_real(std::initializer_list<std::initializer_list<double>> rows) {
  DenseMatrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.begin()->size()));
  Index i = 0;
  for (const auto& r : rows) {
    Index j = 0;
    for (double v : r) m(i, j++) = v;
    ++i;
  }
  return m;
}

}  // namespace testing
