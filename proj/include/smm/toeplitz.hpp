#pragma once

// Benchmark Toeplitz families and their Cauchy-like transforms.
//
// The transform is C = F * T * D * F^H with F the unitary DFT of order n
// (F(j,k) = exp(-2 pi i jk / n) / sqrt(n)) and D = diag(delta^j),
// delta = exp(i pi / n). C then satisfies
//
//   D1 * C - C * D2  has rank <= 2,  D1 = diag(w^k), D2 = diag(delta * w^k),
//
// with w = exp(2 pi i / n); the two node sets interleave on the unit circle.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "smm/linalg.hpp"

namespace smm {

enum class Family { prolate, random, kms, gaussian_kernel, tridiag_perturbed };

inline constexpr Family kAllFamilies[] = {Family::prolate, Family::random, Family::kms,
                                          Family::gaussian_kernel, Family::tridiag_perturbed};

std::string_view family_name(Family f);
Family parse_family(std::string_view name);

/// Optional overrides; unset fields take the family default.
struct FamilyParams {
  std::optional<double> prolate_w;     // default 0.25, must lie in (0, 0.5)
  std::optional<double> kms_rho;       // default 0.5, |rho| < 1
  std::optional<double> gauss_sigma;   // default n / 8, > 0
  std::optional<double> perturbation;  // tridiag_perturbed noise level, default 1e-8
};

struct ToeplitzSpec {
  Index n = 0;
  Vector first_column;  // t_0, t_1, ..., t_{n-1}  (entry (k, 0))
  Vector first_row;     // t_0, t_{-1}, ..., t_{-(n-1)}  (entry (0, k))
  Family family = Family::random;
  std::uint64_t seed = 0;

  /// t_{i-j}.
  Scalar entry(Index i, Index j) const {
    return i >= j ? first_column(i - j) : first_row(j - i);
  }
};

ToeplitzSpec toeplitz_from_family(Family family, Index n, std::uint64_t seed,
                                  const FamilyParams& params = {});

DenseMatrix toeplitz_dense(const ToeplitzSpec& t);

/// C = F T D F^H. Requires n a power of two.
DenseMatrix toeplitz_to_cauchy_like(const ToeplitzSpec& t);

/// Node vectors of the displacement operators: D1 = diag(w^k), D2 = diag(delta w^k).
Vector cauchy_row_nodes(Index n);
Vector cauchy_col_nodes(Index n);

/// D1 * C - C * D2.
DenseMatrix displacement(const DenseMatrix& c);

/// Binary dump: two little-endian u64 (rows, cols), then row-major
/// (re, im) little-endian float64 pairs.
void write_matrix_binary(const DenseMatrix& m, const std::filesystem::path& path);
DenseMatrix read_matrix_binary(const std::filesystem::path& path);

}  // namespace smm
