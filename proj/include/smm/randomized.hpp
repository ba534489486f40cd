#pragma once

// Randomized range-finder LRA (Gaussian or abridged/permuted Hadamard
// multipliers) and the cost model used to compare it against cross
// approximation. These backends materialize their block: they are fast, not
// superfast.

#include <cstdint>
#include <span>
#include <vector>

#include "smm/linalg.hpp"

namespace smm {

enum class Multiplier { gaussian, hadamard_abridged_permuted };

struct SketchConfig {
  Index target_rank = 1;
  Index oversampling = 10;
  Multiplier multiplier = Multiplier::gaussian;
  std::uint64_t seed = 0;

  void validate() const;
};

struct RandomizedLraResult {
  ApproxResult approx;
  DenseMatrix basis;  // orthonormal range basis Q, q x (r + p)
  std::uint64_t sketch_flops = 0;
};

/// Y = block * Omega, Q = qr(Y), factors from the rank-r truncation of Q^H block.
RandomizedLraResult randomized_range_lra(const DenseMatrix& block, const SketchConfig& cfg);

/// (2h - 1) q r: flops to multiply a q x h matrix by an h x r matrix.
std::uint64_t multiply_cost(std::uint64_t q, std::uint64_t h, std::uint64_t r);

enum class LraBackend { cross_approx, randomized };

/// Randomized for blocks with max(rows, cols) <= threshold, cross approximation otherwise.
LraBackend hybrid_backend_select(Index rows, Index cols, Index threshold = 128);

/// In-place unnormalized Walsh-Hadamard transform; size must be a power of
/// two. Returns the number of complex additions/subtractions performed.
std::uint64_t fwht(std::span<Scalar> v);

/// The abridged, permuted Hadamard multiplier as an operator on rows.
///
/// For a row x of length h (zero-padded to N = 2^k >= h) the map is
/// sign flip -> permutation -> Hadamard (orthonormal) -> keep `width`
/// columns, scaled by sqrt(N / width) so that E[Omega Omega^H] = I.
class HadamardSketch {
 public:
  HadamardSketch(Index h, Index width, std::uint64_t seed);

  Index input_size() const { return h_; }
  Index padded_size() const { return n_; }
  Index width() const { return static_cast<Index>(keep_.size()); }

  /// Applies the multiplier to one row. Returns scalar operations spent.
  std::uint64_t apply(std::span<const Scalar> row, std::span<Scalar> out) const;

  /// block * Omega.
  DenseMatrix apply(const DenseMatrix& block, std::uint64_t* ops = nullptr) const;

  /// Omega itself, h x width.
  DenseMatrix dense() const;

 private:
  Index h_;
  Index n_;
  std::vector<double> signs_;
  std::vector<Index> perm_;
  std::vector<Index> keep_;
};

}  // namespace smm
