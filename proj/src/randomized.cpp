#include "smm/randomized.hpp"

#include <bit>
#include <cmath>
#include <numeric>
#include <random>

namespace smm {

void SketchConfig::validate() const {
  if (target_rank < 1) throw Error("sketch: target rank must be >= 1");
  if (oversampling < 0) throw Error("sketch: oversampling must be >= 0");
}

std::uint64_t multiply_cost(std::uint64_t q, std::uint64_t h, std::uint64_t r) {
  return (2 * h - 1) * q * r;
}

LraBackend hybrid_backend_select(Index rows, Index cols, Index threshold) {
  if (threshold < 1) throw Error("hybrid threshold must be >= 1");
  return std::max(rows, cols) <= threshold ? LraBackend::randomized : LraBackend::cross_approx;
}

std::uint64_t fwht(std::span<Scalar> v) {
  const std::size_t n = v.size();
  if (n == 0 || !std::has_single_bit(n)) throw Error("fwht: size must be a power of two");
  std::uint64_t ops = 0;
  for (std::size_t len = 1; len < n; len <<= 1) {
    for (std::size_t i = 0; i < n; i += 2 * len) {
      for (std::size_t j = i; j < i + len; ++j) {
        const Scalar a = v[j];
        const Scalar b = v[j + len];
        v[j] = a + b;
        v[j + len] = a - b;
        ops += 2;
      }
    }
  }
  return ops;
}

HadamardSketch::HadamardSketch(Index h, Index width, std::uint64_t seed)
    : h_(h), n_(static_cast<Index>(std::bit_ceil(static_cast<std::uint64_t>(std::max<Index>(h, 1))))) {
  if (h < 1 || width < 1 || width > n_) throw Error("hadamard sketch: bad dimensions");
  std::mt19937_64 rng(seed);
  signs_.resize(static_cast<std::size_t>(n_));
  for (auto& s : signs_) s = (rng() & 1u) ? 1.0 : -1.0;

  auto shuffled = [&rng](Index n, Index keep) {
    std::vector<Index> p(static_cast<std::size_t>(n));
    std::iota(p.begin(), p.end(), Index{0});
    for (Index k = 0; k < keep; ++k) {
      const auto pick = k + static_cast<Index>(rng() % static_cast<std::uint64_t>(n - k));
      std::swap(p[static_cast<std::size_t>(k)], p[static_cast<std::size_t>(pick)]);
    }
    p.resize(static_cast<std::size_t>(keep));
    return p;
  };
  perm_ = shuffled(n_, n_);
  keep_ = shuffled(n_, width);
}

std::uint64_t HadamardSketch::apply(std::span<const Scalar> row, std::span<Scalar> out) const {
  if (static_cast<Index>(row.size()) != h_ || static_cast<Index>(out.size()) != width())
    throw Error("hadamard sketch: size mismatch");
  std::uint64_t ops = 0;
  std::vector<Scalar> flipped(static_cast<std::size_t>(n_), Scalar(0));
  for (Index k = 0; k < h_; ++k) {
    flipped[static_cast<std::size_t>(k)] = row[static_cast<std::size_t>(k)] * signs_[static_cast<std::size_t>(k)];
    ++ops;
  }
  std::vector<Scalar> permuted(static_cast<std::size_t>(n_));
  for (Index k = 0; k < n_; ++k)
    permuted[static_cast<std::size_t>(k)] = flipped[static_cast<std::size_t>(perm_[static_cast<std::size_t>(k)])];
  ops += fwht(permuted);
  // Orthonormal Hadamard (1/sqrt(N)) times isometry scaling sqrt(N / width).
  const double scale = 1.0 / std::sqrt(static_cast<double>(width()));
  for (Index k = 0; k < width(); ++k) {
    out[static_cast<std::size_t>(k)] = permuted[static_cast<std::size_t>(keep_[static_cast<std::size_t>(k)])] * scale;
    ++ops;
  }
  return ops;
}

DenseMatrix HadamardSketch::apply(const DenseMatrix& block, std::uint64_t* ops) const {
  if (block.cols() != h_) throw Error("hadamard sketch: block width mismatch");
  DenseMatrix y(block.rows(), width());
  std::vector<Scalar> row(static_cast<std::size_t>(h_)), out(static_cast<std::size_t>(width()));
  std::uint64_t total = 0;
  for (Index i = 0; i < block.rows(); ++i) {
    for (Index k = 0; k < h_; ++k) row[static_cast<std::size_t>(k)] = block(i, k);
    total += apply(row, out);
    for (Index k = 0; k < width(); ++k) y(i, k) = out[static_cast<std::size_t>(k)];
  }
  if (ops) *ops = total;
  return y;
}

DenseMatrix HadamardSketch::dense() const {
  return apply(DenseMatrix(DenseMatrix::Identity(h_, h_)));
}

RandomizedLraResult randomized_range_lra(const DenseMatrix& block, const SketchConfig& cfg) {
  cfg.validate();
  const Index q = block.rows();
  const Index h = block.cols();
  const Index r = cfg.target_rank;
  const Index l = r + cfg.oversampling;
  if (l > std::min(q, h))
    throw Error("sketch: rank + oversampling (" + std::to_string(l) + ") exceeds block dimensions");

  RandomizedLraResult out;
  DenseMatrix y;
  if (cfg.multiplier == Multiplier::gaussian) {
    const DenseMatrix omega = real_gaussian(h, l, cfg.seed);
    y = block * omega;
    out.sketch_flops = multiply_cost(static_cast<std::uint64_t>(q), static_cast<std::uint64_t>(h),
                                     static_cast<std::uint64_t>(l));
  } else {
    HadamardSketch sketch(h, l, cfg.seed);
    y = sketch.apply(block, &out.sketch_flops);
  }

  Eigen::HouseholderQR<DenseMatrix> qr(y);
  out.basis = qr.householderQ() * DenseMatrix::Identity(q, l);
  const DenseMatrix small = out.basis.adjoint() * block;  // l x h
  Eigen::BDCSVD<DenseMatrix> svd(small, Eigen::ComputeThinU | Eigen::ComputeThinV);
  DenseMatrix left = out.basis * svd.matrixU().leftCols(r) * svd.singularValues().head(r).asDiagonal();
  DenseMatrix right = svd.matrixV().leftCols(r).adjoint();
  out.approx.factors = FactorPair(std::move(left), std::move(right));
  out.approx.entries_accessed = static_cast<std::uint64_t>(block.size());
  return out;
}

}  // namespace smm
