#include "smm/toeplitz.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

#include <unsupported/Eigen/FFT>

#include "smm/byteio.hpp"

namespace smm {

std::string_view family_name(Family f) {
  switch (f) {
    case Family::prolate: return "prolate";
    case Family::random: return "random";
    case Family::kms: return "kms";
    case Family::gaussian_kernel: return "gaussian_kernel";
    case Family::tridiag_perturbed: return "tridiag_perturbed";
  }
  return "?";
}

Family parse_family(std::string_view name) {
  for (Family f : kAllFamilies)
    if (family_name(f) == name) return f;
  throw Error("unknown family '" + std::string(name) + "'");
}

ToeplitzSpec toeplitz_from_family(Family family, Index n, std::uint64_t seed,
                                  const FamilyParams& params) {
  if (n < 2) throw Error("toeplitz: n must be at least 2");
  ToeplitzSpec t;
  t.n = n;
  t.family = family;
  t.seed = seed;
  t.first_column = Vector::Zero(n);
  t.first_row = Vector::Zero(n);
  auto symmetric = [&](auto&& tk) {
    for (Index k = 0; k < n; ++k) t.first_column(k) = t.first_row(k) = tk(k);
  };

  switch (family) {
    case Family::prolate: {
      const double w = params.prolate_w.value_or(0.25);
      if (!(w > 0.0 && w < 0.5)) throw Error("prolate: w must lie in (0, 0.5)");
      symmetric([w](Index k) {
        if (k == 0) return 2.0 * w;
        const double kk = static_cast<double>(k);
        return std::sin(2.0 * std::numbers::pi * w * kk) / (std::numbers::pi * kk);
      });
      break;
    }
    case Family::random: {
      std::mt19937_64 rng(seed);
      std::uniform_real_distribution<double> u(-1.0, 1.0);
      for (Index k = 0; k < n; ++k) t.first_column(k) = u(rng);
      t.first_row(0) = t.first_column(0);
      for (Index k = 1; k < n; ++k) t.first_row(k) = u(rng);
      break;
    }
    case Family::kms: {
      const double rho = params.kms_rho.value_or(0.5);
      if (!(std::abs(rho) < 1.0)) throw Error("kms: |rho| must be < 1");
      symmetric([rho](Index k) { return std::pow(rho, static_cast<double>(k)); });
      break;
    }
    case Family::gaussian_kernel: {
      const double sigma = params.gauss_sigma.value_or(static_cast<double>(n) / 8.0);
      if (!(sigma > 0.0)) throw Error("gaussian_kernel: sigma must be positive");
      symmetric([sigma](Index k) {
        const double kk = static_cast<double>(k);
        return std::exp(-kk * kk / (sigma * sigma));
      });
      break;
    }
    case Family::tridiag_perturbed: {
      const double eps = params.perturbation.value_or(1e-8);
      if (!(eps >= 0.0)) throw Error("tridiag_perturbed: perturbation must be nonnegative");
      std::mt19937_64 rng(seed);
      std::uniform_real_distribution<double> u(-1.0, 1.0);
      for (Index k = 0; k < n; ++k) t.first_column(k) = eps * u(rng);
      t.first_row(0) = t.first_column(0);
      for (Index k = 1; k < n; ++k) t.first_row(k) = eps * u(rng);
      t.first_column(0) += 2.0;
      t.first_row(0) = t.first_column(0);
      t.first_column(1) += -1.0;
      t.first_row(1) += -1.0;
      break;
    }
  }
  return t;
}

DenseMatrix toeplitz_dense(const ToeplitzSpec& t) {
  DenseMatrix m(t.n, t.n);
  for (Index j = 0; j < t.n; ++j)
    for (Index i = 0; i < t.n; ++i) m(i, j) = t.entry(i, j);
  return m;
}

DenseMatrix toeplitz_to_cauchy_like(const ToeplitzSpec& t) {
  const Index n = t.n;
  if (n < 2 || !std::has_single_bit(static_cast<std::uint64_t>(n)))
    throw Error("FFT size: n must be a power of two, got " + std::to_string(n));

  Eigen::FFT<double> fft;
  const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(n));
  const double pi = std::numbers::pi;

  // X = D F^H, X(j,k) = delta^j exp(2 pi i jk / n) / sqrt(n).
  DenseMatrix x(n, n);
  for (Index k = 0; k < n; ++k)
    for (Index j = 0; j < n; ++j) {
      const double phase = pi * static_cast<double>(j) / static_cast<double>(n) +
                           2.0 * pi * static_cast<double>((j * k) % n) / static_cast<double>(n);
      x(j, k) = std::polar(inv_sqrt_n, phase);
    }

  // Circulant embedding of T, order 2n: [t_0..t_{n-1}, 0, t_{-(n-1)}..t_{-1}].
  std::vector<Scalar> c(static_cast<std::size_t>(2 * n), Scalar(0));
  for (Index k = 0; k < n; ++k) c[static_cast<std::size_t>(k)] = t.first_column(k);
  for (Index k = 1; k < n; ++k) c[static_cast<std::size_t>(2 * n - k)] = t.first_row(k);
  std::vector<Scalar> c_hat;
  fft.fwd(c_hat, c);

  DenseMatrix out(n, n);
  std::vector<Scalar> pad(static_cast<std::size_t>(2 * n));
  std::vector<Scalar> pad_hat, prod;
  std::vector<Scalar> col(static_cast<std::size_t>(n)), col_hat;
  for (Index k = 0; k < n; ++k) {
    std::fill(pad.begin(), pad.end(), Scalar(0));
    std::copy(x.col(k).data(), x.col(k).data() + n, pad.begin());
    fft.fwd(pad_hat, pad);
    for (std::size_t i = 0; i < pad_hat.size(); ++i) pad_hat[i] *= c_hat[i];
    fft.inv(prod, pad_hat);
    std::copy(prod.begin(), prod.begin() + n, col.begin());
    fft.fwd(col_hat, col);
    for (Index i = 0; i < n; ++i) out(i, k) = col_hat[static_cast<std::size_t>(i)] * inv_sqrt_n;
  }
  return out;
}

Vector cauchy_row_nodes(Index n) {
  Vector v(n);
  for (Index k = 0; k < n; ++k)
    v(k) = std::polar(1.0, 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n));
  return v;
}

Vector cauchy_col_nodes(Index n) {
  Vector v(n);
  for (Index k = 0; k < n; ++k)
    v(k) = std::polar(1.0, std::numbers::pi * (2.0 * static_cast<double>(k) + 1.0) /
                               static_cast<double>(n));
  return v;
}

DenseMatrix displacement(const DenseMatrix& c) {
  if (c.rows() != c.cols()) throw Error("displacement: square matrix required");
  const Vector d1 = cauchy_row_nodes(c.rows());
  const Vector d2 = cauchy_col_nodes(c.cols());
  return d1.asDiagonal() * c - c * d2.asDiagonal();
}

void write_matrix_binary(const DenseMatrix& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  byteio::Writer w(out);
  w.u64(static_cast<std::uint64_t>(m.rows()));
  w.u64(static_cast<std::uint64_t>(m.cols()));
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) w.complex(m(i, j));
  if (!out) throw Error("write failed: '" + path.string() + "'");
}

DenseMatrix read_matrix_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  byteio::Reader r(in);
  const auto rows = static_cast<Index>(r.u64());
  const auto cols = static_cast<Index>(r.u64());
  DenseMatrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = r.complex();
  return m;
}

}  // namespace smm
