#include <doctest.h>

#include <filesystem>

#include "helpers.hpp"
#include "smm/oracle.hpp"
#include "smm/toeplitz.hpp"

using namespace smm;

TEST_CASE("oracle counts every evaluation") {
  const EntryOracle o = oracle_from_dense(complex_gaussian(8, 8, 1));
  CHECK(o.accesses() == 0);
  (void)o(0, 0);
  CHECK(o.accesses() == 1);
  (void)o(0, 0);
  CHECK(o.accesses() == 2);

  const EntryOracle sweep = o.fork();
  CHECK(sweep.accesses() == 0);
  (void)read_block(sweep, sweep.full_range());
  CHECK(sweep.accesses() == 64);
  CHECK(o.accesses() == 2);
}

TEST_CASE("read_block") {
  const DenseMatrix m = complex_gaussian(6, 5, 2);
  const EntryOracle o = oracle_from_dense(m);
  CHECK(read_block(o, o.full_range()) == m);
  CHECK(o.accesses() == 30);
  CHECK(read_block(o, {2, 3, 4, 5})(0, 0) == m(2, 4));
  CHECK(o.accesses() == 31);
  CHECK_THROWS(read_block(o, {0, 7, 0, 1}));
  CHECK_THROWS(read_block(o, {3, 3, 0, 1}));

  const EntryOracle big(1024, 1024, [](Index i, Index j) { return Scalar(double(i - j), 0.0); });
  (void)read_block(big, {0, 512, 512, 1024});
  CHECK(big.accesses() == 262144);
}

TEST_CASE("row and column reads are block relative") {
  const DenseMatrix m = complex_gaussian(6, 6, 3);
  const EntryOracle o = oracle_from_dense(m);
  const BlockRange b{2, 6, 1, 4};
  const std::vector<Index> ids{0, 2};
  const DenseMatrix r = read_rows(o, b, ids);
  CHECK(r.rows() == 2);
  CHECK(r.cols() == 3);
  CHECK(r(1, 0) == m(4, 1));
  const DenseMatrix c = read_cols(o, b, ids);
  CHECK(c(3, 1) == m(5, 3));
  CHECK(o.accesses() == 6 + 8);
  CHECK_THROWS(read_rows(o, b, std::vector<Index>{4}));
}

TEST_CASE("oracle rejects non-finite input") {
  DenseMatrix m = DenseMatrix::Zero(2, 2);
  m(0, 1) = std::numeric_limits<double>::infinity();
  CHECK_THROWS(oracle_from_dense(m));
}

TEST_CASE("family generators") {
  FamilyParams p;
  p.prolate_w = 0.25;
  const ToeplitzSpec t = toeplitz_from_family(Family::prolate, 4, 0, p);
  CHECK(t.first_column(0).real() == doctest::Approx(0.5));
  CHECK(t.first_column(1).real() == doctest::Approx(1.0 / M_PI).epsilon(1e-15));
  CHECK(t.first_column(2).real() == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(t.first_row == t.first_column);

  const ToeplitzSpec k = toeplitz_from_family(Family::kms, 3, 0);
  CHECK(k.first_column(0).real() == 1.0);
  CHECK(k.first_column(1).real() == 0.5);
  CHECK(k.first_column(2).real() == 0.25);

  const ToeplitzSpec r1 = toeplitz_from_family(Family::random, 1024, 7);
  const ToeplitzSpec r2 = toeplitz_from_family(Family::random, 1024, 7);
  CHECK(r1.first_column == r2.first_column);
  CHECK(r1.first_row == r2.first_row);
  CHECK(r1.first_column(0) == r1.first_row(0));
  CHECK(r1.first_column != toeplitz_from_family(Family::random, 1024, 8).first_column);

  const ToeplitzSpec tri = toeplitz_from_family(Family::tridiag_perturbed, 16, 3);
  CHECK(std::abs(tri.first_column(0) - 2.0) <= 1e-8);
  CHECK(std::abs(tri.first_column(1) + 1.0) <= 1e-8);
  CHECK(std::abs(tri.first_row(1) + 1.0) <= 1e-8);
  CHECK(std::abs(tri.first_column(5)) <= 1e-8);

  for (Family f : kAllFamilies) {
    const ToeplitzSpec s = toeplitz_from_family(f, 8, 1);
    const DenseMatrix d = toeplitz_dense(s);
    for (Index i = 1; i < 8; ++i)
      for (Index j = 1; j < 8; ++j) CHECK(d(i, j) == d(i - 1, j - 1));
    CHECK(parse_family(family_name(f)) == f);
  }
}

TEST_CASE("family parameter errors") {
  CHECK_THROWS_WITH(parse_family("matrix_b"), doctest::Contains("unknown family"));
  FamilyParams bad;
  bad.prolate_w = 0.5;
  CHECK_THROWS(toeplitz_from_family(Family::prolate, 8, 0, bad));
  bad = {};
  bad.kms_rho = 1.0;
  CHECK_THROWS(toeplitz_from_family(Family::kms, 8, 0, bad));
  bad = {};
  bad.gauss_sigma = 0.0;
  CHECK_THROWS(toeplitz_from_family(Family::gaussian_kernel, 8, 0, bad));
  CHECK_THROWS(toeplitz_from_family(Family::random, 1, 0));
}

TEST_CASE("cauchy-like transform: frozen values") {
  // Dense F T D F^H evaluated independently (tests/oracles/derive.py).
  const DenseMatrix c = toeplitz_to_cauchy_like(toeplitz_from_family(Family::prolate, 16, 0));
  CHECK(std::abs(c(0, 0) - Scalar(0.06251194732054607, 0.6346944524067322)) <= 1e-13);
  CHECK(std::abs(c(1, 2) - Scalar(0.06292808431820474, 0.2074460929319406)) <= 1e-13);
  CHECK(std::abs(c(15, 7) - Scalar(0.029949244987547145, -0.0029497431683107667)) <= 1e-13);
  CHECK(spectral_norm(c) == doctest::Approx(0.9999999999818926).epsilon(1e-12));

  const DenseMatrix k = toeplitz_to_cauchy_like(toeplitz_from_family(Family::kms, 8, 0));
  CHECK(std::abs(k(2, 5) - Scalar(0.06617606905814294, 0.01316323856023506)) <= 1e-13);
  CHECK(spectral_norm(k) == doctest::Approx(2.571639056812365).epsilon(1e-12));

  const DenseMatrix g = toeplitz_to_cauchy_like(toeplitz_from_family(Family::gaussian_kernel, 16, 0));
  CHECK(spectral_norm(g) == doctest::Approx(3.4358574537420727).epsilon(1e-12));
}

TEST_CASE("cauchy-like transform: structure") {
  ToeplitzSpec eye;
  eye.n = 8;
  eye.first_column = Vector::Zero(8);
  eye.first_column(0) = 1.0;
  eye.first_row = eye.first_column;
  CHECK(spectral_norm(toeplitz_to_cauchy_like(eye)) == doctest::Approx(1.0).epsilon(1e-13));

  for (Index n : {16, 64, 256})
    for (Family f : kAllFamilies) {
      CAPTURE(n);
      CAPTURE(family_name(f));
      const ToeplitzSpec t = toeplitz_from_family(f, n, 11);
      const DenseMatrix c = toeplitz_to_cauchy_like(t);
      const double nt = spectral_norm(toeplitz_dense(t));
      CHECK(std::abs(spectral_norm(c) - nt) <= 1e-10 * nt);
      CHECK(numerical_rank(displacement(c), 1e-8) <= 2);
    }

  CHECK_THROWS_WITH(toeplitz_to_cauchy_like(toeplitz_from_family(Family::kms, 12, 0)),
                    doctest::Contains("FFT size"));
}

TEST_CASE("prolate cauchy-like matrix is extremely ill-conditioned") {
  const RealVector s = singular_values(toeplitz_to_cauchy_like(toeplitz_from_family(Family::prolate, 256, 0)));
  CHECK(s(0) / s(s.size() - 1) > 1e10);
}

TEST_CASE("node vectors") {
  const Vector w = cauchy_row_nodes(8), v = cauchy_col_nodes(8);
  for (Index k = 0; k < 8; ++k) {
    CHECK(std::abs(std::abs(w(k)) - 1.0) <= 1e-15);
    CHECK(std::abs(v(k) - w(k) * std::polar(1.0, M_PI / 8)) <= 1e-15);
  }
}

TEST_CASE("binary matrix dump round trip") {
  const DenseMatrix m = complex_gaussian(3, 5, 9);
  const auto path = std::filesystem::temp_directory_path() / "smm_matrix_roundtrip.bin";
  write_matrix_binary(m, path);
  CHECK(std::filesystem::file_size(path) == 16 + 15 * 16);
  CHECK(read_matrix_binary(path) == m);
  std::filesystem::remove(path);
}
