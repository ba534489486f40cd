#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "smm/randomized.hpp"

using namespace smm;

namespace {

Eigen::VectorXd halving_spectrum(Index n) {
  Eigen::VectorXd s(n);
  for (Index k = 0; k < n; ++k) s(k) = std::pow(2.0, -static_cast<double>(k));
  return s;
}

}  // namespace

TEST_CASE("randomized range finder recovers exact rank") {
  for (Multiplier mult : {Multiplier::gaussian, Multiplier::hadamard_abridged_permuted})
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const DenseMatrix m = testing::rank_r(60, 50, 6, seed);
      SketchConfig cfg;
      cfg.target_rank = 6;
      cfg.multiplier = mult;
      cfg.seed = seed;
      const auto r = randomized_range_lra(m, cfg);
      CHECK(relative_error(m, r.approx.factors, Norm::spectral) <= 1e-10);
      CHECK(r.approx.factors.rank() == 6);
      CHECK(r.basis.cols() == 16);
      CHECK(r.approx.entries_accessed == 3000u);
    }
}

TEST_CASE("full-rank capture without oversampling") {
  const DenseMatrix m = complex_gaussian(8, 8, 3);
  SketchConfig cfg;
  cfg.target_rank = 8;
  cfg.oversampling = 0;
  CHECK(relative_error(m, randomized_range_lra(m, cfg).approx.factors, Norm::spectral) <= 1e-12);
}

TEST_CASE("tail bound regime on a geometric spectrum") {
  const Eigen::VectorXd s = halving_spectrum(64);
  int within = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const DenseMatrix m = testing::with_spectrum(s, 900 + seed);
    SketchConfig cfg;
    cfg.target_rank = 8;
    cfg.seed = seed;
    const double err = spectral_norm(m - randomized_range_lra(m, cfg).approx.factors.product());
    within += err <= 10 * s(8);
  }
  CHECK(within >= 95);
}

TEST_CASE("basis is orthonormal") {
  for (Multiplier mult : {Multiplier::gaussian, Multiplier::hadamard_abridged_permuted})
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const DenseMatrix m = complex_gaussian(40, 70, seed);
      SketchConfig cfg;
      cfg.target_rank = 5;
      cfg.multiplier = mult;
      cfg.seed = seed;
      const DenseMatrix q = randomized_range_lra(m, cfg).basis;
      CHECK(chebyshev_norm(q.adjoint() * q - DenseMatrix::Identity(q.cols(), q.cols())) <= 1e-10);
    }
}

TEST_CASE("oversampling helps on average") {
  const Eigen::VectorXd s = halving_spectrum(64);
  double sum0 = 0, sum10 = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const DenseMatrix m = testing::with_spectrum(s, 300 + seed);
    SketchConfig cfg;
    cfg.target_rank = 8;
    cfg.seed = seed;
    cfg.oversampling = 0;
    sum0 += relative_error(m, randomized_range_lra(m, cfg).approx.factors, Norm::spectral);
    cfg.oversampling = 10;
    sum10 += relative_error(m, randomized_range_lra(m, cfg).approx.factors, Norm::spectral);
  }
  CHECK(sum10 <= sum0);
}

TEST_CASE("sketch argument errors") {
  const DenseMatrix m = complex_gaussian(10, 10, 1);
  SketchConfig cfg;
  cfg.target_rank = 2;  // 2 + 10 > 10
  CHECK_THROWS(randomized_range_lra(m, cfg));
  cfg.target_rank = 0;
  CHECK_THROWS(cfg.validate());
  cfg.target_rank = 1;
  cfg.oversampling = -1;
  CHECK_THROWS(cfg.validate());
}

TEST_CASE("multiply cost") {
  CHECK(multiply_cost(512, 512, 16) == 8380416u);
  CHECK(multiply_cost(1, 1, 1) == 1u);
  CHECK(multiply_cost(2, 3, 4) == 40u);
}

TEST_CASE("hybrid backend selection") {
  CHECK(hybrid_backend_select(512, 512) == LraBackend::cross_approx);
  CHECK(hybrid_backend_select(64, 64) == LraBackend::randomized);
  CHECK(hybrid_backend_select(128, 128) == LraBackend::randomized);
  CHECK(hybrid_backend_select(128, 129) == LraBackend::cross_approx);
  CHECK(hybrid_backend_select(64, 64, 32) == LraBackend::cross_approx);
  CHECK_THROWS(hybrid_backend_select(4, 4, 0));
}

TEST_CASE("walsh-hadamard transform") {
  std::vector<Scalar> v{1, 0, 0, 0};
  CHECK(fwht(v) == 8u);
  for (const Scalar& x : v) CHECK(x == Scalar(1));
  std::vector<Scalar> w{1, 2, 3, 4};
  fwht(w);
  CHECK(w == std::vector<Scalar>{10, -2, -4, 0});
  std::vector<Scalar> bad(3);
  CHECK_THROWS(fwht(bad));
}

TEST_CASE("hadamard sketch") {
  SUBCASE("isometry on average") {
    const Index h = 48, width = 24;
    DenseMatrix acc = DenseMatrix::Zero(h, h);
    const int draws = 400;
    for (int s = 0; s < draws; ++s) {
      const DenseMatrix omega = HadamardSketch(h, width, static_cast<std::uint64_t>(s)).dense();
      acc += omega * omega.adjoint();
    }
    acc /= draws;
    CHECK(chebyshev_norm(acc - DenseMatrix::Identity(h, h)) <= 0.2);
    // Diagonal is exact for every draw.
    const DenseMatrix one = HadamardSketch(h, width, 1).dense();
    CHECK((one * one.adjoint()).diagonal().real().minCoeff() == doctest::Approx(1.0));
  }
  SUBCASE("operator matches its dense form") {
    const HadamardSketch sk(20, 7, 3);
    CHECK(sk.padded_size() == 32);
    const DenseMatrix b = complex_gaussian(5, 20, 2);
    CHECK(chebyshev_norm(sk.apply(b) - b * sk.dense()) <= 1e-13);
  }
  SUBCASE("n log n operation count") {
    std::uint64_t ops[2];
    int k = 0;
    for (Index n : {256, 1024}) {
      const HadamardSketch sk(n, 16, 1);
      std::vector<Scalar> row(static_cast<std::size_t>(n), Scalar(1)), out(16);
      ops[k++] = sk.apply(row, out);
    }
    const double fitted = static_cast<double>(ops[1]) / static_cast<double>(ops[0]);
    const double model = (1024.0 * 10) / (256.0 * 8);
    CHECK(std::abs(fitted / model - 1.0) <= 0.25);
  }
  CHECK_THROWS(HadamardSketch(10, 17, 0));
  CHECK_THROWS(HadamardSketch(0, 1, 0));
}
