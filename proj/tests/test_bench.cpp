#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "smm/bench.hpp"

using namespace smm;

namespace {

BenchConfig small(Family f, int trials = 2) {
  BenchConfig cfg;
  cfg.families = {f};
  cfg.n = 128;
  cfg.leaf_size = 64;
  cfg.trials = trials;
  cfg.threads = 1;
  return cfg;
}

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST_CASE("number formatting") {
  CHECK(format_sci(0.00562) == "5.62e-03");
  CHECK(format_sci(3.37e-05) == "3.37e-05");
  CHECK(format_sci(0.0) == "0.00e+00");
  CHECK(format_sci(262144.0) == "2.62e+05");
}

TEST_CASE("pairwise sum") {
  CHECK(pairwise_sum({}) == 0.0);
  std::vector<double> v(1000, 0.1);
  CHECK(pairwise_sum(v) == doctest::Approx(100.0).epsilon(1e-14));
  // Error grows like log(n) rather than n.
  std::vector<double> w(1 << 20, 0.1);
  CHECK(std::abs(pairwise_sum(w) - 104857.6) <= 1e-9);
}

TEST_CASE("config validation") {
  BenchConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.trials = 0;
  CHECK_THROWS(cfg.validate());
  cfg = {};
  cfg.n = 1000;
  CHECK_THROWS(cfg.validate());
  cfg = {};
  cfg.loops_list = {1, 0};
  CHECK_THROWS(cfg.validate());
  cfg = {};
  cfg.leaf_size = 1024;
  CHECK_THROWS(cfg.validate());
  CHECK_THROWS(parse_bench_backend("svd"));
  for (auto b : {BenchBackend::ca, BenchBackend::gaussian, BenchBackend::srht, BenchBackend::hybrid})
    CHECK(parse_bench_backend(bench_backend_name(b)) == b);
}

TEST_CASE("report shape and table emission") {
  BenchConfig cfg = small(Family::kms);
  cfg.loops_list = {1, 3, 5};
  const BenchmarkReport r = run_benchmark(cfg);
  REQUIRE(r.rows.size() == 3);
  CHECK_FALSE(r.timed);
  for (const BenchRow& row : r.rows) {
    CHECK(row.spectral_std >= 0);
    CHECK(row.chebyshev_std >= 0);
    CHECK(row.spectral_mean > 0);
    CHECK(row.trials == 2);
  }
  CHECK(r.trials.size() == 6);

  const std::string csv = emit_table(r, OutputFormat::csv);
  CHECK(csv.rfind("family,loops,hss_rank,spectral_mean,spectral_std,chebyshev_mean,chebyshev_std,entries_accessed,seconds\n", 0) == 0);
  CHECK(count_lines(csv) == 4);
  std::istringstream lines(csv);
  std::string line;
  std::getline(lines, line);
  std::getline(lines, line);
  CHECK(line.rfind("kms,1,", 0) == 0);
  CHECK(line.back() == ',');  // untimed: empty seconds field

  const std::string md = emit_table(r, OutputFormat::markdown);
  CHECK(count_lines(md) == 2 + 3);
  CHECK(md.find("| kms | 1 |") != std::string::npos);

  BenchmarkReport one = r;
  one.rows.resize(1);
  CHECK(count_lines(emit_table(one, OutputFormat::csv)) == 2);
  CHECK_THROWS(emit_table(BenchmarkReport{}, OutputFormat::csv));
}

TEST_CASE("deterministic for a fixed config") {
  BenchConfig cfg = small(Family::random, 1);
  cfg.base_seed = 42;
  const std::string a = emit_table(run_benchmark(cfg), OutputFormat::csv);
  const std::string b = emit_table(run_benchmark(cfg), OutputFormat::csv);
  CHECK(a == b);
  cfg.base_seed = 43;
  CHECK(emit_table(run_benchmark(cfg), OutputFormat::csv) != a);
}

TEST_CASE("threaded runs give the same statistics") {
  BenchConfig cfg = small(Family::random, 4);
  const BenchmarkReport serial = run_benchmark(cfg);
  cfg.threads = 3;
  const BenchmarkReport threaded = run_benchmark(cfg);
  CHECK(threaded.timed);
  REQUIRE(serial.rows.size() == threaded.rows.size());
  for (std::size_t k = 0; k < serial.rows.size(); ++k) {
    CHECK(serial.rows[k].spectral_mean == threaded.rows[k].spectral_mean);
    CHECK(serial.rows[k].chebyshev_std == threaded.rows[k].chebyshev_std);
    CHECK(serial.rows[k].hss_rank == threaded.rows[k].hss_rank);
  }
}

TEST_CASE("spectral and chebyshev errors are consistent") {
  BenchConfig cfg = small(Family::random, 5);
  cfg.n = 64;
  cfg.leaf_size = 32;
  cfg.loops_list = {1};
  const BenchmarkReport r = run_benchmark(cfg);
  for (const TrialRecord& t : r.trials) CHECK(t.spectral >= t.chebyshev / 64.0);
  CHECK(r.rows[0].spectral_mean >= r.rows[0].chebyshev_mean / 64.0);
}

TEST_CASE("families with failing trials abort") {
  BenchConfig cfg = small(Family::tridiag_perturbed, 3);
  cfg.families = {Family::kms, Family::tridiag_perturbed};
  cfg.params.perturbation = -1.0;
  const BenchmarkReport r = run_benchmark(cfg);
  CHECK(r.aborted());
  REQUIRE(r.failures.size() == 1);
  CHECK(r.failures[0].family == Family::tridiag_perturbed);
  CHECK(r.failures[0].failed_trials == 3);
  CHECK(r.failures[0].first_error.find("perturbation") != std::string::npos);
  for (const BenchRow& row : r.rows) CHECK(row.family == Family::kms);
}

TEST_CASE("matrix dump and trial log") {
  const auto dir = std::filesystem::temp_directory_path();
  BenchConfig cfg = small(Family::gaussian_kernel, 2);
  cfg.families = {Family::gaussian_kernel, Family::prolate};
  cfg.dump_path = dir / "smm_dump.bin";
  cfg.trial_log_path = dir / "smm_trials.csv";
  (void)run_benchmark(cfg);
  const auto g = family_dump_path(*cfg.dump_path, Family::gaussian_kernel, true);
  CHECK(g.filename() == "smm_dump.gaussian_kernel.bin");
  const DenseMatrix c = read_matrix_binary(g);
  CHECK(c == toeplitz_to_cauchy_like(toeplitz_from_family(Family::gaussian_kernel, 128, 0)));
  std::ifstream log(*cfg.trial_log_path);
  std::string all((std::istreambuf_iterator<char>(log)), {});
  CHECK(count_lines(all) == 1 + 2 * 2 * 2);
  std::filesystem::remove(g);
  std::filesystem::remove(family_dump_path(*cfg.dump_path, Family::prolate, true));
  std::filesystem::remove(*cfg.trial_log_path);
}

TEST_CASE("access budget holds on every block") {
  BenchConfig cfg = small(Family::kms, 2);
  cfg.n = 1024;
  cfg.leaf_size = 512;
  const BenchmarkReport r = run_benchmark(cfg);
  CHECK(r.budget_violations.empty());
  for (const BenchRow& row : r.rows) CHECK(row.entries_accessed < 0.25 * 1024 * 1024);
}

TEST_CASE("all families: error band at n = 1024") {
  for (Family f : kAllFamilies) {
    CAPTURE(family_name(f));
    BenchConfig cfg;
    cfg.families = {f};
    cfg.trials = 3;
    cfg.threads = 1;
    const BenchmarkReport r = run_benchmark(cfg);
    REQUIRE(r.rows.size() == 2);
    CHECK(r.budget_violations.empty());
    for (const BenchRow& row : r.rows) {
      CHECK(row.spectral_mean >= 1e-8);
      CHECK(row.spectral_mean <= 1e-1);
      CHECK(row.hss_rank <= 40);
    }
    if (f == Family::prolate) {
      CHECK(r.rows[0].spectral_mean >= 1e-4);
      CHECK(r.rows[0].spectral_mean <= 5e-2);
      CHECK(r.rows[1].spectral_mean >= 1e-7);
      CHECK(r.rows[1].spectral_mean <= 1e-3);
      CHECK(r.rows[0].hss_rank >= 12);
      CHECK(r.rows[0].hss_rank <= 20);
    }
  }
}

TEST_CASE("loop improvement: gaussian kernel, 100 trials") {
  BenchConfig cfg;
  cfg.families = {Family::gaussian_kernel};
  cfg.threads = 1;
  const BenchmarkReport r = run_benchmark(cfg);
  REQUIRE(r.rows.size() == 2);
  CHECK(r.rows[1].spectral_mean <= r.rows[0].spectral_mean);
}
