#pragma once

// Seeded multi-trial accuracy experiment: per family and trial, transform the
// Toeplitz matrix to its Cauchy-like form, build a one-level (or hierarchical)
// HSS approximation per C-A loop count and measure reconstruction errors.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "smm/hss.hpp"
#include "smm/toeplitz.hpp"

namespace smm {

enum class BenchBackend { ca, gaussian, srht, hybrid };
enum class OutputFormat { csv, markdown };

BenchBackend parse_bench_backend(std::string_view s);
std::string_view bench_backend_name(BenchBackend b);

struct BenchConfig {
  std::vector<Family> families{Family::prolate};
  Index n = 1024;
  std::vector<int> loops_list{1, 5};
  int trials = 100;
  double rank_tol = 1e-6;
  Index leaf_size = 512;
  Index max_rank = 64;
  BenchBackend backend = BenchBackend::ca;
  std::uint64_t base_seed = 0;
  OutputFormat output_format = OutputFormat::csv;
  // Binary dump of each family's first Cauchy-like matrix (seed base_seed).
  // With several families the family name is inserted before the extension.
  std::optional<std::filesystem::path> dump_path;
  std::optional<std::filesystem::path> trial_log_path;  // per-trial CSV
  // 0: one worker per hardware thread. 1: serial, and the report carries no
  // wall-clock data so that it is byte-reproducible.
  int threads = 0;
  FamilyParams params;

  void validate() const;
};

struct BenchRow {
  Family family = Family::prolate;
  int loops = 1;
  Index hss_rank = 0;  // mode of the per-trial values, smallest on ties
  double spectral_mean = 0, spectral_std = 0;
  double chebyshev_mean = 0, chebyshev_std = 0;
  double entries_accessed = 0;  // mean off-diagonal oracle reads per build
  double seconds = 0;           // build time summed over trials
  int trials = 0;               // successful trials
};

struct TrialRecord {
  Family family = Family::prolate;
  int trial = 0;
  std::uint64_t seed = 0;
  int loops = 1;
  Index hss_rank = 0;
  double spectral = 0, chebyshev = 0;
  std::uint64_t offdiag_accesses = 0;
  std::uint64_t total_accesses = 0;
};

struct BudgetViolation {
  Family family = Family::prolate;
  int trial = 0;
  std::string what;
};

struct FamilyFailure {
  Family family = Family::prolate;
  int failed_trials = 0;
  std::string first_error;
};

struct BenchmarkReport {
  std::vector<BenchRow> rows;
  std::vector<TrialRecord> trials;
  std::vector<FamilyFailure> failures;  // every family with a failed trial
  std::vector<BudgetViolation> budget_violations;
  bool timed = true;

  bool aborted() const;  // some family lost more than 10% of its trials
};

/// Deterministic given cfg (up to the seconds column when cfg.threads != 1).
BenchmarkReport run_benchmark(const BenchConfig& cfg);

std::string emit_table(const BenchmarkReport& r, OutputFormat format);

/// "%.2e", e.g. 0.00562 -> "5.62e-03".
std::string format_sci(double v);

/// Stable pairwise sum.
double pairwise_sum(const std::vector<double>& v);

std::filesystem::path family_dump_path(const std::filesystem::path& base, Family f, bool several);

/// Per-trial records as CSV.
void write_trial_log(const BenchmarkReport& r, const std::filesystem::path& path);

}  // namespace smm
