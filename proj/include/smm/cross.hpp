#pragma once

// Cross (skeleton) approximation of oracle-accessed blocks.
//
// A block M (h x w) is approximated from r of its columns C = M[:, J], r of
// its rows R = M[I, :] and their intersection G = M[I, J] as
//
//   M ~ (C G^{-1}) R.
//
// Pivots are refined by alternating maxvol sweeps ("C-A loops"): pick rows I
// of maximal volume inside the column slab, then columns J of maximal volume
// inside the row slab. Only the slabs are ever read from the oracle.

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <vector>

#include "smm/linalg.hpp"
#include "smm/oracle.hpp"

namespace smm {

/// Block-relative pivot indices. An empty row_ids marks a starting cross whose
/// rows have not been chosen yet.
struct PivotSet {
  std::vector<Index> row_ids;
  std::vector<Index> col_ids;

  Index rank() const { return static_cast<Index>(col_ids.size()); }

  /// Throws on duplicates, out-of-range indices or size mismatch.
  void validate(Index block_rows, Index block_cols) const;

  friend bool operator==(const PivotSet&, const PivotSet&) = default;
};

struct CaConfig {
  int loops = 1;
  double maxvol_growth_tol = 1.01;
  double rank_tol = 1e-6;  // relative spectral
  Index max_rank = 64;
  std::uint64_t seed = 0;

  void validate() const;
};

struct MaxvolResult {
  std::vector<Index> rows;
  int swaps = 0;
  // The starting submatrix was singular and rows were reselected by
  // column-pivoted QR.
  bool fallback = false;
  // The slab itself has numerical rank below its width.
  bool rank_deficient = false;
};

/// Dominant r x r submatrix of an h x r slab. `start_rows` may be empty, in
/// which case the start comes from column-pivoted QR of tall^H.
MaxvolResult maxvol(const DenseMatrix& tall, std::span<const Index> start_rows = {},
                    double growth_tol = 1.01);

/// Rows and columns of one block, read through the oracle at most once each.
/// Entries at the intersection of a cached row and a requested column (or
/// vice versa) are copied rather than re-read.
class SlabCache {
 public:
  SlabCache(const EntryOracle& o, BlockRange b);

  const BlockRange& block() const { return block_; }

  DenseMatrix rows(std::span<const Index> ids);
  DenseMatrix cols(std::span<const Index> ids);

 private:
  const EntryOracle& oracle_;
  BlockRange block_;
  std::map<Index, Eigen::RowVectorXcd> rows_;
  std::map<Index, Vector> cols_;
};

struct CaLoopResult {
  PivotSet pivots;
  bool maxvol_fallback = false;
};

/// One alternation: maxvol over the rows of M[:, J], then over the columns of
/// M[I, :].
CaLoopResult ca_loop(const EntryOracle& o, const BlockRange& b, const PivotSet& p,
                     double growth_tol = 1.01);
CaLoopResult ca_loop(SlabCache& cache, const PivotSet& p, double growth_tol = 1.01);

struct CrossApproxResult {
  ApproxResult approx;
  PivotSet pivots;
  bool maxvol_fallback = false;
  // Cross G was numerically singular and the skeleton was shrunk to its
  // nonsingular part (only with allow_truncation).
  bool truncated = false;
  double cross_condition = 1.0;
  bool ill_conditioned = false;  // cross_condition > 1e12
};

inline constexpr double kCrossConditionWarning = 1e12;

/// First r entries of a seeded permutation of [0, w); nested in r.
std::vector<Index> initial_columns(Index w, Index r, std::uint64_t seed);

/// Rank-r cross approximation of block `b`. Does not compute error norms.
CrossApproxResult cross_approximate(const EntryOracle& o, const BlockRange& b, Index r,
                                    const CaConfig& cfg);
/// `start_cols`, if given, replaces the leading initial columns.
CrossApproxResult cross_approximate(SlabCache& cache, Index r, const CaConfig& cfg,
                                    bool allow_truncation = false,
                                    std::span<const Index> start_cols = {});

enum class Validator { exact, estimated };

/// Relative spectral error of a candidate factorization of one block.
///
/// exact: the block is materialized once (through a forked oracle, so the
/// reads are not charged to the algorithm) and errors come from full SVDs.
/// estimated: the residual is formed only on a seeded sample of rows and of
/// columns, and its norm is taken by power iteration; the estimate is the
/// larger of the two sampled relative errors.
class BlockValidator {
 public:
  BlockValidator(const EntryOracle& o, const BlockRange& b, Validator mode, Index sample_hint,
                 std::uint64_t seed);

  /// Zero block (or zero sample, in estimated mode).
  bool is_zero() const { return block_norm_ == 0.0; }
  double rel_error(const FactorPair& f) const;
  /// The materialized block in exact mode; empty otherwise.
  const DenseMatrix& dense() const { return dense_; }
  std::uint64_t accesses() const { return reads_.accesses(); }

 private:
  Validator mode_;
  EntryOracle reads_;
  DenseMatrix dense_;
  std::vector<Index> sample_rows_, sample_cols_;
  DenseMatrix row_sample_, col_sample_;  // M[S, :], M[:, S']
  double block_norm_ = 0.0;
  double row_norm_ = 0.0, col_norm_ = 0.0;
};

struct RankSearchResult {
  Index rank = 0;
  CrossApproxResult cross;
  double rel_error = 0.0;   // as measured by the validator
  bool converged = true;
  std::vector<Index> probed_ranks;
  std::uint64_t entries_accessed = 0;     // algorithm reads, all probes
  std::uint64_t validation_accesses = 0;  // reads spent on error evaluation
};

/// Smallest probed rank in [1, cfg.max_rank] whose cross approximation meets
/// cfg.rank_tol. Ranks are probed by doubling until the tolerance is met and
/// then bisected. All probes share one slab cache; each probe recomputes its
/// pivots from scratch.
RankSearchResult adaptive_rank_search(const EntryOracle& o, const BlockRange& b,
                                      const CaConfig& cfg, Validator validator = Validator::exact);

struct RankProbeTrace {
  Index chosen = 0;  // passing rank, or the best-error rank when none passed
  bool converged = false;
  std::vector<Index> probed;
};

/// Growth-then-bisection over [1, max_rank]. Ranks grow by doubling, or by
/// less when extrapolating the error decay of the last two failing probes
/// predicts the tolerance is closer. `probe(r)` returns the relative error
/// at rank r; the error need not be monotone in r.
RankProbeTrace search_rank(Index max_rank, double tol, const std::function<double(Index)>& probe);

/// Per-probe access budget for an h x w block at rank r with the given loop count.
std::uint64_t ca_access_budget(Index h, Index w, Index r, int loops);

}  // namespace smm
