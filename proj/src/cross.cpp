#include "smm/cross.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <limits>
#include <set>

namespace smm {

namespace {

void check_indices(std::span<const Index> ids, Index bound, const std::string& what) {
  std::set<Index> seen;
  for (Index i : ids) {
    if (i < 0 || i >= bound) throw Error(what + " index out of block");
    if (!seen.insert(i).second) throw Error("duplicate " + what + " index");
  }
}

}  // namespace

void PivotSet::validate(Index block_rows, Index block_cols) const {
  if (!row_ids.empty() && row_ids.size() != col_ids.size())
    throw Error("pivot set: row and column counts differ");
  check_indices(row_ids, block_rows, "pivot set: row");
  check_indices(col_ids, block_cols, "pivot set: column");
}

void CaConfig::validate() const {
  if (loops < 1) throw Error("C-A config: loops must be >= 1");
  if (!(maxvol_growth_tol > 1.0)) throw Error("C-A config: maxvol growth tolerance must exceed 1");
  if (!(rank_tol > 0.0 && rank_tol < 1.0)) throw Error("C-A config: rank tolerance must lie in (0, 1)");
  if (max_rank < 1) throw Error("C-A config: max_rank must be >= 1");
}

namespace {

// Rows picked by column-pivoted QR of tall^H, plus the numerical rank seen.
std::pair<std::vector<Index>, Index> qr_rows(const DenseMatrix& tall) {
  const Index r = tall.cols();
  Eigen::ColPivHouseholderQR<DenseMatrix> qr(tall.adjoint());
  std::vector<Index> rows(static_cast<std::size_t>(r));
  for (Index k = 0; k < r; ++k) rows[static_cast<std::size_t>(k)] = qr.colsPermutation().indices()(k);
  return {rows, qr.rank()};
}

DenseMatrix gather_rows(const DenseMatrix& m, std::span<const Index> ids) {
  DenseMatrix out(static_cast<Index>(ids.size()), m.cols());
  for (Index k = 0; k < out.rows(); ++k) out.row(k) = m.row(ids[static_cast<std::size_t>(k)]);
  return out;
}

}  // namespace

MaxvolResult maxvol(const DenseMatrix& tall, std::span<const Index> start_rows, double growth_tol) {
  const Index h = tall.rows();
  const Index r = tall.cols();
  if (r < 1 || h < r) throw Error("maxvol: need h >= r >= 1");
  if (!(growth_tol > 1.0)) throw Error("maxvol: growth tolerance must exceed 1");

  MaxvolResult out;
  bool usable_start = false;
  if (!start_rows.empty()) {
    if (static_cast<Index>(start_rows.size()) != r) throw Error("maxvol: start set has wrong size");
    check_indices(start_rows, h, "maxvol: start row");
    Eigen::FullPivLU<DenseMatrix> lu(gather_rows(tall, start_rows));
    usable_start = lu.rank() == r;
    if (usable_start) out.rows.assign(start_rows.begin(), start_rows.end());
    else out.fallback = true;
  }
  if (!usable_start) {
    auto [rows, rank] = qr_rows(tall);
    out.rows = std::move(rows);
    if (rank < r) {
      out.rank_deficient = true;
      return out;
    }
  }

  // B = tall * S^{-1}; rows of S are the current selection, so B[rows] = I.
  Eigen::FullPivLU<DenseMatrix> lu(gather_rows(tall, out.rows).transpose());
  DenseMatrix b = lu.solve(tall.transpose()).transpose();

  const int max_swaps = static_cast<int>(std::max<Index>(100, 20 * r));
  while (out.swaps < max_swaps) {
    Index i = 0, j = 0;
    const double best = b.cwiseAbs().maxCoeff(&i, &j);
    if (best <= growth_tol) break;
    // Row i replaces pivot j; |det| grows by |b(i, j)|.
    const Scalar pivot = b(i, j);
    Vector col_j = b.col(j);
    Eigen::RowVectorXcd row_i = b.row(i);
    row_i(j) -= Scalar(1);
    b.noalias() -= (col_j / pivot) * row_i;
    out.rows[static_cast<std::size_t>(j)] = i;
    ++out.swaps;
  }
  return out;
}

SlabCache::SlabCache(const EntryOracle& o, BlockRange b) : oracle_(o), block_(b) { o.check(b); }

DenseMatrix SlabCache::rows(std::span<const Index> ids) {
  const Index w = block_.cols();
  DenseMatrix out(static_cast<Index>(ids.size()), w);
  for (Index k = 0; k < out.rows(); ++k) {
    const Index i = ids[static_cast<std::size_t>(k)];
    if (i < 0 || i >= block_.rows()) throw Error("slab cache: row index out of block");
    auto it = rows_.find(i);
    if (it == rows_.end()) {
      Eigen::RowVectorXcd row(w);
      for (Index j = 0; j < w; ++j) {
        auto c = cols_.find(j);
        row(j) = c != cols_.end() ? c->second(i) : oracle_(block_.row_start + i, block_.col_start + j);
      }
      it = rows_.emplace(i, std::move(row)).first;
    }
    out.row(k) = it->second;
  }
  return out;
}

DenseMatrix SlabCache::cols(std::span<const Index> ids) {
  const Index h = block_.rows();
  DenseMatrix out(h, static_cast<Index>(ids.size()));
  for (Index k = 0; k < out.cols(); ++k) {
    const Index j = ids[static_cast<std::size_t>(k)];
    if (j < 0 || j >= block_.cols()) throw Error("slab cache: column index out of block");
    auto it = cols_.find(j);
    if (it == cols_.end()) {
      Vector col(h);
      for (Index i = 0; i < h; ++i) {
        auto r = rows_.find(i);
        col(i) = r != rows_.end() ? r->second(j) : oracle_(block_.row_start + i, block_.col_start + j);
      }
      it = cols_.emplace(j, std::move(col)).first;
    }
    out.col(k) = it->second;
  }
  return out;
}

CaLoopResult ca_loop(SlabCache& cache, const PivotSet& p, double growth_tol) {
  const BlockRange& b = cache.block();
  p.validate(b.rows(), b.cols());
  if (p.rank() < 1) throw Error("C-A loop: empty pivot set");

  CaLoopResult out;
  const DenseMatrix c = cache.cols(p.col_ids);
  MaxvolResult rows = maxvol(c, p.row_ids, growth_tol);
  out.maxvol_fallback = rows.fallback || rows.rank_deficient;

  const DenseMatrix r = cache.rows(rows.rows);
  MaxvolResult cols = maxvol(r.transpose(), p.col_ids, growth_tol);
  out.maxvol_fallback = out.maxvol_fallback || cols.fallback || cols.rank_deficient;

  out.pivots.row_ids = std::move(rows.rows);
  out.pivots.col_ids = std::move(cols.rows);
  return out;
}

CaLoopResult ca_loop(const EntryOracle& o, const BlockRange& b, const PivotSet& p,
                     double growth_tol) {
  SlabCache cache(o, b);
  return ca_loop(cache, p, growth_tol);
}

std::vector<Index> initial_columns(Index w, Index r, std::uint64_t seed) {
  if (r < 0 || r > w) throw Error("initial columns: rank out of range");
  std::vector<Index> perm(static_cast<std::size_t>(w));
  std::iota(perm.begin(), perm.end(), Index{0});
  // Explicit Fisher-Yates so the draw does not depend on the standard library.
  std::mt19937_64 rng(seed);
  for (Index k = 0; k < r; ++k) {
    const auto span = static_cast<std::uint64_t>(w - k);
    const auto pick = k + static_cast<Index>(rng() % span);
    std::swap(perm[static_cast<std::size_t>(k)], perm[static_cast<std::size_t>(pick)]);
  }
  perm.resize(static_cast<std::size_t>(r));
  return perm;
}

CrossApproxResult cross_approximate(SlabCache& cache, Index r, const CaConfig& cfg,
                                    bool allow_truncation, std::span<const Index> start_cols) {
  cfg.validate();
  const BlockRange& b = cache.block();
  if (r < 0 || r > std::min(b.rows(), b.cols()))
    throw Error("cross approximation: rank " + std::to_string(r) + " out of range for block " +
                to_string(b));

  CrossApproxResult out;
  if (r == 0) {
    out.approx.factors = FactorPair::zero(b.rows(), b.cols());
    return out;
  }

  PivotSet p;
  if (start_cols.empty()) {
    p.col_ids = initial_columns(b.cols(), r, cfg.seed);
  } else {
    check_indices(start_cols, b.cols(), "start column");
    const auto take = std::min<std::size_t>(start_cols.size(), static_cast<std::size_t>(r));
    p.col_ids.assign(start_cols.begin(), start_cols.begin() + static_cast<std::ptrdiff_t>(take));
    for (Index c : initial_columns(b.cols(), b.cols(), cfg.seed)) {
      if (p.rank() == r) break;
      if (std::find(p.col_ids.begin(), p.col_ids.end(), c) == p.col_ids.end()) p.col_ids.push_back(c);
    }
  }
  for (int loop = 0; loop < cfg.loops; ++loop) {
    CaLoopResult step = ca_loop(cache, p, cfg.maxvol_growth_tol);
    out.maxvol_fallback = out.maxvol_fallback || step.maxvol_fallback;
    p = std::move(step.pivots);
  }

  DenseMatrix c = cache.cols(p.col_ids);
  DenseMatrix rows = cache.rows(p.row_ids);
  DenseMatrix g(r, r);
  for (Index k = 0; k < r; ++k) g.col(k) = rows.col(p.col_ids[static_cast<std::size_t>(k)]);

  Eigen::FullPivLU<DenseMatrix> lu(g);
  Index k = lu.rank();
  if (k < r) {
    if (!allow_truncation) throw Error("degenerate cross; increase rank or change seed");
    out.truncated = true;
    if (k == 0) {
      out.pivots = PivotSet{};
      out.approx.factors = FactorPair::zero(b.rows(), b.cols());
      return out;
    }
    // Keep the k x k leading block of the fully pivoted LU: G[P[:k], Q[:k]].
    PivotSet kept;
    DenseMatrix c_kept(b.rows(), k), rows_kept(k, b.cols());
    for (Index t = 0; t < k; ++t) {
      const Index pi = lu.permutationP().indices()(t);
      const Index qi = lu.permutationQ().indices()(t);
      kept.row_ids.push_back(p.row_ids[static_cast<std::size_t>(pi)]);
      kept.col_ids.push_back(p.col_ids[static_cast<std::size_t>(qi)]);
      c_kept.col(t) = c.col(qi);
      rows_kept.row(t) = rows.row(pi);
    }
    p = std::move(kept);
    c = std::move(c_kept);
    rows = std::move(rows_kept);
    g.resize(k, k);
    for (Index t = 0; t < k; ++t) g.col(t) = rows.col(p.col_ids[static_cast<std::size_t>(t)]);
    lu.compute(g);
  }

  out.cross_condition = 1.0 / lu.rcond();
  out.ill_conditioned = !(out.cross_condition <= kCrossConditionWarning);

  // F = C G^{-1}, via G^T F^T = C^T.
  Eigen::FullPivLU<DenseMatrix> lu_t(g.transpose());
  DenseMatrix f = lu_t.solve(c.transpose()).transpose();
  out.approx.factors = FactorPair(std::move(f), std::move(rows));
  out.pivots = std::move(p);
  return out;
}

CrossApproxResult cross_approximate(const EntryOracle& o, const BlockRange& b, Index r,
                                    const CaConfig& cfg) {
  const std::uint64_t before = o.accesses();
  SlabCache cache(o, b);
  CrossApproxResult out = cross_approximate(cache, r, cfg, false);
  out.approx.entries_accessed = o.accesses() - before;
  return out;
}

BlockValidator::BlockValidator(const EntryOracle& o, const BlockRange& b, Validator mode,
                               Index sample_hint, std::uint64_t seed)
    : mode_(mode), reads_(o.fork()) {
  o.check(b);
  if (mode_ == Validator::exact) {
    dense_ = read_block(reads_, b);
    block_norm_ = spectral_norm_gram(dense_);
    return;
  }
  const Index s_rows = std::min(b.rows(), std::max<Index>(sample_hint, 1));
  const Index s_cols = std::min(b.cols(), std::max<Index>(sample_hint, 1));
  sample_rows_ = initial_columns(b.rows(), s_rows, seed ^ 0x5ca1ab1eULL);
  sample_cols_ = initial_columns(b.cols(), s_cols, seed ^ 0x0ddba11ULL);
  std::sort(sample_rows_.begin(), sample_rows_.end());
  std::sort(sample_cols_.begin(), sample_cols_.end());
  SlabCache cache(reads_, b);
  row_sample_ = cache.rows(sample_rows_);
  col_sample_ = cache.cols(sample_cols_);
  row_norm_ = spectral_norm_power(row_sample_, 1e-8, 1000, seed).value;
  col_norm_ = spectral_norm_power(col_sample_, 1e-8, 1000, seed + 1).value;
  block_norm_ = std::max(row_norm_, col_norm_);
}

double BlockValidator::rel_error(const FactorPair& f) const {
  if (is_zero()) throw Error("relative error undefined");
  if (mode_ == Validator::exact) return spectral_norm_gram(dense_ - f.product()) / block_norm_;

  double worst = 0.0;
  if (row_norm_ > 0.0) {
    DenseMatrix e = row_sample_;
    if (f.rank() > 0) e -= gather_rows(f.left, sample_rows_) * f.right;
    worst = std::max(worst, spectral_norm_power(e, 1e-8, 1000, 7).value / row_norm_);
  }
  if (col_norm_ > 0.0) {
    DenseMatrix e = col_sample_;
    if (f.rank() > 0) {
      DenseMatrix right(f.rank(), static_cast<Index>(sample_cols_.size()));
      for (Index k = 0; k < right.cols(); ++k)
        right.col(k) = f.right.col(sample_cols_[static_cast<std::size_t>(k)]);
      e -= f.left * right;
    }
    worst = std::max(worst, spectral_norm_power(e, 1e-8, 1000, 11).value / col_norm_);
  }
  return worst;
}

RankProbeTrace search_rank(Index max_rank, double tol, const std::function<double(Index)>& probe) {
  if (max_rank < 1) throw Error("rank search: max_rank must be >= 1");
  RankProbeTrace trace;
  Index best_rank = 0;
  double best_err = std::numeric_limits<double>::infinity();
  double probe_err = 0.0;
  auto run = [&](Index r) {
    const double err = probe(r);
    probe_err = err;
    trace.probed.push_back(r);
    if (err < best_err) {
      best_err = err;
      best_rank = r;
    }
    return err <= tol;
  };

  Index lo = 0;  // largest rank known to fail
  Index hi = 0;  // smallest rank known to pass
  double lo_err = 0.0;
  for (Index r = 1;;) {
    const Index prev = lo;
    const double prev_err = lo_err;
    if (run(r)) {
      hi = r;
      break;
    }
    lo = r;
    lo_err = probe_err;
    if (r == max_rank) break;
    // Grow geometrically, but stop short of doubling when the error decay
    // seen so far says the tolerance is nearer: overshooting costs reads.
    Index next = 2 * r;
    if (prev > 0 && prev_err > 0.0 && lo_err > 0.0 && lo_err < prev_err) {
      const double per_rank = std::log(lo_err / prev_err) / static_cast<double>(r - prev);
      const double needed = std::log(tol / lo_err) / per_rank;
      next = std::min(next, r + std::max<Index>(1, static_cast<Index>(std::ceil(1.25 * needed))));
    }
    r = std::min(next, max_rank);
  }
  if (hi == 0) {
    trace.chosen = best_rank;
    trace.converged = false;
    return trace;
  }
  while (hi - lo > 1) {
    const Index mid = lo + (hi - lo) / 2;
    if (run(mid)) hi = mid;
    else lo = mid;
  }
  trace.chosen = hi;
  trace.converged = true;
  return trace;
}

RankSearchResult adaptive_rank_search(const EntryOracle& o, const BlockRange& b,
                                      const CaConfig& cfg, Validator validator) {
  cfg.validate();
  o.check(b);
  const Index max_rank = std::min({cfg.max_rank, b.rows(), b.cols()});
  BlockValidator check(o, b, validator, 2 * max_rank + 32, cfg.seed);

  RankSearchResult out;
  const std::uint64_t before = o.accesses();
  if (check.is_zero()) {
    out.cross.approx.factors = FactorPair::zero(b.rows(), b.cols());
    out.validation_accesses = check.accesses();
    return out;
  }

  SlabCache cache(o, b);
  std::map<Index, std::pair<CrossApproxResult, double>> probes;
  // Each probe starts from the previous probe's columns: they are cached
  // already and usually close to converged.
  std::vector<Index> warm;
  RankProbeTrace trace = search_rank(max_rank, cfg.rank_tol, [&](Index r) {
    CrossApproxResult res = cross_approximate(cache, r, cfg, true, warm);
    if (!res.pivots.col_ids.empty()) warm = res.pivots.col_ids;
    const double err = check.rel_error(res.approx.factors);
    probes.insert_or_assign(r, std::make_pair(std::move(res), err));
    return err;
  });

  auto& [chosen, err] = probes.at(trace.chosen);
  out.cross = std::move(chosen);
  out.rel_error = err;
  out.rank = out.cross.approx.factors.rank();
  out.converged = trace.converged;
  out.probed_ranks = std::move(trace.probed);
  out.entries_accessed = o.accesses() - before;
  out.cross.approx.entries_accessed = out.entries_accessed;
  out.cross.approx.rel_spectral_error = validator == Validator::exact ? std::optional(err) : std::nullopt;
  out.validation_accesses = check.accesses();
  return out;
}

std::uint64_t ca_access_budget(Index h, Index w, Index r, int loops) {
  const auto hh = static_cast<std::uint64_t>(h);
  const auto ww = static_cast<std::uint64_t>(w);
  const auto rr = static_cast<std::uint64_t>(r);
  return static_cast<std::uint64_t>(loops) * (2 * (hh + ww) * rr + 4 * rr * rr);
}

}  // namespace smm
