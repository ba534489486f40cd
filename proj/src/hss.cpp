#include "smm/hss.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>

#include "smm/byteio.hpp"

namespace smm {

Partition partition_indices(Index n, Index leaf_size) {
  auto pow2 = [](Index v) { return v >= 1 && std::has_single_bit(static_cast<std::uint64_t>(v)); };
  if (!pow2(n) || !pow2(leaf_size))
    throw Error("partition: n and leaf_size must be powers of two");
  if (n < 2 * leaf_size)
    throw Error("partition: n must be at least 2 * leaf_size (no off-diagonal structure)");
  Partition p;
  p.n = n;
  p.leaf_size = leaf_size;
  p.levels.push_back({{0, n}});
  while (p.levels.back().front().size() > leaf_size) {
    std::vector<IndexRange> next;
    for (const IndexRange& r : p.levels.back()) {
      const Index mid = r.begin + r.size() / 2;
      next.push_back({r.begin, mid});
      next.push_back({mid, r.end});
    }
    p.levels.push_back(std::move(next));
  }
  return p;
}

std::uint64_t block_access_budget(const OffDiagonalBlock& b) {
  const auto probes = static_cast<std::uint64_t>(std::max<Index>(b.probes, 1));
  return probes * ca_access_budget(b.range.rows(), b.range.cols(), b.rank(), std::max(b.search_loops, 1));
}

HssTree::HssTree(Partition partition, HssMode mode, std::vector<DenseMatrix> leaves,
                 std::vector<OffDiagonalBlock> blocks)
    : partition_(std::move(partition)), mode_(mode), leaves_(std::move(leaves)), blocks_(std::move(blocks)) {
  if (static_cast<Index>(leaves_.size()) != static_cast<Index>(partition_.leaves().size()))
    throw Error("hss: leaf count does not match partition");
  for (std::size_t k = 0; k < leaves_.size(); ++k) {
    const Index s = partition_.leaves()[k].size();
    if (leaves_[k].rows() != s || leaves_[k].cols() != s) throw Error("hss: leaf block has wrong size");
  }
  for (const OffDiagonalBlock& b : blocks_) {
    if (b.factors.rows() != b.range.rows() || b.factors.cols() != b.range.cols())
      throw Error("hss: generator shape does not match block " + to_string(b.range));
  }
}

std::uint64_t HssTree::offdiagonal_accesses() const {
  std::uint64_t total = 0;
  for (const OffDiagonalBlock& b : blocks_) total += b.entries_accessed;
  return total;
}

std::uint64_t HssTree::stored_diagonal_entries() const {
  std::uint64_t total = 0;
  for (const DenseMatrix& d : leaves_) total += static_cast<std::uint64_t>(d.size());
  return total;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::vector<std::pair<BlockRange, Index>> offdiagonal_layout(const Partition& p) {
  std::vector<std::pair<BlockRange, Index>> out;
  for (Index level = 1; level <= p.depth(); ++level) {
    const auto& ranges = p.levels[static_cast<std::size_t>(level)];
    for (std::size_t k = 0; k + 1 < ranges.size(); k += 2) {
      const IndexRange a = ranges[k];
      const IndexRange b = ranges[k + 1];
      out.push_back({{a.begin, a.end, b.begin, b.end}, level});
      out.push_back({{b.begin, b.end, a.begin, a.end}, level});
    }
  }
  return out;
}

OffDiagonalBlock approximate_cross(const EntryOracle& o, const BlockRange& range,
                                   const HssBuildOptions& opt, const CaConfig& cfg,
                                   const OffDiagonalBlock* fixed) {
  OffDiagonalBlock out;
  out.range = range;
  out.backend = LraBackend::cross_approx;
  const std::uint64_t before = o.accesses();

  if (fixed) {
    out.probes = 1;
    out.search_loops = cfg.loops;
    BlockValidator check(o, range, opt.validator, 2 * fixed->rank() + 32, cfg.seed);
    if (fixed->rank() == 0 || check.is_zero()) {
      out.factors = FactorPair::zero(range.rows(), range.cols());
    } else {
      SlabCache cache(o, range);
      CrossApproxResult res = cross_approximate(cache, fixed->rank(), cfg, true);
      out.factors = std::move(res.approx.factors);
      out.rel_error = check.rel_error(out.factors);
      out.converged = out.rel_error <= cfg.rank_tol;
    }
    out.validation_accesses = check.accesses();
    out.entries_accessed = o.accesses() - before;
    return out;
  }

  CaConfig search = cfg;
  search.loops = opt.search_loops > 0 ? opt.search_loops : cfg.loops;
  RankSearchResult found = adaptive_rank_search(o, range, search, opt.validator);
  out.probes = static_cast<Index>(found.probed_ranks.size());
  out.search_loops = search.loops;
  out.converged = found.converged;
  out.rel_error = found.rel_error;
  out.validation_accesses = found.validation_accesses;
  out.factors = std::move(found.cross.approx.factors);
  if (search.loops != cfg.loops && out.rank() > 0) {
    // Same rank, final generator from the requested loop count.
    SlabCache cache(o, range);
    BlockValidator check(o, range, opt.validator, 2 * out.rank() + 32, cfg.seed);
    CrossApproxResult res = cross_approximate(cache, out.rank(), cfg, true);
    out.factors = std::move(res.approx.factors);
    out.rel_error = check.rel_error(out.factors);
    out.validation_accesses += check.accesses();
    ++out.probes;
  }
  out.entries_accessed = o.accesses() - before;
  return out;
}

OffDiagonalBlock approximate_randomized(const EntryOracle& o, const BlockRange& range,
                                        const HssBuildOptions& opt, const CaConfig& cfg,
                                        const OffDiagonalBlock* fixed) {
  OffDiagonalBlock out;
  out.range = range;
  out.backend = LraBackend::randomized;
  out.search_loops = 1;
  const std::uint64_t before = o.accesses();
  const DenseMatrix dense = read_block(o, range);
  BlockValidator check(o, range, opt.validator, 2 * cfg.max_rank + 32, cfg.seed);

  const Index cap = std::min(range.rows(), range.cols());
  std::map<Index, FactorPair> probes;
  auto probe = [&](Index r) {
    SketchConfig sk;
    sk.target_rank = r;
    sk.oversampling = std::min(opt.oversampling, cap - r);
    sk.multiplier = opt.multiplier;
    sk.seed = cfg.seed;
    FactorPair f = randomized_range_lra(dense, sk).approx.factors;
    const double err = check.rel_error(f);
    probes.insert_or_assign(r, std::move(f));
    return err;
  };

  if (check.is_zero() || (fixed && fixed->rank() == 0)) {
    out.factors = FactorPair::zero(range.rows(), range.cols());
    out.probes = 1;
  } else if (fixed) {
    out.rel_error = probe(std::min(fixed->rank(), cap));
    out.factors = std::move(probes.begin()->second);
    out.converged = out.rel_error <= cfg.rank_tol;
    out.probes = 1;
  } else {
    const Index max_rank = std::min(cfg.max_rank, cap);
    std::map<Index, double> errors;
    RankProbeTrace trace = search_rank(max_rank, cfg.rank_tol, [&](Index r) {
      const double e = probe(r);
      errors[r] = e;
      return e;
    });
    out.factors = std::move(probes.at(trace.chosen));
    out.rel_error = errors.at(trace.chosen);
    out.converged = trace.converged;
    out.probes = static_cast<Index>(trace.probed.size());
  }
  out.validation_accesses = check.accesses();
  out.entries_accessed = o.accesses() - before;
  return out;
}

}  // namespace

HssTree build_hss(const EntryOracle& o, const HssBuildOptions& opt, const HssTree* rank_source) {
  if (o.rows() != o.cols()) throw Error("build_hss: oracle must be square");
  opt.ca.validate();
  const Index n = o.rows();
  const Index leaf = opt.mode == HssMode::one_level ? n / 2 : opt.leaf_size;
  Partition part = partition_indices(n, leaf);

  const auto layout = offdiagonal_layout(part);
  if (rank_source && rank_source->blocks().size() != layout.size())
    throw Error("build_hss: rank source has a different block layout");

  std::vector<DenseMatrix> leaves;
  const std::uint64_t before = o.accesses();
  for (const IndexRange& r : part.leaves()) leaves.push_back(read_block(o, {r.begin, r.end, r.begin, r.end}));
  const std::uint64_t diag = o.accesses() - before;

  std::vector<OffDiagonalBlock> blocks;
  for (std::size_t k = 0; k < layout.size(); ++k) {
    const auto& [range, level] = layout[k];
    CaConfig cfg = opt.ca;
    cfg.seed = splitmix64(opt.ca.seed * 0x100000001b3ULL + k);
    const OffDiagonalBlock* fixed = rank_source ? &rank_source->blocks()[k] : nullptr;
    if (fixed && !(fixed->range == range)) throw Error("build_hss: rank source block mismatch");

    LraBackend which = LraBackend::cross_approx;
    if (opt.backend == HssBackend::randomized) which = LraBackend::randomized;
    else if (opt.backend == HssBackend::hybrid)
      which = hybrid_backend_select(range.rows(), range.cols(), opt.hybrid_threshold);

    try {
      OffDiagonalBlock b = which == LraBackend::cross_approx
                               ? approximate_cross(o, range, opt, cfg, fixed)
                               : approximate_randomized(o, range, opt, cfg, fixed);
      b.level = level;
      blocks.push_back(std::move(b));
    } catch (const Error& e) {
      throw Error("block " + to_string(range) + " (level " + std::to_string(level) + "): " + e.what());
    }
  }

  HssTree tree(std::move(part), opt.mode, std::move(leaves), std::move(blocks));
  tree.diagonal_accesses = diag;
  return tree;
}

MatvecResult hss_matvec(const HssTree& h, const Vector& v) {
  if (v.size() != h.n()) throw Error("hss_matvec: vector length mismatch");
  MatvecResult out;
  out.y = Vector::Zero(h.n());
  const auto& leaves = h.partition().leaves();
  for (std::size_t k = 0; k < leaves.size(); ++k) {
    const IndexRange r = leaves[k];
    out.y.segment(r.begin, r.size()).noalias() += h.leaves()[k] * v.segment(r.begin, r.size());
    const auto s = static_cast<std::uint64_t>(r.size());
    out.leaf_flops += s * (2 * s - 1);
  }
  for (const OffDiagonalBlock& b : h.blocks()) {
    const Index r = b.rank();
    if (r == 0) continue;
    const Vector t = b.factors.right * v.segment(b.range.col_start, b.range.cols());
    out.y.segment(b.range.row_start, b.range.rows()).noalias() += b.factors.left * t;
    const auto hh = static_cast<std::uint64_t>(b.range.rows());
    const auto ww = static_cast<std::uint64_t>(b.range.cols());
    const auto rr = static_cast<std::uint64_t>(r);
    // H x, then F (H x), then accumulate into y.
    out.generator_flops += rr * (2 * ww - 1) + hh * (2 * rr - 1) + hh;
  }
  out.flops = out.leaf_flops + out.generator_flops;
  return out;
}

DenseMatrix hss_to_dense(const HssTree& h) {
  DenseMatrix m = DenseMatrix::Zero(h.n(), h.n());
  const auto& leaves = h.partition().leaves();
  for (std::size_t k = 0; k < leaves.size(); ++k)
    m.block(leaves[k].begin, leaves[k].begin, leaves[k].size(), leaves[k].size()) = h.leaves()[k];
  for (const OffDiagonalBlock& b : h.blocks())
    m.block(b.range.row_start, b.range.col_start, b.range.rows(), b.range.cols()) = b.factors.product();
  return m;
}

Index hss_rank(const HssTree& h) {
  Index r = 0;
  bool seen = false;
  for (const OffDiagonalBlock& b : h.blocks())
    if (b.level == 1) {
      r = std::max(r, b.rank());
      seen = true;
    }
  if (!seen) throw Error("hss_rank: no level-1 generators");
  return r;
}

NeuteredRankCheck neutered_rank_inequality_check(const EntryOracle& o, Index col_begin,
                                                 Index col_end, double tol) {
  const Index n = o.rows();
  if (o.rows() != o.cols()) throw Error("neutered column check: square oracle required");
  if (col_begin < 0 || col_begin >= col_end || col_end > n || (col_begin == 0 && col_end == n))
    throw Error("neutered column check: diagonal block must be a proper interior range");

  const EntryOracle reads = o.fork();
  const Index width = col_end - col_begin;
  DenseMatrix upper = col_begin > 0 ? read_block(reads, {0, col_begin, col_begin, col_end}) : DenseMatrix(0, width);
  DenseMatrix lower = col_end < n ? read_block(reads, {col_end, n, col_begin, col_end}) : DenseMatrix(0, width);
  DenseMatrix neutered(upper.rows() + lower.rows(), width);
  neutered << upper, lower;

  NeuteredRankCheck out;
  out.rank_upper = numerical_rank(upper, tol);
  out.rank_lower = numerical_rank(lower, tol);
  out.rank_neutered = numerical_rank(neutered, tol);
  out.holds = out.rank_neutered <= out.rank_lower + out.rank_upper;
  return out;
}

ReconstructionError reconstruction_error(const DenseMatrix& source, const HssTree& h,
                                         double source_spectral_norm) {
  if (source.rows() != h.n() || source.cols() != h.n()) throw Error("reconstruction error: size mismatch");
  const double src_norm = source_spectral_norm > 0.0 ? source_spectral_norm : spectral_norm_gram(source);
  const double src_cheb = chebyshev_norm(source);
  if (!(src_norm > 0.0)) throw Error("relative error undefined");

  ReconstructionError out;
  if (h.partition().depth() == 1) {
    // Error is [[0, E12], [E21, 0]]: its singular values are those of E12 and E21.
    double spec = 0.0, cheb = 0.0;
    for (const OffDiagonalBlock& b : h.blocks()) {
      const DenseMatrix e = source.block(b.range.row_start, b.range.col_start, b.range.rows(), b.range.cols()) -
                            b.factors.product();
      spec = std::max(spec, spectral_norm_gram(e));
      cheb = std::max(cheb, chebyshev_norm(e));
    }
    // Leaves are exact copies of the source.
    out.spectral = spec / src_norm;
    out.chebyshev = cheb / src_cheb;
    return out;
  }
  const DenseMatrix e = source - hss_to_dense(h);
  out.spectral = spectral_norm_gram(e) / src_norm;
  out.chebyshev = chebyshev_norm(e) / src_cheb;
  return out;
}

namespace {

constexpr char kMagic[4] = {'H', 'S', 'S', '1'};

void write_dense(byteio::Writer& w, const DenseMatrix& m) {
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) w.complex(m(i, j));
}

DenseMatrix read_dense(byteio::Reader& r, Index rows, Index cols) {
  DenseMatrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = r.complex();
  return m;
}

}  // namespace

void write_hss(const HssTree& h, std::ostream& out) {
  byteio::Writer w(out);
  w.bytes(kMagic, 4);
  w.u64(static_cast<std::uint64_t>(h.n()));
  w.u64(static_cast<std::uint64_t>(h.partition().leaf_size));
  w.u64(h.mode() == HssMode::one_level ? 0 : 1);
  w.u64(h.leaves().size());
  w.u64(h.blocks().size());
  for (const DenseMatrix& d : h.leaves()) write_dense(w, d);
  for (const OffDiagonalBlock& b : h.blocks()) {
    w.u64(static_cast<std::uint64_t>(b.range.row_start));
    w.u64(static_cast<std::uint64_t>(b.range.row_end));
    w.u64(static_cast<std::uint64_t>(b.range.col_start));
    w.u64(static_cast<std::uint64_t>(b.range.col_end));
    w.u64(static_cast<std::uint64_t>(b.level));
    w.u64(b.backend == LraBackend::cross_approx ? 0 : 1);
    w.u64(static_cast<std::uint64_t>(b.rank()));
    write_dense(w, b.factors.left);
    write_dense(w, b.factors.right);
  }
  if (!out) throw Error("hss: write failed");
}

HssTree read_hss(std::istream& in) {
  byteio::Reader r(in);
  char magic[4];
  r.bytes(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) throw Error("hss: bad magic (expected HSS1)");
  const auto n = static_cast<Index>(r.u64());
  const auto leaf = static_cast<Index>(r.u64());
  const std::uint64_t mode = r.u64();
  if (mode > 1) throw Error("hss: unknown mode tag");
  Partition part = partition_indices(n, leaf);
  const std::uint64_t leaf_count = r.u64();
  const std::uint64_t block_count = r.u64();
  if (leaf_count != part.leaves().size()) throw Error("hss: leaf count does not match tree shape");
  if (block_count != 2 * (part.leaves().size() - 1)) throw Error("hss: block count does not match tree shape");

  std::vector<DenseMatrix> leaves;
  for (const IndexRange& range : part.leaves()) leaves.push_back(read_dense(r, range.size(), range.size()));
  const auto layout = offdiagonal_layout(part);
  std::vector<OffDiagonalBlock> blocks;
  for (std::size_t k = 0; k < block_count; ++k) {
    OffDiagonalBlock b;
    b.range.row_start = static_cast<Index>(r.u64());
    b.range.row_end = static_cast<Index>(r.u64());
    b.range.col_start = static_cast<Index>(r.u64());
    b.range.col_end = static_cast<Index>(r.u64());
    b.level = static_cast<Index>(r.u64());
    if (!(b.range == layout[k].first) || b.level != layout[k].second)
      throw Error("hss: block " + std::to_string(k) + " does not match tree shape");
    b.backend = r.u64() == 0 ? LraBackend::cross_approx : LraBackend::randomized;
    const auto rank = static_cast<Index>(r.u64());
    if (rank > std::min(b.range.rows(), b.range.cols())) throw Error("hss: generator rank out of range");
    DenseMatrix left = read_dense(r, b.range.rows(), rank);
    DenseMatrix right = read_dense(r, rank, b.range.cols());
    b.factors = FactorPair(std::move(left), std::move(right));
    blocks.push_back(std::move(b));
  }
  return HssTree(std::move(part), mode == 0 ? HssMode::one_level : HssMode::hierarchical,
                 std::move(leaves), std::move(blocks));
}

void save_hss(const HssTree& h, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  write_hss(h, out);
}

HssTree load_hss(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  return read_hss(in);
}

}  // namespace smm
