#pragma once

// HSS representation built from oracle access.
//
// The index set [0, n) is split recursively in halves down to leaf_size. Leaf
// diagonal blocks are stored densely. At every level each pair of siblings
// (a, b) contributes two off-diagonal blocks, rows(a) x cols(b) and
// rows(b) x cols(a); together these cover every off-block-diagonal entry
// exactly once. Each such block is stored as a generator pair F * H.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "smm/cross.hpp"
#include "smm/linalg.hpp"
#include "smm/oracle.hpp"
#include "smm/randomized.hpp"

namespace smm {

struct IndexRange {
  Index begin = 0;
  Index end = 0;
  Index size() const { return end - begin; }
  friend bool operator==(const IndexRange&, const IndexRange&) = default;
};

/// levels[0] = {[0, n)}; levels.back() are the leaves.
struct Partition {
  Index n = 0;
  Index leaf_size = 0;
  std::vector<std::vector<IndexRange>> levels;

  Index depth() const { return static_cast<Index>(levels.size()) - 1; }
  const std::vector<IndexRange>& leaves() const { return levels.back(); }
};

Partition partition_indices(Index n, Index leaf_size);

enum class HssMode { one_level, hierarchical };

/// Backend used for off-diagonal blocks.
enum class HssBackend { cross_approx, randomized, hybrid };

struct HssBuildOptions {
  Index leaf_size = 512;
  HssMode mode = HssMode::one_level;
  HssBackend backend = HssBackend::cross_approx;
  Multiplier multiplier = Multiplier::gaussian;  // randomized blocks
  Index hybrid_threshold = 128;
  Index oversampling = 10;
  CaConfig ca;
  // C-A loops used while searching for each block's rank; 0 means ca.loops.
  // The stored generator is recomputed at the found rank with ca.loops.
  int search_loops = 0;
  Validator validator = Validator::exact;
};

struct OffDiagonalBlock {
  BlockRange range;
  Index level = 1;
  FactorPair factors;
  LraBackend backend = LraBackend::cross_approx;
  Index rank() const { return factors.rank(); }

  // Build statistics (not serialized).
  double rel_error = 0.0;  // block-relative, as seen by the validator
  bool converged = true;
  Index probes = 0;
  int search_loops = 0;
  std::uint64_t entries_accessed = 0;
  std::uint64_t validation_accesses = 0;
};

/// Superfast access budget for one block: probes * loops * (2(h + w) r + 4 r^2).
std::uint64_t block_access_budget(const OffDiagonalBlock& b);

class HssTree {
 public:
  HssTree() = default;
  HssTree(Partition partition, HssMode mode, std::vector<DenseMatrix> leaves,
          std::vector<OffDiagonalBlock> blocks);

  Index n() const { return partition_.n; }
  HssMode mode() const { return mode_; }
  const Partition& partition() const { return partition_; }
  const std::vector<DenseMatrix>& leaves() const { return leaves_; }
  const std::vector<OffDiagonalBlock>& blocks() const { return blocks_; }

  std::uint64_t diagonal_accesses = 0;
  std::uint64_t offdiagonal_accesses() const;
  std::uint64_t total_accesses() const { return diagonal_accesses + offdiagonal_accesses(); }
  std::uint64_t stored_diagonal_entries() const;

 private:
  Partition partition_;
  HssMode mode_ = HssMode::one_level;
  std::vector<DenseMatrix> leaves_;
  std::vector<OffDiagonalBlock> blocks_;  // level by level, sibling pairs upper then lower
};

/// Builds the tree from a square oracle. With `rank_source`, every block
/// reuses the rank stored in the matching block of that tree and no rank
/// search is run.
HssTree build_hss(const EntryOracle& o, const HssBuildOptions& opt,
                  const HssTree* rank_source = nullptr);

struct MatvecResult {
  Vector y;
  std::uint64_t flops = 0;
  std::uint64_t leaf_flops = 0;
  std::uint64_t generator_flops = 0;
};

MatvecResult hss_matvec(const HssTree& h, const Vector& v);

DenseMatrix hss_to_dense(const HssTree& h);

/// Largest rank among the level-1 off-diagonal blocks.
Index hss_rank(const HssTree& h);

struct NeuteredRankCheck {
  Index rank_neutered = 0;
  Index rank_lower = 0;  // below the diagonal block
  Index rank_upper = 0;  // above the diagonal block
  bool holds = true;
};

/// Numerical ranks (relative tolerance `tol`) of the neutered block column
/// over columns [col_begin, col_end) with the diagonal block on the same rows,
/// and of its parts above and below that block.
NeuteredRankCheck neutered_rank_inequality_check(const EntryOracle& o, Index col_begin,
                                                 Index col_end, double tol = 1e-8);

/// Exact relative reconstruction errors of `h` against `source`.
struct ReconstructionError {
  double spectral = 0.0;
  double chebyshev = 0.0;
};
ReconstructionError reconstruction_error(const DenseMatrix& source, const HssTree& h,
                                         double source_spectral_norm = 0.0);

/// "HSS1" container: little-endian u64 header fields and complex128 payloads.
void write_hss(const HssTree& h, std::ostream& out);
HssTree read_hss(std::istream& in);
void save_hss(const HssTree& h, const std::filesystem::path& path);
HssTree load_hss(const std::filesystem::path& path);

}  // namespace smm
