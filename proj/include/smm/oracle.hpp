#pragma once

// Lazy entry access with exact access accounting.
//
// Every superfast algorithm in this library reads its input only through an
// EntryOracle. The counter is the ground truth for "how much of the matrix did
// we look at": it increments once per entry evaluation and is never reset by
// the algorithms themselves.

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>

#include "smm/linalg.hpp"

namespace smm {

/// Half-open block [row_start, row_end) x [col_start, col_end).
struct BlockRange {
  Index row_start = 0;
  Index row_end = 0;
  Index col_start = 0;
  Index col_end = 0;

  Index rows() const { return row_end - row_start; }
  Index cols() const { return col_end - col_start; }
  Index area() const { return rows() * cols(); }

  friend bool operator==(const BlockRange&, const BlockRange&) = default;
};

std::string to_string(const BlockRange& b);

class EntryOracle {
 public:
  using EntryFn = std::function<Scalar(Index, Index)>;

  EntryOracle(Index rows, Index cols, EntryFn fn);
  EntryOracle(const EntryOracle& other);
  EntryOracle& operator=(const EntryOracle& other);

  Index rows() const { return rows_; }
  Index cols() const { return cols_; }

  /// Evaluates entry (i, j) and counts the access.
  Scalar operator()(Index i, Index j) const;

  std::uint64_t accesses() const { return counter_.load(std::memory_order_relaxed); }

  /// Same entries, fresh counter. Used for validation reads that must not be
  /// charged to the algorithm under test.
  EntryOracle fork() const;

  /// Throws unless `b` lies inside the oracle with nonempty extent.
  void check(const BlockRange& b) const;

  BlockRange full_range() const { return {0, rows_, 0, cols_}; }

 private:
  Index rows_;
  Index cols_;
  std::shared_ptr<const EntryFn> fn_;
  mutable std::atomic<std::uint64_t> counter_{0};
};

/// Oracle over a copy of `m`; the counter starts at zero.
EntryOracle oracle_from_dense(DenseMatrix m);

/// Materializes block `b`. Charges b.area() accesses.
DenseMatrix read_block(const EntryOracle& o, const BlockRange& b);

/// Rows `row_ids` (block-relative) across the full width of `b`.
DenseMatrix read_rows(const EntryOracle& o, const BlockRange& b, std::span<const Index> row_ids);

/// Columns `col_ids` (block-relative) across the full height of `b`.
DenseMatrix read_cols(const EntryOracle& o, const BlockRange& b, std::span<const Index> col_ids);

}  // namespace smm
