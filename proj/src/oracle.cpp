#include "smm/oracle.hpp"

#include <span>

namespace smm {

std::string to_string(const BlockRange& b) {
  return "[" + std::to_string(b.row_start) + ":" + std::to_string(b.row_end) + ", " +
         std::to_string(b.col_start) + ":" + std::to_string(b.col_end) + ")";
}

EntryOracle::EntryOracle(Index rows, Index cols, EntryFn fn)
    : rows_(rows), cols_(cols), fn_(std::make_shared<const EntryFn>(std::move(fn))) {
  if (rows < 0 || cols < 0) throw Error("oracle: negative dimensions");
}

EntryOracle::EntryOracle(const EntryOracle& other)
    : rows_(other.rows_), cols_(other.cols_), fn_(other.fn_), counter_(other.accesses()) {}

EntryOracle& EntryOracle::operator=(const EntryOracle& other) {
  rows_ = other.rows_;
  cols_ = other.cols_;
  fn_ = other.fn_;
  counter_.store(other.accesses(), std::memory_order_relaxed);
  return *this;
}

Scalar EntryOracle::operator()(Index i, Index j) const {
  counter_.fetch_add(1, std::memory_order_relaxed);
  return (*fn_)(i, j);
}

EntryOracle EntryOracle::fork() const {
  EntryOracle copy(*this);
  copy.counter_.store(0, std::memory_order_relaxed);
  return copy;
}

void EntryOracle::check(const BlockRange& b) const {
  if (b.row_start < 0 || b.row_start >= b.row_end || b.row_end > rows_ || b.col_start < 0 ||
      b.col_start >= b.col_end || b.col_end > cols_)
    throw Error("block " + to_string(b) + " out of bounds for " + std::to_string(rows_) + "x" +
                std::to_string(cols_) + " oracle");
}

EntryOracle oracle_from_dense(DenseMatrix m) {
  require_finite(m);
  auto data = std::make_shared<const DenseMatrix>(std::move(m));
  const Index rows = data->rows();
  const Index cols = data->cols();
  return EntryOracle(rows, cols, [data](Index i, Index j) { return (*data)(i, j); });
}

DenseMatrix read_block(const EntryOracle& o, const BlockRange& b) {
  o.check(b);
  DenseMatrix out(b.rows(), b.cols());
  for (Index j = 0; j < b.cols(); ++j)
    for (Index i = 0; i < b.rows(); ++i) out(i, j) = o(b.row_start + i, b.col_start + j);
  return out;
}

DenseMatrix read_rows(const EntryOracle& o, const BlockRange& b, std::span<const Index> row_ids) {
  o.check(b);
  DenseMatrix out(static_cast<Index>(row_ids.size()), b.cols());
  for (Index k = 0; k < out.rows(); ++k) {
    const Index i = row_ids[static_cast<std::size_t>(k)];
    if (i < 0 || i >= b.rows()) throw Error("read_rows: row index out of block");
    for (Index j = 0; j < b.cols(); ++j) out(k, j) = o(b.row_start + i, b.col_start + j);
  }
  return out;
}

DenseMatrix read_cols(const EntryOracle& o, const BlockRange& b, std::span<const Index> col_ids) {
  o.check(b);
  DenseMatrix out(b.rows(), static_cast<Index>(col_ids.size()));
  for (Index k = 0; k < out.cols(); ++k) {
    const Index j = col_ids[static_cast<std::size_t>(k)];
    if (j < 0 || j >= b.cols()) throw Error("read_cols: column index out of block");
    for (Index i = 0; i < b.rows(); ++i) out(i, k) = o(b.row_start + i, b.col_start + j);
  }
  return out;
}

}  // namespace smm
