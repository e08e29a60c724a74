#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

namespace atrapos {

struct MatrixStats;
struct SpgemmResult;

// Compressed sparse column matrix of 64-bit instance counts.
//
// Storage invariants (checked by from_parts):
//  * offsets has cols + 1 entries, starts at 0, is non-decreasing and ends at
//    the nonzero count;
//  * row indices are strictly increasing within each column;
//  * no explicit zeros are stored.
class SparseMatrix {
 public:
  using Index = std::uint32_t;
  using Value = std::uint64_t;

  struct Triplet {
    Index row;
    Index col;
    Value value;
  };

  SparseMatrix() : offsets_(1, 0) {}
  // All-zero matrix of the given shape.
  SparseMatrix(std::size_t rows, std::size_t cols);

  static SparseMatrix from_parts(std::size_t rows, std::size_t cols,
                                 std::vector<std::size_t> offsets,
                                 std::vector<Index> row_indices,
                                 std::vector<Value> values);
  // Duplicate coordinates are summed; zero-valued triplets are dropped.
  static SparseMatrix from_triplets(std::size_t rows, std::size_t cols,
                                    std::vector<Triplet> triplets);
  // 0/1 pattern matrix; duplicate coordinates collapse to a single 1.
  static SparseMatrix from_pattern(
      std::size_t rows, std::size_t cols,
      std::vector<std::pair<Index, Index>> coordinates);
  static SparseMatrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t nonzeros() const { return values_.size(); }
  double density() const;
  MatrixStats stats() const;

  std::span<const std::size_t> col_offsets() const { return offsets_; }
  std::span<const Index> row_indices() const { return indices_; }
  std::span<const Value> values() const { return values_; }

  // Value at (row, col); 0 when not stored.
  Value at(std::size_t row, std::size_t col) const;

  SparseMatrix transpose() const;

  // Zero every row whose keep_rows entry is false and every column whose
  // keep_cols entry is false. An empty selector keeps that whole axis.
  SparseMatrix filter(const std::vector<bool>& keep_rows,
                      const std::vector<bool>& keep_cols) const;

  // Exact footprint of the compressed representation in bytes:
  // offsets plus one (index, value) pair per nonzero.
  std::size_t byte_size() const;

  // Little-endian: rows, cols, nonzero count (u64 each), offsets (u64),
  // row indices (u32), values (u64).
  void write(std::ostream& out) const;
  static SparseMatrix read(std::istream& in);

  friend bool operator==(const SparseMatrix&, const SparseMatrix&) = default;

 private:
  friend SpgemmResult spgemm(const SparseMatrix&, const SparseMatrix&);

  static SparseMatrix unchecked(std::size_t rows, std::size_t cols,
                                std::vector<std::size_t> offsets,
                                std::vector<Index> row_indices,
                                std::vector<Value> values);

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::size_t> offsets_;
  std::vector<Index> indices_;
  std::vector<Value> values_;
};

struct SpgemmResult {
  SparseMatrix product;
  // Scalar multiply-accumulate steps executed.
  std::uint64_t op_count = 0;
};

// Exact product x * y by column-wise (Gustavson) accumulation. Throws
// DimensionMismatch when x.cols() != y.rows() and OverflowError when an
// entry would exceed 2^64 - 1.
SpgemmResult spgemm(const SparseMatrix& x, const SparseMatrix& y);

}  // namespace atrapos
