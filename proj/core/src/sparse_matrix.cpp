#include "atrapos/sparse_matrix.hpp"

#include <algorithm>
#include <istream>
#include <limits>
#include <ostream>
#include <string>

#include "atrapos/cost_model.hpp"
#include "atrapos/error.hpp"
#include "binary_io.hpp"

namespace atrapos {

using detail::get_u32;
using detail::get_u64;
using detail::put_u32;
using detail::put_u64;

namespace {

void check_index_range(std::size_t rows, std::size_t cols) {
  constexpr auto kMax = std::numeric_limits<SparseMatrix::Index>::max();
  if (rows > kMax || cols > kMax) {
    throw Error("matrix dimensions exceed 32-bit index range");
  }
}

}  // namespace

SparseMatrix::SparseMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), offsets_(cols + 1, 0) {
  check_index_range(rows, cols);
}

SparseMatrix SparseMatrix::from_parts(std::size_t rows, std::size_t cols,
                                      std::vector<std::size_t> offsets,
                                      std::vector<Index> row_indices,
                                      std::vector<Value> values) {
  check_index_range(rows, cols);
  if (offsets.size() != cols + 1 || offsets.front() != 0 ||
      offsets.back() != values.size() || row_indices.size() != values.size()) {
    throw Error("inconsistent compressed column layout");
  }
  for (std::size_t c = 0; c < cols; ++c) {
    if (offsets[c] > offsets[c + 1]) {
      throw Error("column offsets must be non-decreasing");
    }
    for (std::size_t k = offsets[c]; k < offsets[c + 1]; ++k) {
      if (row_indices[k] >= rows) throw Error("row index out of range");
      if (k > offsets[c] && row_indices[k] <= row_indices[k - 1]) {
        throw Error("row indices must be strictly increasing per column");
      }
      if (values[k] == 0) throw Error("explicit zero stored");
    }
  }
  return unchecked(rows, cols, std::move(offsets), std::move(row_indices),
                   std::move(values));
}

SparseMatrix SparseMatrix::unchecked(std::size_t rows, std::size_t cols,
                                     std::vector<std::size_t> offsets,
                                     std::vector<Index> row_indices,
                                     std::vector<Value> values) {
  SparseMatrix m;
  m.rows_ = rows;
  m.cols_ = cols;
  m.offsets_ = std::move(offsets);
  m.indices_ = std::move(row_indices);
  m.values_ = std::move(values);
  return m;
}

SparseMatrix SparseMatrix::from_triplets(std::size_t rows, std::size_t cols,
                                         std::vector<Triplet> triplets) {
  check_index_range(rows, cols);
  std::sort(triplets.begin(), triplets.end(),
            [](const Triplet& a, const Triplet& b) {
              return a.col != b.col ? a.col < b.col : a.row < b.row;
            });
  std::vector<std::size_t> offsets(cols + 1, 0);
  std::vector<Index> indices;
  std::vector<Value> values;
  for (std::size_t t = 0; t < triplets.size();) {
    const Triplet& head = triplets[t];
    if (head.row >= rows || head.col >= cols) {
      throw Error("triplet coordinate out of range");
    }
    Value sum = 0;
    for (; t < triplets.size() && triplets[t].row == head.row &&
           triplets[t].col == head.col;
         ++t) {
      if (__builtin_add_overflow(sum, triplets[t].value, &sum)) {
        throw OverflowError("instance count overflow while summing triplets");
      }
    }
    if (sum == 0) continue;
    indices.push_back(head.row);
    values.push_back(sum);
    ++offsets[head.col + 1];
  }
  for (std::size_t c = 0; c < cols; ++c) offsets[c + 1] += offsets[c];
  return unchecked(rows, cols, std::move(offsets), std::move(indices),
                   std::move(values));
}

SparseMatrix SparseMatrix::from_pattern(
    std::size_t rows, std::size_t cols,
    std::vector<std::pair<Index, Index>> coordinates) {
  check_index_range(rows, cols);
  std::sort(coordinates.begin(), coordinates.end(),
            [](const auto& a, const auto& b) {
              return a.second != b.second ? a.second < b.second
                                          : a.first < b.first;
            });
  coordinates.erase(std::unique(coordinates.begin(), coordinates.end()),
                    coordinates.end());
  std::vector<std::size_t> offsets(cols + 1, 0);
  std::vector<Index> indices;
  indices.reserve(coordinates.size());
  for (const auto& [r, c] : coordinates) {
    if (r >= rows || c >= cols) throw Error("coordinate out of range");
    ++offsets[c + 1];
    indices.push_back(r);
  }
  for (std::size_t c = 0; c < cols; ++c) offsets[c + 1] += offsets[c];
  std::vector<Value> values(indices.size(), 1);
  return unchecked(rows, cols, std::move(offsets), std::move(indices),
                   std::move(values));
}

SparseMatrix SparseMatrix::identity(std::size_t n) {
  std::vector<std::pair<Index, Index>> diag;
  diag.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    diag.emplace_back(static_cast<Index>(i), static_cast<Index>(i));
  }
  return from_pattern(n, n, std::move(diag));
}

double SparseMatrix::density() const {
  const double cells = static_cast<double>(rows_) * static_cast<double>(cols_);
  return cells == 0.0 ? 0.0 : static_cast<double>(nonzeros()) / cells;
}

MatrixStats SparseMatrix::stats() const {
  return MatrixStats{rows_, cols_, density()};
}

SparseMatrix::Value SparseMatrix::at(std::size_t row, std::size_t col) const {
  if (row >= rows_ || col >= cols_) throw Error("index out of range");
  const auto first = indices_.begin() + static_cast<std::ptrdiff_t>(offsets_[col]);
  const auto last = indices_.begin() + static_cast<std::ptrdiff_t>(offsets_[col + 1]);
  const auto it = std::lower_bound(first, last, static_cast<Index>(row));
  if (it == last || *it != row) return 0;
  return values_[static_cast<std::size_t>(it - indices_.begin())];
}

SparseMatrix SparseMatrix::transpose() const {
  std::vector<std::size_t> offsets(rows_ + 1, 0);
  for (Index r : indices_) ++offsets[r + 1];
  for (std::size_t r = 0; r < rows_; ++r) offsets[r + 1] += offsets[r];
  std::vector<Index> indices(nonzeros());
  std::vector<Value> values(nonzeros());
  std::vector<std::size_t> cursor(offsets.begin(), offsets.end() - 1);
  for (std::size_t c = 0; c < cols_; ++c) {
    for (std::size_t k = offsets_[c]; k < offsets_[c + 1]; ++k) {
      const std::size_t dst = cursor[indices_[k]]++;
      indices[dst] = static_cast<Index>(c);
      values[dst] = values_[k];
    }
  }
  return unchecked(cols_, rows_, std::move(offsets), std::move(indices),
                   std::move(values));
}

SparseMatrix SparseMatrix::filter(const std::vector<bool>& keep_rows,
                                  const std::vector<bool>& keep_cols) const {
  if ((!keep_rows.empty() && keep_rows.size() != rows_) ||
      (!keep_cols.empty() && keep_cols.size() != cols_)) {
    throw DimensionMismatch("selector length does not match matrix shape");
  }
  SparseMatrix out(rows_, cols_);
  out.indices_.reserve(nonzeros());
  out.values_.reserve(nonzeros());
  for (std::size_t c = 0; c < cols_; ++c) {
    if (keep_cols.empty() || keep_cols[c]) {
      for (std::size_t k = offsets_[c]; k < offsets_[c + 1]; ++k) {
        if (keep_rows.empty() || keep_rows[indices_[k]]) {
          out.indices_.push_back(indices_[k]);
          out.values_.push_back(values_[k]);
        }
      }
    }
    out.offsets_[c + 1] = out.indices_.size();
  }
  return out;
}

std::size_t SparseMatrix::byte_size() const {
  return offsets_.size() * sizeof(std::size_t) +
         nonzeros() * (sizeof(Index) + sizeof(Value));
}

void SparseMatrix::write(std::ostream& out) const {
  put_u64(out, rows_);
  put_u64(out, cols_);
  put_u64(out, nonzeros());
  for (std::size_t o : offsets_) put_u64(out, o);
  for (Index i : indices_) put_u32(out, i);
  for (Value v : values_) put_u64(out, v);
  if (!out) throw Error("failed to write sparse matrix");
}

SparseMatrix SparseMatrix::read(std::istream& in) {
  const std::uint64_t rows = get_u64(in);
  const std::uint64_t cols = get_u64(in);
  const std::uint64_t nnz = get_u64(in);
  check_index_range(rows, cols);
  std::vector<std::size_t> offsets(cols + 1);
  for (auto& o : offsets) o = get_u64(in);
  std::vector<Index> indices(nnz);
  for (auto& i : indices) i = get_u32(in);
  std::vector<Value> values(nnz);
  for (auto& v : values) v = get_u64(in);
  return from_parts(rows, cols, std::move(offsets), std::move(indices),
                    std::move(values));
}

SpgemmResult spgemm(const SparseMatrix& x, const SparseMatrix& y) {
  if (x.cols() != y.rows()) {
    throw DimensionMismatch("spgemm: " + std::to_string(x.rows()) + "x" +
                            std::to_string(x.cols()) + " times " +
                            std::to_string(y.rows()) + "x" +
                            std::to_string(y.cols()));
  }
  const auto x_off = x.col_offsets();
  const auto x_idx = x.row_indices();
  const auto x_val = x.values();
  const auto y_off = y.col_offsets();
  const auto y_idx = y.row_indices();
  const auto y_val = y.values();

  std::vector<std::size_t> offsets(y.cols() + 1, 0);
  std::vector<SparseMatrix::Index> indices;
  std::vector<SparseMatrix::Value> values;

  // Dense accumulator over result rows. Stored values are never zero, so a
  // zero slot means the row is untouched in the current column. Columns with
  // few candidate rows record touched rows and sort them; heavy columns skip
  // the bookkeeping and flush with one ordered sweep.
  const std::size_t rows = x.rows();
  std::uint64_t bound = 0;
  for (std::size_t ky = 0; ky < y.nonzeros(); ++ky) {
    bound += x_off[y_idx[ky] + 1] - x_off[y_idx[ky]];
  }
  bound = std::min<std::uint64_t>(bound, std::uint64_t{rows} * y.cols());
  indices.reserve(bound);
  values.reserve(bound);
  std::vector<SparseMatrix::Value> acc(rows, 0);
  std::vector<SparseMatrix::Index> touched;
  touched.reserve(rows);
  std::uint64_t ops = 0;
  bool overflow = false;

  for (std::size_t j = 0; j < y.cols(); ++j) {
    std::size_t col_ops = 0;
    for (std::size_t ky = y_off[j]; ky < y_off[j + 1]; ++ky) {
      col_ops += x_off[y_idx[ky] + 1] - x_off[y_idx[ky]];
    }
    ops += col_ops;
    const bool sweep = col_ops * 4 > rows;
    for (std::size_t ky = y_off[j]; ky < y_off[j + 1]; ++ky) {
      const std::size_t k = y_idx[ky];
      const SparseMatrix::Value b = y_val[ky];
      for (std::size_t kx = x_off[k]; kx < x_off[k + 1]; ++kx) {
        const SparseMatrix::Index i = x_idx[kx];
        SparseMatrix::Value prod = 0;
        overflow |= __builtin_mul_overflow(x_val[kx], b, &prod);
        if (!sweep && acc[i] == 0) touched.push_back(i);
        overflow |= __builtin_add_overflow(acc[i], prod, &acc[i]);
      }
    }
    if (overflow) throw OverflowError("spgemm: instance count exceeds 64 bits");
    if (sweep) {
      for (std::size_t i = 0; i < rows; ++i) {
        if (acc[i] == 0) continue;
        indices.push_back(static_cast<SparseMatrix::Index>(i));
        values.push_back(acc[i]);
        acc[i] = 0;
      }
    } else {
      std::sort(touched.begin(), touched.end());
      for (SparseMatrix::Index i : touched) {
        indices.push_back(i);
        values.push_back(acc[i]);
        acc[i] = 0;
      }
      touched.clear();
    }
    offsets[j + 1] = indices.size();
  }

  SpgemmResult result;
  result.op_count = ops;
  result.product = SparseMatrix::unchecked(x.rows(), y.cols(),
                                            std::move(offsets),
                                            std::move(indices),
                                            std::move(values));
  return result;
}

}  // namespace atrapos
