#pragma once

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "gcnpart/error.hpp"

namespace gcnpart {

/// Row-major dense matrix of doubles.
class DenseMatrix {
 public:
  DenseMatrix() = default;

  DenseMatrix(Index rows, Index cols, Real fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  DenseMatrix(Index rows, Index cols, std::vector<Real> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    detail::require(data_.size() == rows_ * cols_, "sparse_core",
                    "dense data length does not match shape");
  }

  static DenseMatrix identity(Index n) {
    DenseMatrix m(n, n);
    for (Index i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  static DenseMatrix from_rows(std::initializer_list<std::initializer_list<Real>> rows) {
    const Index r = rows.size();
    const Index c = r == 0 ? 0 : rows.begin()->size();
    DenseMatrix m(r, c);
    Index i = 0;
    for (const auto& row : rows) {
      detail::require(row.size() == c, "sparse_core", "ragged initializer");
      std::copy(row.begin(), row.end(), m.row(i++).begin());
    }
    return m;
  }

  Index rows() const noexcept { return rows_; }
  Index cols() const noexcept { return cols_; }

  Real operator()(Index r, Index c) const { return data_[r * cols_ + c]; }
  Real& operator()(Index r, Index c) { return data_[r * cols_ + c]; }

  std::span<const Real> row(Index r) const { return {data_.data() + r * cols_, cols_}; }
  std::span<Real> row(Index r) { return {data_.data() + r * cols_, cols_}; }

  std::span<const Real> data() const noexcept { return data_; }
  std::span<Real> data() noexcept { return data_; }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](Real v) { return std::isfinite(v); });
  }

  bool operator==(const DenseMatrix&) const = default;

 private:
  Index rows_ = 0;
  Index cols_ = 0;
  std::vector<Real> data_;
};

struct Triplet {
  Index row;
  Index col;
  Real value;
};

/// CSR matrix. Column indices are strictly increasing within a row and no
/// explicit zeros are stored.
class SparseMatrix {
 public:
  SparseMatrix() : row_offsets_(1, 0) {}

  SparseMatrix(Index rows, Index cols, std::vector<Index> row_offsets,
               std::vector<Index> col_indices, std::vector<Real> values)
      : rows_(rows),
        cols_(cols),
        row_offsets_(std::move(row_offsets)),
        col_indices_(std::move(col_indices)),
        values_(std::move(values)) {
    validate();
  }

  /// Duplicates are summed; entries that sum to zero are dropped.
  static SparseMatrix from_triplets(Index rows, Index cols, std::vector<Triplet> entries) {
    for (const auto& t : entries) {
      detail::require(t.row < rows && t.col < cols, "sparse_core",
                      "triplet (" + std::to_string(t.row) + "," + std::to_string(t.col) +
                          ") outside " + std::to_string(rows) + "x" + std::to_string(cols));
    }
    std::stable_sort(entries.begin(), entries.end(), [](const Triplet& a, const Triplet& b) {
      return a.row != b.row ? a.row < b.row : a.col < b.col;
    });
    std::vector<Index> offsets(rows + 1, 0);
    std::vector<Index> cols_out;
    std::vector<Real> vals_out;
    cols_out.reserve(entries.size());
    vals_out.reserve(entries.size());
    for (Index k = 0; k < entries.size();) {
      Index end = k;
      Real sum = 0.0;
      while (end < entries.size() && entries[end].row == entries[k].row &&
             entries[end].col == entries[k].col) {
        sum += entries[end].value;
        ++end;
      }
      if (sum != 0.0) {
        cols_out.push_back(entries[k].col);
        vals_out.push_back(sum);
        ++offsets[entries[k].row + 1];
      }
      k = end;
    }
    for (Index r = 0; r < rows; ++r) offsets[r + 1] += offsets[r];
    return SparseMatrix(rows, cols, std::move(offsets), std::move(cols_out), std::move(vals_out));
  }

  static SparseMatrix identity(Index n) {
    std::vector<Index> offsets(n + 1), cols(n);
    for (Index i = 0; i <= n; ++i) offsets[i] = i;
    for (Index i = 0; i < n; ++i) cols[i] = i;
    return SparseMatrix(n, n, std::move(offsets), std::move(cols), std::vector<Real>(n, 1.0));
  }

  static SparseMatrix zeros(Index rows, Index cols) {
    return SparseMatrix(rows, cols, std::vector<Index>(rows + 1, 0), {}, {});
  }

  Index rows() const noexcept { return rows_; }
  Index cols() const noexcept { return cols_; }
  Index nnz() const noexcept { return col_indices_.size(); }
  bool is_square() const noexcept { return rows_ == cols_; }

  std::span<const Index> row_offsets() const noexcept { return row_offsets_; }
  std::span<const Index> col_indices() const noexcept { return col_indices_; }
  std::span<const Real> values() const noexcept { return values_; }

  std::span<const Index> row_cols(Index r) const {
    return {col_indices_.data() + row_offsets_[r], row_offsets_[r + 1] - row_offsets_[r]};
  }
  std::span<const Real> row_values(Index r) const {
    return {values_.data() + row_offsets_[r], row_offsets_[r + 1] - row_offsets_[r]};
  }
  Index row_nnz(Index r) const { return row_offsets_[r + 1] - row_offsets_[r]; }

  /// Stored value at (r, c), zero when absent.
  Real at(Index r, Index c) const {
    const auto cols = row_cols(r);
    const auto it = std::lower_bound(cols.begin(), cols.end(), c);
    if (it == cols.end() || *it != c) return 0.0;
    return values_[row_offsets_[r] + static_cast<Index>(it - cols.begin())];
  }

  bool contains(Index r, Index c) const {
    const auto cols = row_cols(r);
    return std::binary_search(cols.begin(), cols.end(), c);
  }

  bool has_full_diagonal() const {
    if (!is_square()) return false;
    for (Index i = 0; i < rows_; ++i) {
      if (!contains(i, i)) return false;
    }
    return true;
  }

  bool operator==(const SparseMatrix&) const = default;

 private:
  void validate() const {
    constexpr const char* mod = "sparse_core";
    detail::require(row_offsets_.size() == rows_ + 1, mod, "row_offsets length must be rows+1");
    detail::require(row_offsets_.front() == 0, mod, "row_offsets must start at 0");
    detail::require(row_offsets_.back() == col_indices_.size(), mod,
                    "last row offset must equal nnz");
    detail::require(values_.size() == col_indices_.size(), mod, "values length must equal nnz");
    for (Index r = 0; r < rows_; ++r) {
      detail::require(row_offsets_[r] <= row_offsets_[r + 1], mod, "row_offsets must be non-decreasing");
      for (Index k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k) {
        detail::require(col_indices_[k] < cols_, mod, "column index out of range");
        detail::require(k == row_offsets_[r] || col_indices_[k - 1] < col_indices_[k], mod,
                        "column indices must be strictly increasing within a row");
        detail::require(values_[k] != 0.0, mod, "explicit zero stored");
      }
    }
  }

  Index rows_ = 0;
  Index cols_ = 0;
  std::vector<Index> row_offsets_;
  std::vector<Index> col_indices_;
  std::vector<Real> values_;
};

/// Rows of a distributed matrix owned by one processor, full column width.
template <class Matrix>
struct RowBlock {
  std::vector<Index> global_row_ids;
  Matrix local;

  RowBlock() = default;
  RowBlock(std::vector<Index> ids, Matrix m) : global_row_ids(std::move(ids)), local(std::move(m)) {
    detail::require(global_row_ids.size() == local.rows(), "sparse_core",
                    "row block id count does not match local rows");
    for (Index i = 1; i < global_row_ids.size(); ++i) {
      detail::require(global_row_ids[i - 1] < global_row_ids[i], "sparse_core",
                      "row block ids must be strictly increasing");
    }
  }

  /// Local row of a global id, or size() when not owned.
  Index local_index(Index global_id) const {
    const auto it = std::lower_bound(global_row_ids.begin(), global_row_ids.end(), global_id);
    if (it == global_row_ids.end() || *it != global_id) return global_row_ids.size();
    return static_cast<Index>(it - global_row_ids.begin());
  }

  Index size() const noexcept { return global_row_ids.size(); }
};

using DenseRowBlock = RowBlock<DenseMatrix>;
using SparseRowBlock = RowBlock<SparseMatrix>;

// ---------------------------------------------------------------------------
// Kernels. Every dot product accumulates in ascending index order.
// ---------------------------------------------------------------------------

/// D^{-1/2} (A + I) D^{-1/2} with D(i,i) the row sum of A + I.
inline SparseMatrix normalize_adjacency(const SparseMatrix& a, bool add_self_loops = true) {
  detail::require(a.is_square(), "sparse_core", "normalize_adjacency needs a square matrix");
  const Index n = a.rows();
  std::vector<Triplet> entries;
  entries.reserve(a.nnz() + (add_self_loops ? n : 0));
  for (Index i = 0; i < n; ++i) {
    const auto cols = a.row_cols(i);
    const auto vals = a.row_values(i);
    for (Index k = 0; k < cols.size(); ++k) entries.push_back({i, cols[k], vals[k]});
    if (add_self_loops) entries.push_back({i, i, 1.0});
  }
  const SparseMatrix tilde = SparseMatrix::from_triplets(n, n, std::move(entries));

  std::vector<Real> inv_sqrt_degree(n);
  for (Index i = 0; i < n; ++i) {
    Real degree = 0.0;
    for (Real v : tilde.row_values(i)) degree += v;
    detail::require(degree > 0.0, "sparse_core",
                    "row " + std::to_string(i) + " has non-positive degree");
    inv_sqrt_degree[i] = 1.0 / std::sqrt(degree);
  }

  std::vector<Index> offsets(tilde.row_offsets().begin(), tilde.row_offsets().end());
  std::vector<Index> cols(tilde.col_indices().begin(), tilde.col_indices().end());
  std::vector<Real> vals(tilde.nnz());
  for (Index i = 0; i < n; ++i) {
    for (Index k = offsets[i]; k < offsets[i + 1]; ++k) {
      // The product of the two scalings is formed first so (i,j) and (j,i)
      // round identically for symmetric input.
      vals[k] = tilde.values()[k] * (inv_sqrt_degree[i] * inv_sqrt_degree[cols[k]]);
    }
  }
  return SparseMatrix(n, n, std::move(offsets), std::move(cols), std::move(vals));
}

inline DenseMatrix spmm(const SparseMatrix& a, const DenseMatrix& h) {
  detail::require(a.cols() == h.rows(), "sparse_core",
                  "spmm dimension mismatch: " + std::to_string(a.cols()) + " vs " +
                      std::to_string(h.rows()));
  DenseMatrix out(a.rows(), h.cols());
  for (Index i = 0; i < a.rows(); ++i) {
    auto dst = out.row(i);
    const auto cols = a.row_cols(i);
    const auto vals = a.row_values(i);
    for (Index k = 0; k < cols.size(); ++k) {
      const auto src = h.row(cols[k]);
      const Real v = vals[k];
      for (Index c = 0; c < dst.size(); ++c) dst[c] += v * src[c];
    }
  }
  return out;
}

inline DenseMatrix dmm(const DenseMatrix& x, const DenseMatrix& y) {
  detail::require(x.cols() == y.rows(), "sparse_core",
                  "dmm dimension mismatch: " + std::to_string(x.cols()) + " vs " +
                      std::to_string(y.rows()));
  DenseMatrix out(x.rows(), y.cols());
  for (Index i = 0; i < x.rows(); ++i) {
    auto dst = out.row(i);
    for (Index k = 0; k < x.cols(); ++k) {
      const Real v = x(i, k);
      const auto src = y.row(k);
      for (Index c = 0; c < dst.size(); ++c) dst[c] += v * src[c];
    }
  }
  return out;
}

/// x^T y without materializing the transpose.
inline DenseMatrix tdmm(const DenseMatrix& x, const DenseMatrix& y) {
  detail::require(x.rows() == y.rows(), "sparse_core", "tdmm dimension mismatch");
  DenseMatrix out(x.cols(), y.cols());
  for (Index r = 0; r < x.rows(); ++r) {
    const auto xr = x.row(r);
    const auto yr = y.row(r);
    for (Index i = 0; i < xr.size(); ++i) {
      auto dst = out.row(i);
      for (Index c = 0; c < yr.size(); ++c) dst[c] += xr[i] * yr[c];
    }
  }
  return out;
}

inline DenseMatrix transpose(const DenseMatrix& x) {
  DenseMatrix out(x.cols(), x.rows());
  for (Index i = 0; i < x.rows(); ++i) {
    for (Index j = 0; j < x.cols(); ++j) out(j, i) = x(i, j);
  }
  return out;
}

inline DenseMatrix hadamard(const DenseMatrix& x, const DenseMatrix& y) {
  detail::require(x.rows() == y.rows() && x.cols() == y.cols(), "sparse_core",
                  "hadamard shape mismatch");
  DenseMatrix out(x.rows(), x.cols());
  for (Index k = 0; k < x.data().size(); ++k) out.data()[k] = x.data()[k] * y.data()[k];
  return out;
}

inline void add_inplace(DenseMatrix& acc, const DenseMatrix& x) {
  detail::require(acc.rows() == x.rows() && acc.cols() == x.cols(), "sparse_core",
                  "add shape mismatch");
  for (Index k = 0; k < x.data().size(); ++k) acc.data()[k] += x.data()[k];
}

inline SparseMatrix transpose_sparse(const SparseMatrix& a) {
  std::vector<Index> offsets(a.cols() + 1, 0);
  for (Index c : a.col_indices()) ++offsets[c + 1];
  for (Index c = 0; c < a.cols(); ++c) offsets[c + 1] += offsets[c];
  std::vector<Index> cursor(offsets.begin(), offsets.end() - 1);
  std::vector<Index> cols(a.nnz());
  std::vector<Real> vals(a.nnz());
  for (Index r = 0; r < a.rows(); ++r) {
    const auto rc = a.row_cols(r);
    const auto rv = a.row_values(r);
    for (Index k = 0; k < rc.size(); ++k) {
      const Index dst = cursor[rc[k]]++;
      cols[dst] = r;
      vals[dst] = rv[k];
    }
  }
  return SparseMatrix(a.cols(), a.rows(), std::move(offsets), std::move(cols), std::move(vals));
}

/// Rows of `block` for the requested global ids, in request order. This is the
/// copy-semiring product of a diagonal selector with the block.
inline DenseMatrix gather_rows(const DenseRowBlock& block, std::span<const Index> wanted_global_ids) {
  DenseMatrix out(wanted_global_ids.size(), block.local.cols());
  for (Index i = 0; i < wanted_global_ids.size(); ++i) {
    const Index local = block.local_index(wanted_global_ids[i]);
    detail::require(local < block.size(), "sparse_core",
                    "row " + std::to_string(wanted_global_ids[i]) + " is not owned by this block");
    const auto src = block.local.row(local);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

/// Rows of a dense matrix for an id list.
inline DenseMatrix select_rows(const DenseMatrix& x, std::span<const Index> ids) {
  DenseMatrix out(ids.size(), x.cols());
  for (Index i = 0; i < ids.size(); ++i) {
    detail::require(ids[i] < x.rows(), "sparse_core", "row id out of range");
    const auto src = x.row(ids[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

/// Rows of a sparse matrix for an id list, full column width.
inline SparseMatrix select_sparse_rows(const SparseMatrix& a, std::span<const Index> ids) {
  std::vector<Index> offsets(ids.size() + 1, 0);
  std::vector<Index> cols;
  std::vector<Real> vals;
  for (Index k = 0; k < ids.size(); ++k) {
    detail::require(ids[k] < a.rows(), "sparse_core", "row id out of range");
    const auto rc = a.row_cols(ids[k]);
    const auto rv = a.row_values(ids[k]);
    cols.insert(cols.end(), rc.begin(), rc.end());
    vals.insert(vals.end(), rv.begin(), rv.end());
    offsets[k + 1] = cols.size();
  }
  return SparseMatrix(ids.size(), a.cols(), std::move(offsets), std::move(cols), std::move(vals));
}

/// Unit-valued pattern of A + A^T (diagonal kept if present).
inline SparseMatrix symmetrize_pattern(const SparseMatrix& a) {
  detail::require(a.is_square(), "sparse_core", "symmetrize needs a square matrix");
  std::vector<Triplet> entries;
  entries.reserve(2 * a.nnz());
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j : a.row_cols(i)) {
      entries.push_back({i, j, 1.0});
      if (i != j) entries.push_back({j, i, 1.0});
    }
  }
  auto m = SparseMatrix::from_triplets(a.rows(), a.cols(), std::move(entries));
  std::vector<Real> ones(m.nnz(), 1.0);
  return SparseMatrix(m.rows(), m.cols(),
                      std::vector<Index>(m.row_offsets().begin(), m.row_offsets().end()),
                      std::vector<Index>(m.col_indices().begin(), m.col_indices().end()),
                      std::move(ones));
}

/// Submatrix on the sorted vertex subset `ids`, renumbered 0..|ids|-1.
inline SparseMatrix induced_submatrix(const SparseMatrix& a, std::span<const Index> ids) {
  detail::require(a.is_square(), "sparse_core", "induced_submatrix needs a square matrix");
  std::vector<Index> local_of(a.rows(), a.rows());
  for (Index k = 0; k < ids.size(); ++k) {
    detail::require(ids[k] < a.rows(), "sparse_core", "subset id out of range");
    detail::require(k == 0 || ids[k - 1] < ids[k], "sparse_core", "subset ids must be sorted");
    local_of[ids[k]] = k;
  }
  std::vector<Index> offsets(ids.size() + 1, 0);
  std::vector<Index> cols;
  std::vector<Real> vals;
  for (Index k = 0; k < ids.size(); ++k) {
    const auto rc = a.row_cols(ids[k]);
    const auto rv = a.row_values(ids[k]);
    for (Index e = 0; e < rc.size(); ++e) {
      if (local_of[rc[e]] == a.rows()) continue;
      cols.push_back(local_of[rc[e]]);
      vals.push_back(rv[e]);
    }
    offsets[k + 1] = cols.size();
  }
  return SparseMatrix(ids.size(), ids.size(), std::move(offsets), std::move(cols), std::move(vals));
}

}  // namespace gcnpart
