#pragma once

#include "greet/util.hpp"

#include <cstdint>
#include <memory>
#include <utility>
#include <vector>

namespace greet {

// Immutable CSR sparsity structure, shared between matrices that differ only
// in their stored values (e.g. the two edge views of one graph). The
// transpose arrays are built once at construction; `t_perm[t]` gives, for
// entry t of the transposed CSR, the index of the source entry in this
// pattern.
struct SparsePattern {
  int rows = 0;
  int cols = 0;
  std::vector<std::int64_t> row_ptr;   // size rows+1
  std::vector<std::int32_t> col_idx;   // size nnz, sorted within each row
  std::vector<std::int64_t> t_row_ptr;
  std::vector<std::int32_t> t_col_idx;
  std::vector<std::int64_t> t_perm;

  std::int64_t nnz() const { return static_cast<std::int64_t>(col_idx.size()); }
  bool structurally_symmetric() const;

  // For a structurally symmetric pattern: index of the mirrored entry (j,i)
  // for entry (i,j). Equals t_perm.
  const std::vector<std::int64_t>& mirror() const { return t_perm; }

  // Entries must be unique; they are sorted internally.
  static std::shared_ptr<const SparsePattern> from_entries(
      int rows, int cols, std::vector<std::pair<std::int32_t, std::int32_t>> entries);
  static std::shared_ptr<const SparsePattern> from_csr(int rows, int cols,
                                                       std::vector<std::int64_t> row_ptr,
                                                       std::vector<std::int32_t> col_idx);
  static std::shared_ptr<const SparsePattern> identity(int n);
};

// CSR matrix: shared pattern plus one value per stored entry.
struct SparseMatrix {
  std::shared_ptr<const SparsePattern> pattern;
  Vector values;

  SparseMatrix() = default;
  SparseMatrix(std::shared_ptr<const SparsePattern> p, Vector v);

  int rows() const { return pattern ? pattern->rows : 0; }
  int cols() const { return pattern ? pattern->cols : 0; }
  std::int64_t nnz() const { return pattern ? pattern->nnz() : 0; }
  const std::vector<std::int64_t>& row_ptr() const { return pattern->row_ptr; }
  const std::vector<std::int32_t>& col_idx() const { return pattern->col_idx; }

  // Entry (i,j) value, 0 when absent.
  double coeff(int i, int j) const;
  bool is_symmetric(double tol = 0.0) const;
  Matrix to_dense() const;
};

// Y = A * X. Row-parallel, deterministic for any thread count.
Matrix spmm(const SparseMatrix& a, const Matrix& x);
Vector spmv(const SparseMatrix& a, const Vector& x);

// Row sums of A.
Vector row_sums(const SparseMatrix& a);

// D^{-1/2} A D^{-1/2} with D_ii = max(row sum, eps). Validates symmetry and
// nonnegative values. Same pattern as the input.
SparseMatrix sym_norm_adjacency(const SparseMatrix& a, double eps);

// I - alpha * sym_norm_adjacency(a, eps), diagonal stored explicitly.
SparseMatrix hp_laplacian(const SparseMatrix& a, double alpha, double eps);

namespace detail {
// Kernel shared with the differentiable path: normalized values and the
// clamped degrees for a fixed pattern. No validation.
void sym_norm_values(const SparsePattern& p, const double* values, double eps,
                     double* out_values, double* out_deg);
}  // namespace detail

}  // namespace greet
