#pragma once

#include "greet/sparse.hpp"
#include "greet/tape.hpp"

#include <memory>
#include <vector>

namespace greet::ops {

// Dense linear algebra. transpose_b multiplies by B^T without materializing
// the transpose.
Var matmul(Var a, Var b, bool transpose_b = false);
Var transpose(Var x);
Var concat_cols(Var a, Var b);
Var gather_rows(Var x, std::shared_ptr<const std::vector<int>> idx);

// Elementwise, equal shapes.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var div(Var a, Var b);

// Broadcast a 1xc row vector over every row of x.
Var add_rowvec(Var x, Var v);

// Elementwise with a compile-time constant.
Var scale(Var x, double c);
Var add_scalar(Var x, double c);
Var sub_from_scalar(double c, Var x);  // c - x
Var clamp_min(Var x, double c);

Var sigmoid(Var x);
Var relu(Var x);
Var exp(Var x);
Var log(Var x);

// Row reductions / normalizations.
// logsumexp_rows: per-row logsumexp; skip_diag omits entry (i,i) (square
// input required), used for denominators that exclude the anchor.
Var logsumexp_rows(Var x, bool skip_diag = false);
Var sum_all(Var x);   // 1x1
Var mean_all(Var x);  // 1x1
Var row_l2_normalize(Var x);

// out[t] = dot(a.row(idx_a[t]), b.row(idx_b[t])) as a tx1 column.
Var paired_row_dot(Var a, Var b, std::shared_ptr<const std::vector<int>> idx_a,
                   std::shared_ptr<const std::vector<int>> idx_b);

// Cosine similarity of corresponding rows of a and b (nx1). Zero-norm rows
// behave as if normalized by a tiny floor.
Var cosine_rows(Var a, Var b);

// Sparse x dense product with differentiable sparse values: y = A x where A
// is `pattern` with values from the nnz-long column vector `values`.
Var spmm(std::shared_ptr<const SparsePattern> pattern, Var values, Var x);

// Differentiable D^{-1/2} A D^{-1/2} on a fixed symmetric pattern with
// degree clamp eps: maps the nnz value vector to the normalized one. The
// degree dependence is part of the gradient.
Var sym_norm_values(std::shared_ptr<const SparsePattern> pattern, Var values, double eps);

}  // namespace greet::ops
