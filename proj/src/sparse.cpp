#include "greet/sparse.hpp"

#include <algorithm>
#include <cmath>

namespace greet {

bool SparsePattern::structurally_symmetric() const {
  return rows == cols && t_row_ptr == row_ptr && t_col_idx == col_idx;
}

namespace {

void build_transpose(SparsePattern& p) {
  const std::int64_t nnz = p.nnz();
  p.t_row_ptr.assign(static_cast<std::size_t>(p.cols) + 1, 0);
  p.t_col_idx.resize(static_cast<std::size_t>(nnz));
  p.t_perm.resize(static_cast<std::size_t>(nnz));
  for (std::int64_t e = 0; e < nnz; ++e) p.t_row_ptr[static_cast<std::size_t>(p.col_idx[e]) + 1]++;
  for (int j = 0; j < p.cols; ++j) p.t_row_ptr[j + 1] += p.t_row_ptr[j];
  std::vector<std::int64_t> cursor(p.t_row_ptr.begin(), p.t_row_ptr.end() - 1);
  for (int i = 0; i < p.rows; ++i) {
    for (std::int64_t e = p.row_ptr[i]; e < p.row_ptr[i + 1]; ++e) {
      int j = p.col_idx[e];
      std::int64_t t = cursor[j]++;
      p.t_col_idx[t] = static_cast<std::int32_t>(i);
      p.t_perm[t] = e;
    }
  }
}

}  // namespace

std::shared_ptr<const SparsePattern> SparsePattern::from_entries(
    int rows, int cols, std::vector<std::pair<std::int32_t, std::int32_t>> entries) {
  std::sort(entries.begin(), entries.end());
  for (std::size_t i = 1; i < entries.size(); ++i) {
    if (entries[i] == entries[i - 1]) throw DataError("duplicate sparse entry");
  }
  auto p = std::make_shared<SparsePattern>();
  p->rows = rows;
  p->cols = cols;
  p->row_ptr.assign(static_cast<std::size_t>(rows) + 1, 0);
  p->col_idx.resize(entries.size());
  for (const auto& [i, j] : entries) {
    if (i < 0 || i >= rows || j < 0 || j >= cols) throw DataError("sparse entry out of range");
  }
  for (const auto& [i, j] : entries) p->row_ptr[static_cast<std::size_t>(i) + 1]++;
  for (int i = 0; i < rows; ++i) p->row_ptr[i + 1] += p->row_ptr[i];
  for (std::size_t e = 0; e < entries.size(); ++e) p->col_idx[e] = entries[e].second;
  build_transpose(*p);
  return p;
}

std::shared_ptr<const SparsePattern> SparsePattern::from_csr(
    int rows, int cols, std::vector<std::int64_t> row_ptr, std::vector<std::int32_t> col_idx) {
  auto p = std::make_shared<SparsePattern>();
  p->rows = rows;
  p->cols = cols;
  p->row_ptr = std::move(row_ptr);
  p->col_idx = std::move(col_idx);
  if (p->row_ptr.size() != static_cast<std::size_t>(rows) + 1 || p->row_ptr.front() != 0 ||
      p->row_ptr.back() != static_cast<std::int64_t>(p->col_idx.size())) {
    throw DataError("inconsistent CSR offsets");
  }
  for (int i = 0; i < rows; ++i) {
    if (p->row_ptr[i] > p->row_ptr[i + 1]) throw DataError("CSR offsets not monotone");
    for (std::int64_t e = p->row_ptr[i]; e < p->row_ptr[i + 1]; ++e) {
      if (p->col_idx[e] < 0 || p->col_idx[e] >= cols) throw DataError("CSR column out of range");
      if (e > p->row_ptr[i] && p->col_idx[e] <= p->col_idx[e - 1]) {
        throw DataError("CSR columns not strictly increasing within a row");
      }
    }
  }
  build_transpose(*p);
  return p;
}

std::shared_ptr<const SparsePattern> SparsePattern::identity(int n) {
  std::vector<std::pair<std::int32_t, std::int32_t>> entries;
  entries.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) entries.emplace_back(i, i);
  return from_entries(n, n, std::move(entries));
}

SparseMatrix::SparseMatrix(std::shared_ptr<const SparsePattern> p, Vector v)
    : pattern(std::move(p)), values(std::move(v)) {
  if (values.size() != pattern->nnz()) throw DataError("value count does not match pattern nnz");
  if (!values.allFinite()) throw DataError("non-finite sparse value");
}

double SparseMatrix::coeff(int i, int j) const {
  const auto& rp = pattern->row_ptr;
  const auto& ci = pattern->col_idx;
  auto begin = ci.begin() + rp[i];
  auto end = ci.begin() + rp[i + 1];
  auto it = std::lower_bound(begin, end, j);
  if (it == end || *it != j) return 0.0;
  return values[it - ci.begin()];
}

bool SparseMatrix::is_symmetric(double tol) const {
  if (!pattern->structurally_symmetric()) return false;
  const auto& mirror = pattern->mirror();
  for (std::int64_t e = 0; e < nnz(); ++e) {
    if (std::abs(values[e] - values[mirror[e]]) > tol) return false;
  }
  return true;
}

Matrix SparseMatrix::to_dense() const {
  Matrix d = Matrix::Zero(rows(), cols());
  for (int i = 0; i < rows(); ++i) {
    for (std::int64_t e = pattern->row_ptr[i]; e < pattern->row_ptr[i + 1]; ++e) {
      d(i, pattern->col_idx[e]) = values[e];
    }
  }
  return d;
}

Matrix spmm(const SparseMatrix& a, const Matrix& x) {
  if (a.cols() != x.rows()) throw DataError("spmm shape mismatch");
  Matrix y = Matrix::Zero(a.rows(), x.cols());
  const auto& rp = a.row_ptr();
  const auto& ci = a.col_idx();
  parallel_for(a.rows(), [&](std::int64_t lo, std::int64_t hi) {
    for (std::int64_t i = lo; i < hi; ++i) {
      auto out = y.row(i);
      for (std::int64_t e = rp[i]; e < rp[i + 1]; ++e) {
        out += a.values[e] * x.row(ci[e]);
      }
    }
  });
  return y;
}

Vector spmv(const SparseMatrix& a, const Vector& x) {
  if (a.cols() != x.size()) throw DataError("spmv shape mismatch");
  Vector y = Vector::Zero(a.rows());
  const auto& rp = a.row_ptr();
  const auto& ci = a.col_idx();
  for (int i = 0; i < a.rows(); ++i) {
    double acc = 0.0;
    for (std::int64_t e = rp[i]; e < rp[i + 1]; ++e) acc += a.values[e] * x[ci[e]];
    y[i] = acc;
  }
  return y;
}

Vector row_sums(const SparseMatrix& a) {
  Vector d = Vector::Zero(a.rows());
  for (int i = 0; i < a.rows(); ++i) {
    for (std::int64_t e = a.row_ptr()[i]; e < a.row_ptr()[i + 1]; ++e) d[i] += a.values[e];
  }
  return d;
}

namespace detail {

void sym_norm_values(const SparsePattern& p, const double* values, double eps,
                     double* out_values, double* out_deg) {
  std::vector<double> inv_sqrt(static_cast<std::size_t>(p.rows));
  for (int i = 0; i < p.rows; ++i) {
    double d = 0.0;
    for (std::int64_t e = p.row_ptr[i]; e < p.row_ptr[i + 1]; ++e) d += values[e];
    double clamped = std::max(d, eps);
    if (out_deg != nullptr) out_deg[i] = clamped;
    inv_sqrt[i] = 1.0 / std::sqrt(clamped);
  }
  for (int i = 0; i < p.rows; ++i) {
    for (std::int64_t e = p.row_ptr[i]; e < p.row_ptr[i + 1]; ++e) {
      out_values[e] = values[e] * inv_sqrt[i] * inv_sqrt[p.col_idx[e]];
    }
  }
}

}  // namespace detail

SparseMatrix sym_norm_adjacency(const SparseMatrix& a, double eps) {
  if (eps <= 0) throw DataError("sym_norm_adjacency: eps must be positive");
  if (a.values.size() > 0 && a.values.minCoeff() < 0) {
    throw DataError("sym_norm_adjacency: negative weight");
  }
  if (!a.is_symmetric()) throw DataError("sym_norm_adjacency: asymmetric input");
  Vector out(a.nnz());
  detail::sym_norm_values(*a.pattern, a.values.data(), eps, out.data(), nullptr);
  return SparseMatrix(a.pattern, std::move(out));
}

SparseMatrix hp_laplacian(const SparseMatrix& a, double alpha, double eps) {
  if (alpha < 0.0 || alpha > 1.0) throw DataError("hp_laplacian: alpha must be in [0,1]");
  SparseMatrix norm = sym_norm_adjacency(a, eps);
  // Pattern of -alpha*norm plus an explicit diagonal.
  std::vector<std::pair<std::int32_t, std::int32_t>> entries;
  entries.reserve(static_cast<std::size_t>(norm.nnz()) + a.rows());
  for (int i = 0; i < a.rows(); ++i) entries.emplace_back(i, i);
  for (int i = 0; i < a.rows(); ++i) {
    for (std::int64_t e = norm.row_ptr()[i]; e < norm.row_ptr()[i + 1]; ++e) {
      if (norm.col_idx()[e] != i) entries.emplace_back(i, norm.col_idx()[e]);
    }
  }
  auto pattern = SparsePattern::from_entries(a.rows(), a.cols(), std::move(entries));
  Vector values = Vector::Zero(pattern->nnz());
  for (int i = 0; i < a.rows(); ++i) {
    for (std::int64_t e = pattern->row_ptr[i]; e < pattern->row_ptr[i + 1]; ++e) {
      int j = pattern->col_idx[e];
      values[e] = (i == j ? 1.0 : 0.0) - alpha * norm.coeff(i, j);
    }
  }
  return SparseMatrix(std::move(pattern), std::move(values));
}

}  // namespace greet
