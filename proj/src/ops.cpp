#include "greet/ops.hpp"

#include <algorithm>
#include <cmath>

namespace greet::ops {

namespace {

constexpr double kNormFloor = 1e-12;

Tape& same_tape(const Var& a, const Var& b) {
  if (!a.valid() || !b.valid() || a.tape != b.tape) {
    throw std::logic_error("operands must live on the same tape");
  }
  return *a.tape;
}

Tape& tape_of(const Var& a) {
  if (!a.valid()) throw std::logic_error("invalid Var");
  return *a.tape;
}

double stable_sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Var matmul(Var a, Var b, bool transpose_b) {
  Tape& t = same_tape(a, b);
  const Matrix& av = t.value(a);
  const Matrix& bv = t.value(b);
  Eigen::Index inner_a = av.cols();
  Eigen::Index inner_b = transpose_b ? bv.cols() : bv.rows();
  if (inner_a != inner_b) throw DataError("matmul: shape mismatch");
  Matrix out = transpose_b ? Matrix(av * bv.transpose()) : Matrix(av * bv);
  bool needs = t.needs_grad(a) || t.needs_grad(b);
  std::function<void(Tape&)> bwd;
  if (needs) {
    int out_id = static_cast<int>(t.size());
    bwd = [a, b, out_id, transpose_b](Tape& tp) {
      const Matrix& g = tp.grad_of(out_id);
      if (tp.needs_grad(a)) {
        if (transpose_b) {
          tp.grad_buffer(a.id).noalias() += g * tp.value(b);
        } else {
          tp.grad_buffer(a.id).noalias() += g * tp.value(b).transpose();
        }
      }
      if (tp.needs_grad(b)) {
        if (transpose_b) {
          tp.grad_buffer(b.id).noalias() += g.transpose() * tp.value(a);
        } else {
          tp.grad_buffer(b.id).noalias() += tp.value(a).transpose() * g;
        }
      }
    };
  }
  return Var{&t, t.emplace(std::move(out), needs, std::move(bwd), "matmul")};
}

Var transpose(Var x) {
  Tape& t = tape_of(x);
  Matrix out = t.value(x).transpose();
  bool needs = t.needs_grad(x);
  std::function<void(Tape&)> bwd;
  if (needs) {
    int out_id = static_cast<int>(t.size());
    bwd = [x, out_id](Tape& tp) {
      tp.grad_buffer(x.id).noalias() += tp.grad_of(out_id).transpose();
    };
  }
  return Var{&t, t.emplace(std::move(out), needs, std::move(bwd), "transpose")};
}

Var concat_cols(Var a, Var b) {
  Tape& t = same_tape(a, b);
  const Matrix& av = t.value(a);
  const Matrix& bv = t.value(b);
  if (av.rows() != bv.rows()) throw DataError("concat_cols: row count mismatch");
  Matrix out(av.rows(), av.cols() + bv.cols());
  out.leftCols(av.cols()) = av;
  out.rightCols(bv.cols()) = bv;
  bool needs = t.needs_grad(a) || t.needs_grad(b);
  std::function<void(Tape&)> bwd;
  if (needs) {
    int out_id = static_cast<int>(t.size());
    Eigen::Index ca = av.cols(), cb = bv.cols();
    bwd = [a, b, out_id, ca, cb](Tape& tp) {
      const Matrix& g = tp.grad_of(out_id);
      if (tp.needs_grad(a)) tp.grad_buffer(a.id) += g.leftCols(ca);
      if (tp.needs_grad(b)) tp.grad_buffer(b.id) += g.rightCols(cb);
    };
  }
  return Var{&t, t.emplace(std::move(out), needs, std::move(bwd), "concat_cols")};
}

Var gather_rows(Var x, std::shared_ptr<const std::vector<int>> idx) {
  Tape& t = tape_of(x);
  const Matrix& xv = t.value(x);
  Matrix out(static_cast<Eigen::Index>(idx->size()), xv.cols());
  for (std::size_t r = 0; r < idx->size(); ++r) {
    int src = (*idx)[r];
    if (src < 0 || src >= xv.rows()) throw DataError("gather_rows: index out of range");
    out.row(static_cast<Eigen::Index>(r)) = xv.row(src);
  }
  bool needs = t.needs_grad(x);
  std::function<void(Tape&)> bwd;
  if (needs) {
    int out_id = static_cast<int>(t.size());
    bwd = [x, out_id, idx](Tape& tp) {
      const Matrix& g = tp.grad_of(out_id);
      Matrix& gx = tp.grad_buffer(x.id);
      for (std::size_t r = 0; r < idx->size(); ++r) {
        gx.row((*idx)[r]) += g.row(static_cast<Eigen::Index>(r));
      }
    };
  }
  return Var{&t, t.emplace(std::move(out), needs, std::move(bwd), "gather_rows")};
}

namespace {

template <typename FwdFn, typename BwdA, typename BwdB>
Var binary_elementwise(Var a, Var b, const char* name, FwdFn fwd, BwdA bwd_a, BwdB bwd_b) {
  Tape& t = same_tape(a, b);
  const Matrix& av = t.value(a);
  const Matrix& bv = t.value(b);
  if (av.rows() != bv.rows() || av.cols() != bv.cols()) {
    throw DataError(std::string(name) + ": shape mismatch");
  }
  Matrix out = fwd(av, bv);
  bool needs = t.needs_grad(a) || t.needs_grad(b);
  std::function<void(Tape&)> bwd;
  if (needs) {
    int out_id = static_cast<int>(t.size());
    bwd = [a, b, out_id, bwd_a, bwd_b](Tape& tp) {
      const Matrix& g = tp.grad_of(out_id);
      if (tp.needs_grad(a)) bwd_a(tp.grad_buffer(a.id), g, tp.value(a), tp.value(b));
      if (tp.needs_grad(b)) bwd_b(tp.grad_buffer(b.id), g, tp.value(a), tp.value(b));
    };
  }
  return Var{&t, t.emplace(std::move(out), needs, std::move(bwd), name)};
}

}  // namespace

Var add(Var a, Var b) {
  return binary_elementwise(
      a, b, "add", [](const Matrix& x, const Matrix& y) -> Matrix { return x + y; },
      [](Matrix& ga, const Matrix& g, const Matrix&, const Matrix&) { ga += g; },
      [](Matrix& gb, const Matrix& g, const Matrix&, const Matrix&) { gb += g; });
}

Var sub(Var a, Var b) {
  return binary_elementwise(
      a, b, "sub", [](const Matrix& x, const Matrix& y) -> Matrix { return x - y; },
      [](Matrix& ga, const Matrix& g, const Matrix&, const Matrix&) { ga += g; },
      [](Matrix& gb, const Matrix& g, const Matrix&, const Matrix&) { gb -= g; });
}

Var mul(Var a, Var b) {
  return binary_elementwise(
      a, b, "mul",
      [](const Matrix& x, const Matrix& y) -> Matrix { return x.cwiseProduct(y); },
      [](Matrix& ga, const Matrix& g, const Matrix&, const Matrix& y) {
        ga += g.cwiseProduct(y);
      },
      [](Matrix& gb, const Matrix& g, const Matrix& x, const Matrix&) {
        gb += g.cwiseProduct(x);
      });
}

Var div(Var a, Var b) {
  return binary_elementwise(
      a, b, "div",
      [](const Matrix& x, const Matrix& y) -> Matrix { return x.cwiseQuotient(y); },
      [](Matrix& ga, const Matrix& g, const Matrix&, const Matrix& y) {
        ga += g.cwiseQuotient(y);
      },
      [](Matrix& gb, const Matrix& g, const Matrix& x, const Matrix& y) {
        gb -= g.cwiseProduct(x).cwiseQuotient(y.cwiseProduct(y));
      });
}

Var add_rowvec(Var x, Var v) {
  Tape& t = same_tape(x, v);
  const Matrix& xv = t.value(x);
  const Matrix& vv = t.value(v);
  if (vv.rows() != 1 || vv.cols() != xv.cols()) throw DataError("add_rowvec: shape mismatch");
  Matrix out = xv.rowwise() + vv.row(0);
  bool needs = t.needs_grad(x) || t.needs_grad(v);
  std::function<void(Tape&)> bwd;
  if (needs) {
    int out_id = static_cast<int>(t.size());
    bwd = [x, v, out_id](Tape& tp) {
      const Matrix& g = tp.grad_of(out_id);
      if (tp.needs_grad(x)) tp.grad_buffer(x.id) += g;
      if (tp.needs_grad(v)) tp.grad_buffer(v.id).row(0) += g.colwise().sum();
    };
  }
  return Var{&t, t.emplace(std::move(out), needs, std::move(bwd), "add_rowvec")};
}

namespace {

template <typename FwdFn, typename BwdFn>
Var unary_op(Var x, const char* name, FwdFn fwd, BwdFn bwd_fn) {
  Tape& t = tape_of(x);
  Matrix out = fwd(t.value(x));
  bool needs = t.needs_grad(x);
  std::function<void(Tape&)> bwd;
  if (needs) {
    int out_id = static_cast<int>(t.size());
    bwd = [x, out_id, bwd_fn](Tape& tp) {
      bwd_fn(tp.grad_buffer(x.id), tp.grad_of(out_id), tp.value(x), tp.value_of(out_id));
    };
  }
  return Var{&t, t.emplace(std::move(out), needs, std::move(bwd), name)};
}

}  // namespace

Var scale(Var x, double c) {
  return unary_op(
      x, "scale", [c](const Matrix& v) -> Matrix { return c * v; },
      [c](Matrix& gx, const Matrix& g, const Matrix&, const Matrix&) { gx += c * g; });
}

Var add_scalar(Var x, double c) {
  return unary_op(
      x, "add_scalar", [c](const Matrix& v) -> Matrix { return v.array() + c; },
      [](Matrix& gx, const Matrix& g, const Matrix&, const Matrix&) { gx += g; });
}

Var sub_from_scalar(double c, Var x) {
  return unary_op(
      x, "sub_from_scalar", [c](const Matrix& v) -> Matrix { return (c - v.array()).matrix(); },
      [](Matrix& gx, const Matrix& g, const Matrix&, const Matrix&) { gx -= g; });
}

Var clamp_min(Var x, double c) {
  return unary_op(
      x, "clamp_min", [c](const Matrix& v) -> Matrix { return v.cwiseMax(c); },
      [c](Matrix& gx, const Matrix& g, const Matrix& v, const Matrix&) {
        gx.array() += g.array() * (v.array() > c).cast<double>();
      });
}

Var sigmoid(Var x) {
  return unary_op(
      x, "sigmoid",
      [](const Matrix& v) -> Matrix { return v.unaryExpr([](double z) { return stable_sigmoid(z); }); },
      [](Matrix& gx, const Matrix& g, const Matrix&, const Matrix& y) {
        gx.array() += g.array() * y.array() * (1.0 - y.array());
      });
}

Var relu(Var x) {
  return unary_op(
      x, "relu", [](const Matrix& v) -> Matrix { return v.cwiseMax(0.0); },
      [](Matrix& gx, const Matrix& g, const Matrix& v, const Matrix&) {
        gx.array() += g.array() * (v.array() > 0.0).cast<double>();
      });
}

Var exp(Var x) {
  return unary_op(
      x, "exp", [](const Matrix& v) -> Matrix { return v.array().exp(); },
      [](Matrix& gx, const Matrix& g, const Matrix&, const Matrix& y) {
        gx.array() += g.array() * y.array();
      });
}

Var log(Var x) {
  return unary_op(
      x, "log", [](const Matrix& v) -> Matrix { return v.array().log(); },
      [](Matrix& gx, const Matrix& g, const Matrix& v, const Matrix&) {
        gx.array() += g.array() / v.array();
      });
}

Var logsumexp_rows(Var x, bool skip_diag) {
  Tape& t = tape_of(x);
  const Matrix& xv = t.value(x);
  if (skip_diag && (xv.rows() != xv.cols() || xv.cols() < 2)) {
    throw DataError("logsumexp_rows: skip_diag needs a square input with >= 2 columns");
  }
  if (xv.cols() < 1) throw DataError("logsumexp_rows: empty rows");
  const double kExcluded = -std::numeric_limits<double>::infinity();
  Matrix out(xv.rows(), 1);
  // Vectorized per block of rows; excluded diagonal entries become -inf in a
  // scratch copy and contribute exp(-inf) = 0.
  parallel_for(xv.rows(), [&](std::int64_t lo, std::int64_t hi) {
    for (std::int64_t i = lo; i < hi; ++i) {
      Eigen::RowVectorXd row = xv.row(i);
      if (skip_diag) row(i) = kExcluded;
      double m = row.maxCoeff();
      double s = (row.array() - m).exp().sum();
      out(i, 0) = m + std::log(s);
    }
  });
  bool needs = t.needs_grad(x);
  std::function<void(Tape&)> bwd;
  if (needs) {
    int out_id = static_cast<int>(t.size());
    bwd = [x, out_id, skip_diag](Tape& tp) {
      const Matrix& g = tp.grad_of(out_id);
      const Matrix& xv2 = tp.value(x);
      const Matrix& y = tp.value_of(out_id);
      Matrix& gx = tp.grad_buffer(x.id);
      parallel_for(xv2.rows(), [&](std::int64_t lo, std::int64_t hi) {
        for (std::int64_t i = lo; i < hi; ++i) {
          double gi = g(i, 0);
          if (gi == 0.0) continue;
          Eigen::RowVectorXd soft = (xv2.row(i).array() - y(i, 0)).exp();
          if (skip_diag) soft(i) = 0.0;
          gx.row(i) += gi * soft;
        }
      });
    };
  }
  return Var{&t, t.emplace(std::move(out), needs, std::move(bwd), "logsumexp_rows")};
}

Var sum_all(Var x) {
  Tape& t = tape_of(x);
  Matrix out(1, 1);
  out(0, 0) = t.value(x).sum();
  bool needs = t.needs_grad(x);
  std::function<void(Tape&)> bwd;
  if (needs) {
    int out_id = static_cast<int>(t.size());
    bwd = [x, out_id](Tape& tp) {
      tp.grad_buffer(x.id).array() += tp.grad_of(out_id)(0, 0);
    };
  }
  return Var{&t, t.emplace(std::move(out), needs, std::move(bwd), "sum_all")};
}

Var mean_all(Var x) {
  Tape& t = tape_of(x);
  const Matrix& xv = t.value(x);
  double inv = 1.0 / static_cast<double>(xv.size());
  Matrix out(1, 1);
  out(0, 0) = xv.sum() * inv;
  bool needs = t.needs_grad(x);
  std::function<void(Tape&)> bwd;
  if (needs) {
    int out_id = static_cast<int>(t.size());
    bwd = [x, out_id, inv](Tape& tp) {
      tp.grad_buffer(x.id).array() += tp.grad_of(out_id)(0, 0) * inv;
    };
  }
  return Var{&t, t.emplace(std::move(out), needs, std::move(bwd), "mean_all")};
}

Var row_l2_normalize(Var x) {
  Tape& t = tape_of(x);
  const Matrix& xv = t.value(x);
  Matrix out(xv.rows(), xv.cols());
  Vector norms(xv.rows());
  for (Eigen::Index i = 0; i < xv.rows(); ++i) {
    double nrm = std::max(xv.row(i).norm(), kNormFloor);
    norms[i] = nrm;
    out.row(i) = xv.row(i) / nrm;
  }
  bool needs = t.needs_grad(x);
  std::function<void(Tape&)> bwd;
  if (needs) {
    int out_id = static_cast<int>(t.size());
    auto cached_norms = std::make_shared<Vector>(std::move(norms));
    bwd = [x, out_id, cached_norms](Tape& tp) {
      const Matrix& g = tp.grad_of(out_id);
      const Matrix& y = tp.value_of(out_id);
      Matrix& gx = tp.grad_buffer(x.id);
      for (Eigen::Index i = 0; i < g.rows(); ++i) {
        double nrm = (*cached_norms)[i];
        if (nrm > kNormFloor) {
          double proj = y.row(i).dot(g.row(i));
          gx.row(i) += (g.row(i) - proj * y.row(i)) / nrm;
        } else {
          gx.row(i) += g.row(i) / nrm;  // clamped region: plain scaling
        }
      }
    };
  }
  return Var{&t, t.emplace(std::move(out), needs, std::move(bwd), "row_l2_normalize")};
}

Var paired_row_dot(Var a, Var b, std::shared_ptr<const std::vector<int>> idx_a,
                   std::shared_ptr<const std::vector<int>> idx_b) {
  Tape& t = same_tape(a, b);
  const Matrix& av = t.value(a);
  const Matrix& bv = t.value(b);
  if (av.cols() != bv.cols()) throw DataError("paired_row_dot: column count mismatch");
  if (idx_a->size() != idx_b->size()) throw DataError("paired_row_dot: index length mismatch");
  Matrix out(static_cast<Eigen::Index>(idx_a->size()), 1);
  for (std::size_t p = 0; p < idx_a->size(); ++p) {
    int i = (*idx_a)[p], j = (*idx_b)[p];
    if (i < 0 || i >= av.rows() || j < 0 || j >= bv.rows()) {
      throw DataError("paired_row_dot: index out of range");
    }
    out(static_cast<Eigen::Index>(p), 0) = av.row(i).dot(bv.row(j));
  }
  bool needs = t.needs_grad(a) || t.needs_grad(b);
  std::function<void(Tape&)> bwd;
  if (needs) {
    int out_id = static_cast<int>(t.size());
    bwd = [a, b, out_id, idx_a, idx_b](Tape& tp) {
      const Matrix& g = tp.grad_of(out_id);
      for (std::size_t p = 0; p < idx_a->size(); ++p) {
        double gp = g(static_cast<Eigen::Index>(p), 0);
        if (gp == 0.0) continue;
        int i = (*idx_a)[p], j = (*idx_b)[p];
        if (tp.needs_grad(a)) tp.grad_buffer(a.id).row(i) += gp * tp.value(b).row(j);
        if (tp.needs_grad(b)) tp.grad_buffer(b.id).row(j) += gp * tp.value(a).row(i);
      }
    };
  }
  return Var{&t, t.emplace(std::move(out), needs, std::move(bwd), "paired_row_dot")};
}

Var cosine_rows(Var a, Var b) {
  Tape& t = same_tape(a, b);
  const Matrix& av = t.value(a);
  if (av.rows() != t.value(b).rows()) throw DataError("cosine_rows: row count mismatch");
  auto idx = std::make_shared<std::vector<int>>(static_cast<std::size_t>(av.rows()));
  for (Eigen::Index i = 0; i < av.rows(); ++i) (*idx)[static_cast<std::size_t>(i)] = static_cast<int>(i);
  return paired_row_dot(row_l2_normalize(a), row_l2_normalize(b), idx, idx);
}

Var spmm(std::shared_ptr<const SparsePattern> pattern, Var values, Var x) {
  Tape& t = same_tape(values, x);
  const Matrix& vals = t.value(values);
  const Matrix& xv = t.value(x);
  if (vals.cols() != 1 || vals.rows() != pattern->nnz()) {
    throw DataError("spmm: values must be an nnz x 1 column");
  }
  if (xv.rows() != pattern->cols) throw DataError("spmm: shape mismatch");
  Matrix out = Matrix::Zero(pattern->rows, xv.cols());
  const auto& rp = pattern->row_ptr;
  const auto& ci = pattern->col_idx;
  parallel_for(pattern->rows, [&](std::int64_t lo, std::int64_t hi) {
    for (std::int64_t i = lo; i < hi; ++i) {
      auto row = out.row(i);
      for (std::int64_t e = rp[i]; e < rp[i + 1]; ++e) row += vals(e, 0) * xv.row(ci[e]);
    }
  });
  bool needs = t.needs_grad(values) || t.needs_grad(x);
  std::function<void(Tape&)> bwd;
  if (needs) {
    int out_id = static_cast<int>(t.size());
    bwd = [values, x, out_id, pattern](Tape& tp) {
      const Matrix& g = tp.grad_of(out_id);
      const auto& rp2 = pattern->row_ptr;
      const auto& ci2 = pattern->col_idx;
      if (tp.needs_grad(x)) {
        // dX = A^T G, iterated over rows of A^T so writes never collide.
        const Matrix& vals2 = tp.value(values);
        Matrix& gx = tp.grad_buffer(x.id);
        parallel_for(pattern->cols, [&](std::int64_t lo, std::int64_t hi) {
          for (std::int64_t j = lo; j < hi; ++j) {
            auto row = gx.row(j);
            for (std::int64_t e = pattern->t_row_ptr[j]; e < pattern->t_row_ptr[j + 1]; ++e) {
              row += vals2(pattern->t_perm[e], 0) * g.row(pattern->t_col_idx[e]);
            }
          }
        });
      }
      if (tp.needs_grad(values)) {
        const Matrix& xv2 = tp.value(x);
        Matrix& gv = tp.grad_buffer(values.id);
        parallel_for(pattern->rows, [&](std::int64_t lo, std::int64_t hi) {
          for (std::int64_t i = lo; i < hi; ++i) {
            for (std::int64_t e = rp2[i]; e < rp2[i + 1]; ++e) {
              gv(e, 0) += g.row(i).dot(xv2.row(ci2[e]));
            }
          }
        });
      }
    };
  }
  return Var{&t, t.emplace(std::move(out), needs, std::move(bwd), "spmm")};
}

Var sym_norm_values(std::shared_ptr<const SparsePattern> pattern, Var values, double eps) {
  Tape& t = tape_of(values);
  const Matrix& vals = t.value(values);
  if (vals.cols() != 1 || vals.rows() != pattern->nnz()) {
    throw DataError("sym_norm_values: values must be an nnz x 1 column");
  }
  Matrix out(vals.rows(), 1);
  auto deg = std::make_shared<Vector>(pattern->rows);  // clamped degrees
  detail::sym_norm_values(*pattern, vals.data(), eps, out.data(), deg->data());
  bool needs = t.needs_grad(values);
  std::function<void(Tape&)> bwd;
  if (needs) {
    int out_id = static_cast<int>(t.size());
    bwd = [values, out_id, pattern, deg, eps](Tape& tp) {
      const Matrix& g = tp.grad_of(out_id);
      const Matrix& a = tp.value(values);
      Matrix& ga = tp.grad_buffer(values.id);
      const auto& rp = pattern->row_ptr;
      const auto& ci = pattern->col_idx;
      const int n = pattern->rows;
      Vector inv_sqrt(n);
      for (int i = 0; i < n; ++i) inv_sqrt[i] = 1.0 / std::sqrt((*deg)[i]);
      // d out_e / d r_i collected per node, then converted to d/d degree.
      Vector acc_r = Vector::Zero(n);
      for (int i = 0; i < n; ++i) {
        for (std::int64_t e = rp[i]; e < rp[i + 1]; ++e) {
          int j = ci[e];
          double ge = g(e, 0);
          if (ge == 0.0) continue;
          acc_r[i] += ge * a(e, 0) * inv_sqrt[j];
          acc_r[j] += ge * a(e, 0) * inv_sqrt[i];
        }
      }
      Vector node_term(n);
      for (int i = 0; i < n; ++i) {
        // Degree clamped at eps: derivative through the clamp is zero there.
        bool clamped = (*deg)[i] <= eps;
        double d = (*deg)[i];
        node_term[i] = clamped ? 0.0 : acc_r[i] * (-0.5) / (d * std::sqrt(d));
      }
      for (int i = 0; i < n; ++i) {
        for (std::int64_t e = rp[i]; e < rp[i + 1]; ++e) {
          ga(e, 0) += g(e, 0) * inv_sqrt[i] * inv_sqrt[ci[e]] + node_term[i];
        }
      }
    };
  }
  return Var{&t, t.emplace(std::move(out), needs, std::move(bwd), "sym_norm_values")};
}

}  // namespace greet::ops
