#include "greet/encoder.hpp"

#include <algorithm>

namespace greet {

DualRepresentation fuse(Matrix h_hm, Matrix h_ht) {
  if (h_hm.rows() != h_ht.rows()) throw DataError("fuse: channel row mismatch");
  DualRepresentation rep;
  rep.h = Matrix(h_hm.rows(), h_hm.cols() + h_ht.cols());
  rep.h.leftCols(h_hm.cols()) = h_hm;
  rep.h.rightCols(h_ht.cols()) = h_ht;
  rep.h_hm = std::move(h_hm);
  rep.h_ht = std::move(h_ht);
  return rep;
}

Var sgc_encode(Var x, const MlpVars& mlp, std::shared_ptr<const SparsePattern> pattern,
               Var view_values, int propagation_depth, double eps) {
  if (propagation_depth < 1) throw DataError("sgc_encode: propagation depth must be >= 1");
  Var h = mlp_forward(x, mlp);
  Var norm = ops::sym_norm_values(pattern, view_values, eps);
  for (int l = 0; l < propagation_depth; ++l) h = ops::spmm(pattern, norm, h);
  return h;
}

Var lapsgc_encode(Var x, const MlpVars& mlp, std::shared_ptr<const SparsePattern> pattern,
                  Var view_values, int propagation_depth, double alpha, double eps) {
  if (propagation_depth < 1) throw DataError("lapsgc_encode: propagation depth must be >= 1");
  if (alpha < 0.0 || alpha > 1.0) throw DataError("lapsgc_encode: alpha must be in [0,1]");
  Var h = mlp_forward(x, mlp);
  Var norm = ops::sym_norm_values(pattern, view_values, eps);
  for (int l = 0; l < propagation_depth; ++l) {
    h = ops::sub(h, ops::scale(ops::spmm(pattern, norm, h), alpha));
  }
  return h;
}

Var project(Var h_channel, const MlpVars& head) { return mlp_forward(h_channel, head); }

AugmentPlan sample_augmentation(std::int64_t m, int d_f, double p_f, double p_e,
                                std::uint64_t key) {
  if (p_f < 0.0 || p_f >= 1.0 || p_e < 0.0 || p_e >= 1.0) {
    throw DataError("sample_augmentation: rates must lie in [0,1)");
  }
  AugmentPlan plan;
  plan.edge_keep.resize(static_cast<std::size_t>(m));
  plan.col_mask.resize(static_cast<std::size_t>(d_f));
  std::uint64_t edge_key = derive_seed(key, 1);
  std::uint64_t col_key = derive_seed(key, 2);
  for (std::int64_t e = 0; e < m; ++e) {
    plan.edge_keep[static_cast<std::size_t>(e)] =
        counter_uniform(edge_key, static_cast<std::uint64_t>(e)) >= p_e ? 1 : 0;
  }
  for (int c = 0; c < d_f; ++c) {
    plan.col_mask[static_cast<std::size_t>(c)] =
        counter_uniform(col_key, static_cast<std::uint64_t>(c)) < p_f ? 1 : 0;
  }
  return plan;
}

namespace {

Matrix apply_col_mask(const Matrix& x, const std::vector<char>& col_mask) {
  Matrix out = x;
  for (std::size_t c = 0; c < col_mask.size(); ++c) {
    if (col_mask[c]) out.col(static_cast<Eigen::Index>(c)).setZero();
  }
  return out;
}

}  // namespace

ViewData augment_view(const SparseMatrix& a, const Matrix& x, double p_f, double p_e,
                      std::uint64_t key) {
  if (!a.pattern->structurally_symmetric()) {
    throw DataError("augment_view: view pattern must be symmetric");
  }
  // Undirected edges in canonical order: upper-triangle entries in CSR order.
  struct UpperEntry {
    std::int64_t e;
    std::int32_t i;
    std::int32_t j;
  };
  std::vector<UpperEntry> upper;
  for (int i = 0; i < a.rows(); ++i) {
    for (std::int64_t e = a.row_ptr()[i]; e < a.row_ptr()[i + 1]; ++e) {
      if (a.col_idx()[e] > i) upper.push_back({e, i, a.col_idx()[e]});
    }
  }
  AugmentPlan plan = sample_augmentation(static_cast<std::int64_t>(upper.size()),
                                         static_cast<int>(x.cols()), p_f, p_e, key);
  std::vector<std::pair<std::int32_t, std::int32_t>> kept;
  std::vector<double> kept_vals;
  const auto& mirror = a.pattern->mirror();
  for (std::size_t k = 0; k < upper.size(); ++k) {
    if (!plan.edge_keep[k]) continue;
    const UpperEntry& u = upper[k];
    kept.emplace_back(u.i, u.j);
    kept_vals.push_back(a.values[u.e]);
    kept.emplace_back(u.j, u.i);
    kept_vals.push_back(a.values[mirror[u.e]]);
  }
  // from_entries sorts; sort the values the same way.
  std::vector<std::size_t> order(kept.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t l, std::size_t r) { return kept[l] < kept[r]; });
  std::vector<std::pair<std::int32_t, std::int32_t>> sorted_entries(kept.size());
  Vector sorted_vals(static_cast<Eigen::Index>(kept.size()));
  for (std::size_t i = 0; i < order.size(); ++i) {
    sorted_entries[i] = kept[order[i]];
    sorted_vals[static_cast<Eigen::Index>(i)] = kept_vals[order[i]];
  }
  ViewData out;
  out.a = SparseMatrix(SparsePattern::from_entries(a.rows(), a.cols(), std::move(sorted_entries)),
                       std::move(sorted_vals));
  out.x = apply_col_mask(x, plan.col_mask);
  return out;
}

ViewPlan plan_view(const Graph& g, const AugmentPlan* aug) {
  ViewPlan plan;
  if (aug == nullptr) {
    plan.pattern = g.adj.pattern;
    plan.entry_edge =
        std::make_shared<std::vector<int>>(g.entry_edge.begin(), g.entry_edge.end());
    plan.masked_features = g.features;
    return plan;
  }
  if (static_cast<std::int64_t>(aug->edge_keep.size()) != g.m ||
      static_cast<Eigen::Index>(aug->col_mask.size()) != g.features.cols()) {
    throw DataError("plan_view: augmentation plan does not match graph");
  }
  std::vector<std::pair<std::int32_t, std::int32_t>> entries;
  std::vector<int> entry_edge;
  for (int i = 0; i < g.n; ++i) {
    for (std::int64_t e = g.adj.row_ptr()[i]; e < g.adj.row_ptr()[i + 1]; ++e) {
      std::int64_t edge = g.entry_edge[e];
      if (!aug->edge_keep[static_cast<std::size_t>(edge)]) continue;
      entries.emplace_back(i, g.adj.col_idx()[e]);
      entry_edge.push_back(static_cast<int>(edge));
    }
  }
  // CSR row order already yields sorted entries, so ids stay aligned.
  plan.pattern = SparsePattern::from_entries(g.n, g.n, std::move(entries));
  plan.entry_edge = std::make_shared<std::vector<int>>(std::move(entry_edge));
  plan.masked_features = apply_col_mask(g.features, aug->col_mask);
  return plan;
}

Var view_values_vars(const ViewPlan& plan, Var w, bool heterophilic) {
  Var vals = ops::gather_rows(w, plan.entry_edge);
  if (heterophilic) vals = ops::sub_from_scalar(1.0, vals);
  return vals;
}

}  // namespace greet
