#include "greet/discriminator.hpp"

#include <cmath>

namespace greet {

DiscriminatorVars register_discriminator(Tape& tape, const ModelParams& params,
                                         bool requires_grad) {
  return DiscriminatorVars{register_mlp(tape, params.disc_mlp1, requires_grad),
                           register_mlp(tape, params.disc_mlp2, requires_grad)};
}

Var edge_logits(Var x, Var s, const Graph& g, const DiscriminatorVars& disc) {
  Tape& t = *x.tape;
  if (t.value(x).rows() != g.n || t.value(s).rows() != g.n) {
    throw DataError("edge_logits: feature/encoding row count does not match graph");
  }
  Var h = ops::relu(mlp_forward(ops::concat_cols(x, s), disc.mlp1));
  auto src = std::make_shared<std::vector<int>>();
  auto dst = std::make_shared<std::vector<int>>();
  src->reserve(g.edges.size());
  dst->reserve(g.edges.size());
  for (const auto& [i, j] : g.edges) {
    src->push_back(i);
    dst->push_back(j);
  }
  Var h_src = ops::gather_rows(h, src);
  Var h_dst = ops::gather_rows(h, dst);
  Var fwd = mlp_forward(ops::concat_cols(h_src, h_dst), disc.mlp2);
  Var rev = mlp_forward(ops::concat_cols(h_dst, h_src), disc.mlp2);
  return ops::scale(ops::add(fwd, rev), 0.5);
}

double gumbel_weight(double theta, double tau_g, double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw DataError("gumbel_weight: delta must lie in (0,1)");
  if (!(tau_g > 0.0)) throw DataError("gumbel_weight: tau_g must be positive");
  double z = (theta + std::log(delta) - std::log1p(-delta)) / tau_g;
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  double e = std::exp(z);
  return e / (1.0 + e);
}

Var gumbel_weights(Var theta, const Vector& delta, double tau_g) {
  Tape& t = *theta.tape;
  if (t.value(theta).cols() != 1 || t.value(theta).rows() != delta.size()) {
    throw DataError("gumbel_weights: theta/delta size mismatch");
  }
  if (!(tau_g > 0.0)) throw DataError("gumbel_weights: tau_g must be positive");
  Matrix logit_noise(delta.size(), 1);
  for (Eigen::Index e = 0; e < delta.size(); ++e) {
    double d = delta[e];
    if (!(d > 0.0 && d < 1.0)) throw DataError("gumbel_weights: delta must lie in (0,1)");
    logit_noise(e, 0) = std::log(d) - std::log1p(-d);
  }
  Var noise = t.constant(std::move(logit_noise));
  return ops::sigmoid(ops::scale(ops::add(theta, noise), 1.0 / tau_g));
}

Vector sample_edge_noise(std::int64_t m, std::uint64_t key) {
  Vector delta(m);
  for (std::int64_t e = 0; e < m; ++e) {
    delta[e] = counter_uniform(key, static_cast<std::uint64_t>(e));
  }
  return delta;
}

Vector noise_free(std::int64_t m) { return Vector::Constant(m, 0.5); }

DualViews split_views(const Graph& g, const Vector& w) {
  if (w.size() != g.m) throw DataError("split_views: one weight per undirected edge required");
  constexpr double kTol = 1e-9;
  for (Eigen::Index e = 0; e < w.size(); ++e) {
    if (!(w[e] > -kTol && w[e] < 1.0 + kTol)) {
      throw DataError("split_views: weight outside (0,1) beyond rounding tolerance");
    }
  }
  Vector hm(g.adj.nnz()), ht(g.adj.nnz());
  for (std::int64_t e = 0; e < g.adj.nnz(); ++e) {
    double we = std::min(1.0, std::max(0.0, w[g.entry_edge[e]]));
    hm[e] = we;
    ht[e] = 1.0 - we;
  }
  DualViews views;
  views.hm = SparseMatrix(g.adj.pattern, std::move(hm));
  views.ht = SparseMatrix(g.adj.pattern, std::move(ht));
  views.weights = w;
  return views;
}

DualViewVars split_views_vars(const Graph& g, Var w) {
  Tape& t = *w.tape;
  if (t.value(w).rows() != g.m || t.value(w).cols() != 1) {
    throw DataError("split_views_vars: w must be an m x 1 column");
  }
  auto entry_edge = std::make_shared<std::vector<int>>(g.entry_edge.begin(), g.entry_edge.end());
  Var hm = ops::gather_rows(w, entry_edge);
  Var ht = ops::sub_from_scalar(1.0, hm);
  return DualViewVars{g.adj.pattern, hm, ht};
}

}  // namespace greet
