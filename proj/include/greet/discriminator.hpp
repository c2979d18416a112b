#pragma once

#include "greet/graph.hpp"
#include "greet/nn.hpp"

#include <cstdint>

namespace greet {

struct DiscriminatorVars {
  MlpVars mlp1;
  MlpVars mlp2;
};

DiscriminatorVars register_discriminator(Tape& tape, const ModelParams& params,
                                         bool requires_grad);

// Per-undirected-edge homophily logit, symmetric in the edge direction:
// h'_i = relu(MLP1([x_i || s_i])),
// theta_ij = (MLP2([h'_i || h'_j]) + MLP2([h'_j || h'_i])) / 2.
// Returns an m x 1 column aligned with g.edges.
Var edge_logits(Var x, Var s, const Graph& g, const DiscriminatorVars& disc);

// Scalar Gumbel-sigmoid relaxation: sigmoid((theta + log d - log(1-d)) / tau_g).
double gumbel_weight(double theta, double tau_g, double delta);

// Vectorized tape version; `delta` holds one noise draw per edge, injected by
// the caller for testability. delta = 0.5 everywhere gives the noise-free
// deterministic mode.
Var gumbel_weights(Var theta, const Vector& delta, double tau_g);

// Per-edge noise for one training step: counter-based, so each edge's draw
// depends only on (key, edge id) and never on evaluation order.
Vector sample_edge_noise(std::int64_t m, std::uint64_t key);
Vector noise_free(std::int64_t m);  // all 0.5

// Weighted view pair on the graph's sparsity pattern (value level).
DualViews split_views(const Graph& g, const Vector& w);

// Tape-level views: hm entries carry w of their undirected edge, ht entries
// 1-w. Gradients flow back into w.
struct DualViewVars {
  std::shared_ptr<const SparsePattern> pattern;
  Var hm_values;
  Var ht_values;
};
DualViewVars split_views_vars(const Graph& g, Var w);

}  // namespace greet
