#pragma once

#include "greet/discriminator.hpp"
#include "greet/graph.hpp"
#include "greet/nn.hpp"

#include <cstdint>

namespace greet {

// Value-level dual representation: H = [H_hm || H_ht].
struct DualRepresentation {
  Matrix h_hm;
  Matrix h_ht;
  Matrix h;
  int channel_dim() const { return static_cast<int>(h_hm.cols()); }
};

DualRepresentation fuse(Matrix h_hm, Matrix h_ht);

// Low-pass channel: H_0 = MLP(X); H_l = sym_norm(A_hm) H_{l-1}, l = 1..L.
Var sgc_encode(Var x, const MlpVars& mlp, std::shared_ptr<const SparsePattern> pattern,
               Var view_values, int propagation_depth, double eps);

// High-pass channel: H_0 = MLP(X); H_l = (I - alpha * sym_norm(A_ht)) H_{l-1}.
Var lapsgc_encode(Var x, const MlpVars& mlp, std::shared_ptr<const SparsePattern> pattern,
                  Var view_values, int propagation_depth, double alpha, double eps);

// Projection head (per channel).
Var project(Var h_channel, const MlpVars& head);

// ---------------------------------------------------------------------------
// View augmentation. Feature masking zeroes whole feature columns with
// probability p_f (one mask shared by all rows); edge dropping removes each
// undirected edge with probability p_e (both directions together).

struct AugmentPlan {
  std::vector<char> edge_keep;  // per undirected edge
  std::vector<char> col_mask;   // per feature column, 1 = zeroed
};

AugmentPlan sample_augmentation(std::int64_t m, int d_f, double p_f, double p_e,
                                std::uint64_t key);

// Value-level augmented view (spec surface): drops undirected entry pairs of
// a symmetric matrix and zeroes masked feature columns.
struct ViewData {
  SparseMatrix a;
  Matrix x;
};
ViewData augment_view(const SparseMatrix& a, const Matrix& x, double p_f, double p_e,
                      std::uint64_t key);

// Tape-side plan for one (possibly augmented) view of a graph: the surviving
// pattern, each kept entry's undirected edge id, and the masked features.
struct ViewPlan {
  std::shared_ptr<const SparsePattern> pattern;
  std::shared_ptr<const std::vector<int>> entry_edge;
  Matrix masked_features;
};
ViewPlan plan_view(const Graph& g, const AugmentPlan* aug);

// View values for a plan: gathers each kept entry's weight from the
// m x 1 edge-weight var (heterophilic = 1 - w).
Var view_values_vars(const ViewPlan& plan, Var w, bool heterophilic);

}  // namespace greet
