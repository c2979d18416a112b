#pragma once

#include "greet/graph.hpp"
#include "greet/nn.hpp"
#include "greet/preprocess.hpp"

#include <cstdint>
#include <utility>
#include <vector>

namespace greet {

struct LossConfig {
  double gamma_hm = 0.5;
  double gamma_ht = 0.5;
  double tau_c = 0.2;
  int batch = 0;  // 0 = full node set
  double eps_w = 1e-8;
};

// One uniformly sampled pivot pair per edge, i' != j'.
struct PivotBatch {
  std::vector<int> src;
  std::vector<int> dst;
};
PivotBatch sample_pivots(int n, std::int64_t m, std::uint64_t key);

// Hinge pair of Eq-style ranking terms for one edge given the edge and pivot
// similarities; subgradient 0 at the kink.
std::pair<double, double> ranking_terms(double s_edge, double s_pivot, double gamma_hm,
                                        double gamma_ht);

// L_r = sum(w .* R_hm)/max(sum(w), eps_w) + sum((1-w) .* R_ht)/max(sum(1-w), eps_w).
// Differentiable through both the numerators and the normalizers.
Var ranking_loss(Var w, Var r_hm, Var r_ht, double eps_w);

struct RankingLossVars {
  Var total;
  Var hm_part;
  Var ht_part;
};

// Full pivot-anchored ranking loss from the fused representation: cosine
// similarities of edge endpoints and pivot pairs on H, hinges with the given
// margins, then the weighted normalized sums.
RankingLossVars ranking_loss_from_h(Var h, const Graph& g, const PivotBatch& pivots, Var w,
                                    const LossConfig& cfg);

// Robust cross-channel contrastive loss over the given node batch (ascending
// ids). Positives for node i are its feature-kNN peers j in both channel
// directions; each denominator runs over the batch minus the anchor.
// batch.size() >= 2 and every N_i nonempty.
Var contrastive_loss(Var z_hm, Var z_ht, const NeighborSets& neighbors, double tau_c,
                     const std::vector<int>& batch);

// Uniform batch of size b without replacement (ascending); b = 0 or b >= n
// yields the full node set.
std::vector<int> sample_contrastive_batch(int n, int b, std::uint64_t key);

}  // namespace greet
