#include "greet/losses.hpp"

#include <algorithm>
#include <numeric>
#include <random>

namespace greet {

PivotBatch sample_pivots(int n, std::int64_t m, std::uint64_t key) {
  if (n < 2) throw DataError("sample_pivots: need at least two nodes");
  PivotBatch batch;
  batch.src.resize(static_cast<std::size_t>(m));
  batch.dst.resize(static_cast<std::size_t>(m));
  std::mt19937_64 rng(key);
  std::uniform_int_distribution<int> pick_i(0, n - 1);
  std::uniform_int_distribution<int> pick_j(0, n - 2);
  for (std::int64_t e = 0; e < m; ++e) {
    int i = pick_i(rng);
    int j = pick_j(rng);
    if (j >= i) ++j;
    batch.src[static_cast<std::size_t>(e)] = i;
    batch.dst[static_cast<std::size_t>(e)] = j;
  }
  return batch;
}

std::pair<double, double> ranking_terms(double s_edge, double s_pivot, double gamma_hm,
                                        double gamma_ht) {
  double r_hm = std::max(s_pivot - s_edge + gamma_hm, 0.0);
  double r_ht = std::max(s_edge - s_pivot + gamma_ht, 0.0);
  return {r_hm, r_ht};
}

Var ranking_loss(Var w, Var r_hm, Var r_ht, double eps_w) {
  Tape& t = *w.tape;
  const Matrix& wv = t.value(w);
  if (wv.cols() != 1 || t.value(r_hm).rows() != wv.rows() ||
      t.value(r_ht).rows() != wv.rows()) {
    throw DataError("ranking_loss: edge count mismatch");
  }
  Var w_ht = ops::sub_from_scalar(1.0, w);
  Var hm = ops::div(ops::sum_all(ops::mul(w, r_hm)), ops::clamp_min(ops::sum_all(w), eps_w));
  Var ht =
      ops::div(ops::sum_all(ops::mul(w_ht, r_ht)), ops::clamp_min(ops::sum_all(w_ht), eps_w));
  return ops::add(hm, ht);
}

RankingLossVars ranking_loss_from_h(Var h, const Graph& g, const PivotBatch& pivots, Var w,
                                    const LossConfig& cfg) {
  if (static_cast<std::int64_t>(pivots.src.size()) != g.m) {
    throw DataError("ranking_loss_from_h: one pivot pair per edge required");
  }
  auto e_src = std::make_shared<std::vector<int>>();
  auto e_dst = std::make_shared<std::vector<int>>();
  e_src->reserve(g.edges.size());
  e_dst->reserve(g.edges.size());
  for (const auto& [i, j] : g.edges) {
    e_src->push_back(i);
    e_dst->push_back(j);
  }
  auto p_src = std::make_shared<std::vector<int>>(pivots.src);
  auto p_dst = std::make_shared<std::vector<int>>(pivots.dst);

  Var hn = ops::row_l2_normalize(h);
  Var s_edge = ops::paired_row_dot(hn, hn, e_src, e_dst);
  Var s_pivot = ops::paired_row_dot(hn, hn, p_src, p_dst);
  Var r_hm = ops::relu(ops::add_scalar(ops::sub(s_pivot, s_edge), cfg.gamma_hm));
  Var r_ht = ops::relu(ops::add_scalar(ops::sub(s_edge, s_pivot), cfg.gamma_ht));

  Var w_ht = ops::sub_from_scalar(1.0, w);
  Var hm_part =
      ops::div(ops::sum_all(ops::mul(w, r_hm)), ops::clamp_min(ops::sum_all(w), cfg.eps_w));
  Var ht_part = ops::div(ops::sum_all(ops::mul(w_ht, r_ht)),
                         ops::clamp_min(ops::sum_all(w_ht), cfg.eps_w));
  return RankingLossVars{ops::add(hm_part, ht_part), hm_part, ht_part};
}

Var contrastive_loss(Var z_hm, Var z_ht, const NeighborSets& neighbors, double tau_c,
                     const std::vector<int>& batch) {
  Tape& t = *z_hm.tape;
  const int n = static_cast<int>(t.value(z_hm).rows());
  if (static_cast<int>(neighbors.sets.size()) != n) {
    throw DataError("contrastive_loss: neighbor sets do not match node count");
  }
  if (batch.size() < 2) throw DataError("contrastive_loss: batch must hold at least 2 nodes");
  if (!(tau_c > 0.0)) throw DataError("contrastive_loss: tau_c must be positive");

  Var zn_hm = ops::row_l2_normalize(z_hm);
  Var zn_ht = ops::row_l2_normalize(z_ht);

  auto batch_idx = std::make_shared<std::vector<int>>(batch);
  Var zb_hm = ops::gather_rows(zn_hm, batch_idx);
  Var zb_ht = ops::gather_rows(zn_ht, batch_idx);

  // Denominators: logsumexp over the batch without the anchor, per direction.
  Var sim = ops::scale(ops::matmul(zb_hm, zb_ht, /*transpose_b=*/true), 1.0 / tau_c);
  Var den_hm = ops::logsumexp_rows(sim, /*skip_diag=*/true);                 // anchor in hm
  Var den_ht = ops::logsumexp_rows(ops::transpose(sim), /*skip_diag=*/true); // anchor in ht

  // Positive pairs (i, j in N_i), flattened; row p of the batch owns the
  // pairs of node batch[p].
  auto pos_i = std::make_shared<std::vector<int>>();
  auto pos_j = std::make_shared<std::vector<int>>();
  auto pos_row = std::make_shared<std::vector<int>>();  // batch row of the anchor
  std::vector<double> pair_weight;
  for (std::size_t p = 0; p < batch.size(); ++p) {
    int i = batch[p];
    const auto& nbr = neighbors.sets[static_cast<std::size_t>(i)];
    if (nbr.empty()) throw DataError("contrastive_loss: empty neighbor set");
    for (int j : nbr) {
      pos_i->push_back(i);
      pos_j->push_back(j);
      pos_row->push_back(static_cast<int>(p));
      pair_weight.push_back(1.0 / (2.0 * static_cast<double>(nbr.size())));
    }
  }

  Var num_hm = ops::scale(ops::paired_row_dot(zn_hm, zn_ht, pos_i, pos_j), 1.0 / tau_c);
  Var num_ht = ops::scale(ops::paired_row_dot(zn_ht, zn_hm, pos_i, pos_j), 1.0 / tau_c);
  Var den_hm_per_pair = ops::gather_rows(den_hm, pos_row);
  Var den_ht_per_pair = ops::gather_rows(den_ht, pos_row);

  Var log_terms =
      ops::add(ops::sub(num_hm, den_hm_per_pair), ops::sub(num_ht, den_ht_per_pair));
  Matrix weights(static_cast<Eigen::Index>(pair_weight.size()), 1);
  for (std::size_t p = 0; p < pair_weight.size(); ++p) {
    weights(static_cast<Eigen::Index>(p), 0) = pair_weight[p];
  }
  Var weighted = ops::mul(log_terms, t.constant(std::move(weights)));
  return ops::scale(ops::sum_all(weighted), -1.0 / static_cast<double>(batch.size()));
}

std::vector<int> sample_contrastive_batch(int n, int b, std::uint64_t key) {
  std::vector<int> ids(static_cast<std::size_t>(n));
  std::iota(ids.begin(), ids.end(), 0);
  if (b <= 0 || b >= n) return ids;
  std::mt19937_64 rng(key);
  for (int t = 0; t < b; ++t) {
    std::uniform_int_distribution<int> pick(t, n - 1);
    std::swap(ids[static_cast<std::size_t>(t)], ids[static_cast<std::size_t>(pick(rng))]);
  }
  ids.resize(static_cast<std::size_t>(b));
  std::sort(ids.begin(), ids.end());
  return ids;
}

}  // namespace greet
