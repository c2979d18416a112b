// Test-only reference implementations, independent of the library's
// computation paths: dense linear algebra oracles and scalar loss
// evaluators used to freeze expected values.
#pragma once

#include "greet/graph.hpp"
#include "greet/preprocess.hpp"

#include <cmath>
#include <random>
#include <vector>

namespace oracle {

using greet::Graph;
using greet::Matrix;
using greet::Vector;

// Dense D^{-1/2} A D^{-1/2} with the same degree clamp.
inline Matrix dense_sym_norm(const Matrix& a, double eps) {
  Vector deg = a.rowwise().sum();
  Vector inv_sqrt(deg.size());
  for (Eigen::Index i = 0; i < deg.size(); ++i) {
    inv_sqrt[i] = 1.0 / std::sqrt(std::max(deg[i], eps));
  }
  return inv_sqrt.asDiagonal() * a * inv_sqrt.asDiagonal();
}

// Diagonals of T^t for t = 1..d_s with T = A D^{-1}, via dense powers.
inline Matrix dense_walk_diagonals(const Matrix& a, int d_s) {
  const Eigen::Index n = a.rows();
  Vector deg = a.rowwise().sum();
  Matrix t = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (deg[j] > 0) t(i, j) = a(i, j) / deg[j];
    }
  }
  Matrix out(n, d_s);
  Matrix power = Matrix::Identity(n, n);
  for (int step = 0; step < d_s; ++step) {
    power = (t * power).eval();
    out.col(step) = power.diagonal();
  }
  return out;
}

inline double cosine(const Eigen::RowVectorXd& u, const Eigen::RowVectorXd& v) {
  double nu = u.norm(), nv = v.norm();
  if (nu == 0.0 || nv == 0.0) return 0.0;
  return u.dot(v) / (nu * nv);
}

// Scalar evaluation of the pivot-anchored ranking loss: hinge terms per edge
// from fused-representation cosines, then the weighted normalized sums.
inline double scalar_ranking_loss(const Matrix& h, const Graph& g,
                                  const std::vector<int>& pivot_src,
                                  const std::vector<int>& pivot_dst, const Vector& w,
                                  double gamma_hm, double gamma_ht, double eps_w) {
  double num_hm = 0.0, num_ht = 0.0, sum_w = 0.0, sum_wc = 0.0;
  for (std::size_t e = 0; e < g.edges.size(); ++e) {
    auto [i, j] = g.edges[e];
    double s_edge = cosine(h.row(i), h.row(j));
    double s_pivot = cosine(h.row(pivot_src[e]), h.row(pivot_dst[e]));
    double r_hm = std::max(s_pivot - s_edge + gamma_hm, 0.0);
    double r_ht = std::max(s_edge - s_pivot + gamma_ht, 0.0);
    num_hm += w[static_cast<Eigen::Index>(e)] * r_hm;
    num_ht += (1.0 - w[static_cast<Eigen::Index>(e)]) * r_ht;
    sum_w += w[static_cast<Eigen::Index>(e)];
    sum_wc += 1.0 - w[static_cast<Eigen::Index>(e)];
  }
  return num_hm / std::max(sum_w, eps_w) + num_ht / std::max(sum_wc, eps_w);
}

// Literal full-batch contrastive loss: double loop over nodes, denominators
// over all other nodes, positives over the neighbor sets.
inline double scalar_contrastive_loss(const Matrix& z_hm, const Matrix& z_ht,
                                      const std::vector<std::vector<int>>& neighbors,
                                      double tau_c) {
  const Eigen::Index n = z_hm.rows();
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double den_hm = 0.0, den_ht = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) {
      if (k == i) continue;
      den_hm += std::exp(cosine(z_hm.row(i), z_ht.row(k)) / tau_c);
      den_ht += std::exp(cosine(z_ht.row(i), z_hm.row(k)) / tau_c);
    }
    double inner = 0.0;
    const auto& nbr = neighbors[static_cast<std::size_t>(i)];
    for (int j : nbr) {
      inner += std::log(std::exp(cosine(z_hm.row(i), z_ht.row(j)) / tau_c) / den_hm);
      inner += std::log(std::exp(cosine(z_ht.row(i), z_hm.row(j)) / tau_c) / den_ht);
    }
    total += inner / (2.0 * static_cast<double>(nbr.size()));
  }
  return -total / static_cast<double>(n);
}

// Scalar recomputation of the symmetric edge logit for one edge given the
// discriminator weights (single hidden layer + readout), kept free of the
// tape machinery.
inline double scalar_edge_logit(const Eigen::RowVectorXd& xi, const Eigen::RowVectorXd& si,
                                const Eigen::RowVectorXd& xj, const Eigen::RowVectorXd& sj,
                                const Matrix& w1, const Matrix& b1, const Matrix& w2,
                                const Matrix& b2) {
  Eigen::RowVectorXd in_i(xi.size() + si.size());
  in_i << xi, si;
  Eigen::RowVectorXd in_j(xj.size() + sj.size());
  in_j << xj, sj;
  Eigen::RowVectorXd hi = ((in_i * w1) + b1.row(0)).cwiseMax(0.0);
  Eigen::RowVectorXd hj = ((in_j * w1) + b1.row(0)).cwiseMax(0.0);
  auto readout = [&](const Eigen::RowVectorXd& a, const Eigen::RowVectorXd& b) {
    Eigen::RowVectorXd cat(a.size() + b.size());
    cat << a, b;
    return (cat * w2)(0, 0) + b2(0, 0);
  };
  return 0.5 * (readout(hi, hj) + readout(hj, hi));
}

// Seeded random test graph: Erdos-Renyi-ish with Gaussian features.
inline Graph random_graph(int n, int d_f, double edge_prob, std::uint64_t seed,
                          bool with_labels = false, int classes = 2) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<std::pair<std::int64_t, std::int64_t>> edges;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (coin(rng) < edge_prob) edges.emplace_back(i, j);
    }
  }
  // Keep every node attached so degree-related paths stay generic.
  for (int i = 1; i < n; ++i) {
    edges.emplace_back(i - 1, i);
  }
  Matrix x(n, d_f);
  for (int i = 0; i < n; ++i) {
    for (int c = 0; c < d_f; ++c) x(i, c) = gauss(rng);
  }
  std::vector<int> labels;
  if (with_labels) {
    labels.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) labels[static_cast<std::size_t>(i)] = i % classes;
  }
  return greet::build_graph(edges, std::move(x), std::move(labels));
}

inline Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed,
                            double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, scale);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = gauss(rng);
  }
  return m;
}

}  // namespace oracle
