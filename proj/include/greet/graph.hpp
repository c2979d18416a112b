#pragma once

#include "greet/sparse.hpp"
#include "greet/util.hpp"

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

namespace greet {

struct Splits {
  std::vector<int> train;
  std::vector<int> val;
  std::vector<int> test;
  bool present() const { return !(train.empty() && val.empty() && test.empty()); }
};

// Undirected graph with dense node features. The adjacency stores each
// undirected edge in both directions with value 1; `edges` is the canonical
// (i<j, sorted) undirected edge list and `entry_edge[e]` maps CSR entry e to
// its undirected edge id.
struct Graph {
  int n = 0;
  std::int64_t m = 0;  // undirected edge count; adjacency holds 2m entries
  SparseMatrix adj;
  std::vector<std::pair<std::int32_t, std::int32_t>> edges;
  std::vector<std::int64_t> entry_edge;
  Matrix features;
  std::vector<int> labels;  // empty when absent
  Splits splits;

  bool has_labels() const { return !labels.empty(); }
  std::int64_t degree(int i) const { return adj.row_ptr()[i + 1] - adj.row_ptr()[i]; }
};

// Homophilic/heterophilic view pair over one graph's sparsity pattern.
// `weights[k]` is the soft weight of undirected edge k; hm holds w on both
// directions of that edge, ht holds 1-w, so stored entries sum to 1 exactly.
struct DualViews {
  SparseMatrix hm;
  SparseMatrix ht;
  Vector weights;
};

// Symmetrizes, drops self-loops, merges duplicates. Node count is taken from
// the feature matrix row count.
Graph build_graph(const std::vector<std::pair<std::int64_t, std::int64_t>>& edge_list,
                  Matrix features, std::vector<int> labels = {}, Splits splits = {});

// Fraction of undirected edges whose endpoints share a label.
double edge_homophily(const Graph& g);

// Mean over nodes of the same-label fraction among neighbors; isolated nodes
// contribute 0.
double node_homophily(const Graph& g);

inline constexpr double kDegreeEps = 1e-10;

}  // namespace greet
