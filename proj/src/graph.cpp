#include "greet/graph.hpp"

#include <algorithm>
#include <unordered_set>

namespace greet {

Graph build_graph(const std::vector<std::pair<std::int64_t, std::int64_t>>& edge_list,
                  Matrix features, std::vector<int> labels, Splits splits) {
  Graph g;
  g.n = static_cast<int>(features.rows());
  if (!features.allFinite()) throw DataError("build_graph: non-finite feature value");
  if (!labels.empty() && static_cast<int>(labels.size()) != g.n) {
    throw DataError("build_graph: label count does not match node count");
  }

  std::vector<std::pair<std::int32_t, std::int32_t>> und;
  und.reserve(edge_list.size());
  for (const auto& [a, b] : edge_list) {
    if (a < 0 || a >= g.n || b < 0 || b >= g.n) {
      throw DataError("build_graph: edge endpoint out of range: (" + std::to_string(a) + "," +
                      std::to_string(b) + ")");
    }
    if (a == b) continue;  // self-loops dropped
    auto lo = static_cast<std::int32_t>(std::min(a, b));
    auto hi = static_cast<std::int32_t>(std::max(a, b));
    und.emplace_back(lo, hi);
  }
  std::sort(und.begin(), und.end());
  und.erase(std::unique(und.begin(), und.end()), und.end());
  g.edges = und;
  g.m = static_cast<std::int64_t>(und.size());

  std::vector<std::pair<std::int32_t, std::int32_t>> entries;
  entries.reserve(und.size() * 2);
  for (const auto& [i, j] : und) {
    entries.emplace_back(i, j);
    entries.emplace_back(j, i);
  }
  auto pattern = SparsePattern::from_entries(g.n, g.n, std::move(entries));
  g.adj = SparseMatrix(pattern, Vector::Ones(pattern->nnz()));

  // Map each CSR entry to its undirected edge id (edges are sorted, so the
  // canonical (min,max) pair can be found by binary search).
  g.entry_edge.resize(static_cast<std::size_t>(pattern->nnz()));
  for (int i = 0; i < g.n; ++i) {
    for (std::int64_t e = pattern->row_ptr[i]; e < pattern->row_ptr[i + 1]; ++e) {
      int j = pattern->col_idx[e];
      std::pair<std::int32_t, std::int32_t> key{std::min(i, j), std::max(i, j)};
      auto it = std::lower_bound(g.edges.begin(), g.edges.end(), key);
      g.entry_edge[e] = it - g.edges.begin();
    }
  }

  g.features = std::move(features);
  g.labels = std::move(labels);

  auto check_split = [&](const std::vector<int>& idx, const char* name) {
    for (int v : idx) {
      if (v < 0 || v >= g.n) {
        throw DataError(std::string("build_graph: split '") + name + "' index out of range");
      }
    }
  };
  check_split(splits.train, "train");
  check_split(splits.val, "val");
  check_split(splits.test, "test");
  if (splits.present()) {
    std::unordered_set<int> seen;
    for (const auto* part : {&splits.train, &splits.val, &splits.test}) {
      for (int v : *part) {
        if (!seen.insert(v).second) throw DataError("build_graph: split sets are not disjoint");
      }
    }
  }
  g.splits = std::move(splits);
  return g;
}

double edge_homophily(const Graph& g) {
  if (!g.has_labels()) throw DataError("edge_homophily: graph has no labels");
  if (g.m == 0) return 0.0;
  std::int64_t same = 0;
  for (const auto& [i, j] : g.edges) {
    if (g.labels[i] == g.labels[j]) ++same;
  }
  return static_cast<double>(same) / static_cast<double>(g.m);
}

double node_homophily(const Graph& g) {
  if (!g.has_labels()) throw DataError("node_homophily: graph has no labels");
  if (g.n == 0) return 0.0;
  double acc = 0.0;
  for (int i = 0; i < g.n; ++i) {
    std::int64_t deg = g.degree(i);
    if (deg == 0) continue;
    std::int64_t same = 0;
    for (std::int64_t e = g.adj.row_ptr()[i]; e < g.adj.row_ptr()[i + 1]; ++e) {
      if (g.labels[g.adj.col_idx()[e]] == g.labels[i]) ++same;
    }
    acc += static_cast<double>(same) / static_cast<double>(deg);
  }
  return acc / g.n;
}

}  // namespace greet
