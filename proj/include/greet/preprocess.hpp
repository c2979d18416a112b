#pragma once

#include "greet/graph.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace greet {

// Per-node random-walk return probabilities: S(i, t-1) = (T^t)_ii for
// t = 1..d_s with T = A D^{-1}. Entries lie in [0,1]; isolated nodes get a
// zero row.
struct StructuralEncoding {
  Matrix S;
  int dims() const { return static_cast<int>(S.cols()); }
};

// For each node, the ids of its most feature-similar peers (self excluded),
// |sets[i]| = min(k, n-1). k = 0 degenerates to the self-only set {i}.
struct NeighborSets {
  int k = 0;
  std::vector<std::vector<int>> sets;
};

enum class KnnMode { exact, approx };

// Computed by propagating one indicator vector per node through d_s sparse
// products; T^t is never materialized densely.
StructuralEncoding structural_encoding(const Graph& g, int d_s);

// Cosine top-k per node, ties broken by smaller id; zero-norm rows have
// similarity 0 to everything. Approx mode restricts each node's candidates
// to b_k uniformly sampled nodes.
NeighborSets knn_neighbors(const Matrix& features, int k, KnnMode mode, int candidate_budget,
                           std::uint64_t rng_seed);

// Cache files: structenc.tsv / knn.json plus a manifest sidecar keyed by a
// content hash of the inputs. Loads return false on missing file or hash
// mismatch.
std::string structenc_cache_key(const Graph& g, int d_s);
std::string knn_cache_key(const Matrix& features, int k, KnnMode mode, int candidate_budget,
                          std::uint64_t rng_seed);
void save_structural_encoding(const std::string& dir, const StructuralEncoding& enc,
                              const std::string& cache_key);
bool load_structural_encoding(const std::string& dir, const std::string& cache_key,
                              StructuralEncoding* out);
void save_neighbor_sets(const std::string& dir, const NeighborSets& sets,
                        const std::string& cache_key);
bool load_neighbor_sets(const std::string& dir, const std::string& cache_key, NeighborSets* out);

}  // namespace greet
