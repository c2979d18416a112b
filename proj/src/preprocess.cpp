#include "greet/preprocess.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

namespace greet {

StructuralEncoding structural_encoding(const Graph& g, int d_s) {
  if (d_s < 1) throw DataError("structural_encoding: d_s must be >= 1");
  StructuralEncoding enc;
  enc.S = Matrix::Zero(g.n, d_s);

  Vector inv_deg(g.n);
  for (int i = 0; i < g.n; ++i) {
    std::int64_t d = g.degree(i);
    inv_deg[i] = d > 0 ? 1.0 / static_cast<double>(d) : 0.0;
  }
  const auto& rp = g.adj.row_ptr();
  const auto& ci = g.adj.col_idx();

  parallel_for(g.n, [&](std::int64_t lo, std::int64_t hi) {
    Vector v(g.n), next(g.n);
    for (std::int64_t src = lo; src < hi; ++src) {
      if (g.degree(static_cast<int>(src)) == 0) continue;  // zero row
      v.setZero();
      v[src] = 1.0;
      for (int t = 0; t < d_s; ++t) {
        // next = A D^{-1} v
        for (int i = 0; i < g.n; ++i) {
          double acc = 0.0;
          for (std::int64_t e = rp[i]; e < rp[i + 1]; ++e) acc += v[ci[e]] * inv_deg[ci[e]];
          next[i] = acc;
        }
        v.swap(next);
        enc.S(src, t) = v[src];
      }
    }
  });
  return enc;
}

namespace {

// Top-k by (similarity desc, id asc) among candidates, self excluded.
std::vector<int> select_top_k(const std::vector<std::pair<double, int>>& scored, int k) {
  std::vector<std::pair<double, int>> pool = scored;
  auto cmp = [](const std::pair<double, int>& a, const std::pair<double, int>& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  };
  int take = std::min<int>(k, static_cast<int>(pool.size()));
  std::partial_sort(pool.begin(), pool.begin() + take, pool.end(), cmp);
  std::vector<int> out(static_cast<std::size_t>(take));
  for (int t = 0; t < take; ++t) out[t] = pool[t].second;
  return out;
}

}  // namespace

NeighborSets knn_neighbors(const Matrix& features, int k, KnnMode mode, int candidate_budget,
                           std::uint64_t rng_seed) {
  const int n = static_cast<int>(features.rows());
  if (k >= n) throw DataError("knn_neighbors: k must be smaller than the node count");
  if (mode == KnnMode::approx && candidate_budget < k) {
    throw DataError("knn_neighbors: candidate budget smaller than k");
  }
  NeighborSets out;
  out.k = k;
  out.sets.resize(static_cast<std::size_t>(n));
  if (k == 0) {
    for (int i = 0; i < n; ++i) out.sets[i] = {i};
    return out;
  }

  Matrix normed = features;
  std::vector<char> zero_row(static_cast<std::size_t>(n), 0);
  for (int i = 0; i < n; ++i) {
    double nrm = normed.row(i).norm();
    if (nrm > 0.0) {
      normed.row(i) /= nrm;
    } else {
      zero_row[i] = 1;  // cosine taken as 0 against everything
      normed.row(i).setZero();
    }
  }

  if (mode == KnnMode::exact) {
    constexpr int kBlock = 512;
    parallel_for((n + kBlock - 1) / kBlock, [&](std::int64_t blo, std::int64_t bhi) {
      std::vector<std::pair<double, int>> scored;
      for (std::int64_t blk = blo; blk < bhi; ++blk) {
        int r0 = static_cast<int>(blk) * kBlock;
        int r1 = std::min(n, r0 + kBlock);
        Matrix sims = normed.middleRows(r0, r1 - r0) * normed.transpose();
        for (int i = r0; i < r1; ++i) {
          scored.clear();
          scored.reserve(static_cast<std::size_t>(n) - 1);
          for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            double s = zero_row[i] || zero_row[j] ? 0.0 : sims(i - r0, j);
            scored.emplace_back(s, j);
          }
          out.sets[i] = select_top_k(scored, k);
        }
      }
    });
    return out;
  }

  // Approx mode: uniform candidate sample per node, seeded per node so the
  // result is independent of scheduling.
  parallel_for(n, [&](std::int64_t lo, std::int64_t hi) {
    std::vector<std::pair<double, int>> scored;
    std::vector<int> ids(static_cast<std::size_t>(n));
    for (std::int64_t i = lo; i < hi; ++i) {
      std::mt19937_64 rng(derive_seed(rng_seed, rng_tag::knn, static_cast<std::uint64_t>(i)));
      std::iota(ids.begin(), ids.end(), 0);
      std::swap(ids[i], ids[n - 1]);  // keep self out of the candidate pool
      int pool = n - 1;
      int budget = std::min(candidate_budget, pool);
      for (int t = 0; t < budget; ++t) {
        std::uniform_int_distribution<int> pick(t, pool - 1);
        std::swap(ids[t], ids[pick(rng)]);
      }
      scored.clear();
      for (int t = 0; t < budget; ++t) {
        int j = ids[t];
        double s = zero_row[i] || zero_row[j] ? 0.0 : normed.row(i).dot(normed.row(j));
        scored.emplace_back(s, j);
      }
      out.sets[i] = select_top_k(scored, k);
    }
  });
  return out;
}

// ---------------------------------------------------------------------------
// Caches

std::string structenc_cache_key(const Graph& g, int d_s) {
  Fnv1a h;
  h.update_pod(g.n);
  h.update_pod(g.m);
  for (const auto& [a, b] : g.edges) {
    h.update_pod(a);
    h.update_pod(b);
  }
  h.update_pod(d_s);
  return h.hex_digest();
}

std::string knn_cache_key(const Matrix& features, int k, KnnMode mode, int candidate_budget,
                          std::uint64_t rng_seed) {
  Fnv1a h;
  auto rows = static_cast<std::int64_t>(features.rows());
  auto cols = static_cast<std::int64_t>(features.cols());
  h.update_pod(rows);
  h.update_pod(cols);
  h.update(features.data(), sizeof(double) * static_cast<std::size_t>(features.size()));
  h.update_pod(k);
  int m = mode == KnnMode::exact ? 0 : 1;
  h.update_pod(m);
  if (mode == KnnMode::approx) {
    h.update_pod(candidate_budget);
    h.update_pod(rng_seed);
  }
  return h.hex_digest();
}

namespace {

void write_manifest(const std::string& path, const std::string& cache_key) {
  nlohmann::json j;
  j["hash"] = cache_key;
  atomic_write_file(path, j.dump() + "\n");
}

bool manifest_matches(const std::string& path, const std::string& cache_key) {
  if (!file_exists(path)) return false;
  auto j = nlohmann::json::parse(read_file(path), nullptr, false);
  return j.is_object() && j.contains("hash") && j["hash"] == cache_key;
}

}  // namespace

void save_structural_encoding(const std::string& dir, const StructuralEncoding& enc,
                              const std::string& cache_key) {
  std::ostringstream ss;
  for (int i = 0; i < enc.S.rows(); ++i) {
    for (int t = 0; t < enc.S.cols(); ++t) {
      if (t > 0) ss << '\t';
      ss << format_double(enc.S(i, t));
    }
    ss << '\n';
  }
  atomic_write_file(dir + "/structenc.tsv", ss.str());
  write_manifest(dir + "/structenc.manifest.json", cache_key);
}

bool load_structural_encoding(const std::string& dir, const std::string& cache_key,
                              StructuralEncoding* out) {
  if (!manifest_matches(dir + "/structenc.manifest.json", cache_key)) return false;
  if (!file_exists(dir + "/structenc.tsv")) return false;
  std::istringstream in(read_file(dir + "/structenc.tsv"));
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::vector<double> row;
    double v;
    while (ls >> v) row.push_back(v);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) return false;
  out->S = Matrix(rows.size(), rows[0].size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows[0].size()) return false;
    for (std::size_t t = 0; t < rows[i].size(); ++t) out->S(i, t) = rows[i][t];
  }
  return true;
}

void save_neighbor_sets(const std::string& dir, const NeighborSets& sets,
                        const std::string& cache_key) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& s : sets.sets) arr.push_back(s);
  atomic_write_file(dir + "/knn.json", arr.dump() + "\n");
  nlohmann::json manifest;
  manifest["hash"] = cache_key;
  manifest["k"] = sets.k;
  atomic_write_file(dir + "/knn.manifest.json", manifest.dump() + "\n");
}

bool load_neighbor_sets(const std::string& dir, const std::string& cache_key, NeighborSets* out) {
  const std::string mpath = dir + "/knn.manifest.json";
  if (!file_exists(mpath) || !file_exists(dir + "/knn.json")) return false;
  auto manifest = nlohmann::json::parse(read_file(mpath), nullptr, false);
  if (!manifest.is_object() || !manifest.contains("hash") || manifest["hash"] != cache_key) {
    return false;
  }
  auto arr = nlohmann::json::parse(read_file(dir + "/knn.json"), nullptr, false);
  if (!arr.is_array()) return false;
  out->k = manifest.value("k", 0);
  out->sets.clear();
  for (const auto& s : arr) out->sets.push_back(s.get<std::vector<int>>());
  return true;
}

}  // namespace greet
