#include "greet/preprocess.hpp"

#include "oracle.hpp"

#include <doctest.h>

#include <cstdio>
#include <filesystem>

using namespace greet;

TEST_SUITE_BEGIN("preprocess");

TEST_CASE("structural encoding of the 2-node path alternates 0/1") {
  Matrix x = Matrix::Zero(2, 1);
  Graph g = build_graph({{0, 1}}, x);
  StructuralEncoding enc = structural_encoding(g, 3);
  for (int i = 0; i < 2; ++i) {
    CHECK(enc.S(i, 0) == doctest::Approx(0.0));
    CHECK(enc.S(i, 1) == doctest::Approx(1.0));
    CHECK(enc.S(i, 2) == doctest::Approx(0.0));
  }
}

TEST_CASE("structural encoding of the triangle is [0, 0.5, 0.25]") {
  Matrix x = Matrix::Zero(3, 1);
  Graph g = build_graph({{0, 1}, {1, 2}, {0, 2}}, x);
  StructuralEncoding enc = structural_encoding(g, 3);
  Matrix expect = oracle::dense_walk_diagonals(g.adj.to_dense(), 3);
  CHECK((enc.S - expect).cwiseAbs().maxCoeff() < 1e-12);
  for (int i = 0; i < 3; ++i) {
    CHECK(enc.S(i, 0) == doctest::Approx(0.0));
    CHECK(enc.S(i, 1) == doctest::Approx(0.5));
    CHECK(enc.S(i, 2) == doctest::Approx(0.25));
  }
}

TEST_CASE("structural encoding matches the dense power oracle on random graphs") {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    int n = 10 + static_cast<int>(seed) * 8;  // up to 50
    Graph g = oracle::random_graph(n, 2, 0.15, seed);
    StructuralEncoding enc = structural_encoding(g, 6);
    Matrix expect = oracle::dense_walk_diagonals(g.adj.to_dense(), 6);
    CHECK((enc.S - expect).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(enc.S.minCoeff() >= 0.0);
    CHECK(enc.S.maxCoeff() <= 1.0);
  }
}

TEST_CASE("bipartite graphs have exactly zero odd-power returns") {
  // 6-cycle is bipartite and connected.
  Matrix x = Matrix::Zero(6, 1);
  Graph g = build_graph({{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {5, 0}}, x);
  StructuralEncoding enc = structural_encoding(g, 5);
  for (int i = 0; i < 6; ++i) {
    CHECK(enc.S(i, 0) == 0.0);  // t=1
    CHECK(enc.S(i, 2) == 0.0);  // t=3
    CHECK(enc.S(i, 4) == 0.0);  // t=5
  }
}

TEST_CASE("isolated nodes get zero encoding rows; invalid d_s rejected") {
  Matrix x = Matrix::Zero(3, 1);
  Graph g = build_graph({{0, 1}}, x);
  StructuralEncoding enc = structural_encoding(g, 4);
  CHECK(enc.S.row(2).cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(structural_encoding(g, 0), DataError);
}

TEST_CASE("knn exact mode on the stated example with id tie-break") {
  Matrix x(3, 2);
  x << 1, 0, 1, 0, 0, 1;
  NeighborSets sets = knn_neighbors(x, 1, KnnMode::exact, 0, 0);
  CHECK(sets.sets[0] == std::vector<int>{1});
  CHECK(sets.sets[1] == std::vector<int>{0});
  CHECK(sets.sets[2] == std::vector<int>{0});  // tie at similarity 0 -> smaller id
}

TEST_CASE("knn k=0 degenerates to the self-only set") {
  Matrix x = oracle::random_matrix(5, 3, 1);
  NeighborSets sets = knn_neighbors(x, 0, KnnMode::exact, 0, 0);
  for (int i = 0; i < 5; ++i) CHECK(sets.sets[i] == std::vector<int>{i});
}

TEST_CASE("approx knn with a full candidate budget equals exact") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    int n = 12 + static_cast<int>(seed) * 9;
    Matrix x = oracle::random_matrix(n, 4, seed);
    NeighborSets exact = knn_neighbors(x, 3, KnnMode::exact, 0, 0);
    NeighborSets approx = knn_neighbors(x, 3, KnnMode::approx, n - 1, seed + 5);
    for (int i = 0; i < n; ++i) CHECK(exact.sets[i] == approx.sets[i]);
  }
}

TEST_CASE("approx knn rejects budgets below k") {
  Matrix x = oracle::random_matrix(10, 3, 2);
  CHECK_THROWS_AS(knn_neighbors(x, 5, KnnMode::approx, 4, 0), DataError);
  CHECK_THROWS_AS(knn_neighbors(x, 10, KnnMode::exact, 0, 0), DataError);  // k >= n
}

TEST_CASE("knn is permutation-equivariant") {
  const int n = 9;
  Matrix x = oracle::random_matrix(n, 4, 3);
  std::vector<int> perm{4, 7, 0, 2, 8, 1, 6, 3, 5};
  Matrix xp(n, 4);
  for (int i = 0; i < n; ++i) xp.row(perm[i]) = x.row(i);
  NeighborSets base = knn_neighbors(x, 3, KnnMode::exact, 0, 0);
  NeighborSets mapped = knn_neighbors(xp, 3, KnnMode::exact, 0, 0);
  for (int i = 0; i < n; ++i) {
    std::vector<int> expect;
    for (int j : base.sets[i]) expect.push_back(perm[j]);
    std::sort(expect.begin(), expect.end());
    std::vector<int> got = mapped.sets[perm[i]];
    std::sort(got.begin(), got.end());
    CHECK(got == expect);
  }
}

TEST_CASE("knn treats zero-norm rows as similarity zero") {
  Matrix x(4, 2);
  x << 0, 0, 1, 0, 0.9, 0.1, -1, 0;
  NeighborSets sets = knn_neighbors(x, 2, KnnMode::exact, 0, 0);
  // Node 0 has a zero row: every similarity is 0, ties break by id.
  CHECK(sets.sets[0] == std::vector<int>{1, 2});
}

TEST_CASE("both preprocessing passes are deterministic") {
  Graph g = oracle::random_graph(30, 4, 0.2, 11);
  StructuralEncoding a = structural_encoding(g, 8);
  StructuralEncoding b = structural_encoding(g, 8);
  CHECK(a.S == b.S);
  NeighborSets s1 = knn_neighbors(g.features, 4, KnnMode::approx, 16, 42);
  NeighborSets s2 = knn_neighbors(g.features, 4, KnnMode::approx, 16, 42);
  for (int i = 0; i < g.n; ++i) CHECK(s1.sets[i] == s2.sets[i]);
}

TEST_CASE("cache files round-trip and reject stale hashes") {
  namespace fs = std::filesystem;
  std::string dir = (fs::temp_directory_path() / "greet_cache_test").string();
  fs::create_directories(dir);
  Graph g = oracle::random_graph(15, 3, 0.25, 5);
  StructuralEncoding enc = structural_encoding(g, 4);
  std::string key = structenc_cache_key(g, 4);
  save_structural_encoding(dir, enc, key);
  StructuralEncoding loaded;
  REQUIRE(load_structural_encoding(dir, key, &loaded));
  CHECK((enc.S - loaded.S).cwiseAbs().maxCoeff() == 0.0);
  CHECK_FALSE(load_structural_encoding(dir, structenc_cache_key(g, 5), &loaded));

  NeighborSets sets = knn_neighbors(g.features, 3, KnnMode::exact, 0, 0);
  std::string knn_key = knn_cache_key(g.features, 3, KnnMode::exact, 0, 0);
  save_neighbor_sets(dir, sets, knn_key);
  NeighborSets loaded_sets;
  REQUIRE(load_neighbor_sets(dir, knn_key, &loaded_sets));
  CHECK(loaded_sets.k == sets.k);
  for (int i = 0; i < g.n; ++i) CHECK(loaded_sets.sets[i] == sets.sets[i]);
  fs::remove_all(dir);
}

TEST_SUITE_END();
