#include "greet/graph.hpp"

#include "oracle.hpp"

#include <doctest.h>

using namespace greet;

TEST_SUITE_BEGIN("graphcore");

namespace {

Graph two_node_graph() {
  Matrix x(2, 2);
  x << 1.0, 0.0, 0.0, 1.0;
  return build_graph({{0, 1}}, x);
}

Graph triangle_graph(std::vector<int> labels = {}) {
  Matrix x = Matrix::Identity(3, 3);
  return build_graph({{0, 1}, {1, 2}, {0, 2}}, x, std::move(labels));
}

}  // namespace

TEST_CASE("build_graph symmetrizes a single edge") {
  Graph g = two_node_graph();
  CHECK(g.n == 2);
  CHECK(g.m == 1);
  CHECK(g.adj.nnz() == 2);
  CHECK(g.adj.coeff(0, 1) == 1.0);
  CHECK(g.adj.coeff(1, 0) == 1.0);
  CHECK(g.adj.coeff(0, 0) == 0.0);
}

TEST_CASE("build_graph drops self-loops and merges duplicates") {
  Matrix x = Matrix::Zero(2, 1);
  Graph g = build_graph({{0, 1}, {1, 0}, {0, 0}}, x);
  CHECK(g.m == 1);
  CHECK(g.adj.nnz() == 2);
}

TEST_CASE("build_graph rejects bad input") {
  Matrix x = Matrix::Zero(2, 1);
  CHECK_THROWS_AS(build_graph({{0, 2}}, x), DataError);
  CHECK_THROWS_AS(build_graph({{-1, 1}}, x), DataError);
  Matrix bad = x;
  bad(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(build_graph({{0, 1}}, bad), DataError);
  CHECK_THROWS_AS(build_graph({{0, 1}}, x, {0, 1, 0}), DataError);
  Splits s;
  s.train = {0};
  s.val = {0};
  CHECK_THROWS_AS(build_graph({{0, 1}}, x, {}, s), DataError);
  Splits oob;
  oob.test = {5};
  CHECK_THROWS_AS(build_graph({{0, 1}}, x, {}, oob), DataError);
}

TEST_CASE("CSR validation rejects malformed structure") {
  CHECK_THROWS_AS(SparsePattern::from_csr(2, 2, {0, 2, 1}, {0, 1}), DataError);
  CHECK_THROWS_AS(SparsePattern::from_csr(2, 2, {0, 2, 2}, {1, 0}), DataError);  // unsorted row
  CHECK_THROWS_AS(SparsePattern::from_csr(2, 2, {0, 1, 2}, {0, 5}), DataError);
  CHECK_THROWS_AS(SparsePattern::from_entries(2, 2, {{0, 1}, {0, 1}}), DataError);
}

TEST_CASE("sym_norm_adjacency on a unit edge gives entries 1") {
  Graph g = two_node_graph();
  SparseMatrix norm = sym_norm_adjacency(g.adj, kDegreeEps);
  CHECK(norm.coeff(0, 1) == doctest::Approx(1.0));
  CHECK(norm.coeff(1, 0) == doctest::Approx(1.0));
}

TEST_CASE("sym_norm_adjacency on a unit triangle gives 0.5 off-diagonal") {
  Graph g = triangle_graph();
  SparseMatrix norm = sym_norm_adjacency(g.adj, kDegreeEps);
  CHECK(norm.coeff(0, 1) == doctest::Approx(0.5));
  CHECK(norm.coeff(2, 1) == doctest::Approx(0.5));
}

TEST_CASE("sym_norm_adjacency clamps zero degrees") {
  Graph g = two_node_graph();
  SparseMatrix zero(g.adj.pattern, Vector::Zero(2));
  SparseMatrix norm = sym_norm_adjacency(zero, 1e-10);
  CHECK(norm.coeff(0, 1) == 0.0);
  CHECK(norm.coeff(1, 0) == 0.0);
}

TEST_CASE("sym_norm_adjacency rejects negative or asymmetric input") {
  Graph g = two_node_graph();
  Vector neg(2);
  neg << -1.0, -1.0;
  CHECK_THROWS_AS(sym_norm_adjacency(SparseMatrix(g.adj.pattern, neg), 1e-10), DataError);
  Vector asym(2);
  asym << 1.0, 2.0;
  CHECK_THROWS_AS(sym_norm_adjacency(SparseMatrix(g.adj.pattern, asym), 1e-10), DataError);
  CHECK_THROWS_AS(sym_norm_adjacency(g.adj, 0.0), DataError);
}

TEST_CASE("sym_norm_adjacency matches the dense oracle on random graphs") {
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    Graph g = oracle::random_graph(5 + static_cast<int>(seed) * 6, 3, 0.2, seed);
    // random symmetric nonnegative weights per undirected edge
    std::mt19937_64 rng(seed + 99);
    std::uniform_real_distribution<double> unif(0.1, 2.0);
    Vector w(g.m);
    for (Eigen::Index e = 0; e < g.m; ++e) w[e] = unif(rng);
    Vector values(g.adj.nnz());
    for (std::int64_t e = 0; e < g.adj.nnz(); ++e) values[e] = w[g.entry_edge[e]];
    SparseMatrix weighted(g.adj.pattern, values);
    Matrix dense = oracle::dense_sym_norm(weighted.to_dense(), kDegreeEps);
    Matrix got = sym_norm_adjacency(weighted, kDegreeEps).to_dense();
    CHECK((got - dense).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("regular graphs normalize to 1/d off-diagonal") {
  // 4-cycle: every node has degree 2.
  Matrix x = Matrix::Zero(4, 1);
  Graph g = build_graph({{0, 1}, {1, 2}, {2, 3}, {3, 0}}, x);
  SparseMatrix norm = sym_norm_adjacency(g.adj, kDegreeEps);
  for (std::int64_t e = 0; e < norm.nnz(); ++e) {
    CHECK(norm.values[e] == doctest::Approx(0.5));
  }
}

TEST_CASE("hp_laplacian with alpha 0 is the identity") {
  Graph g = triangle_graph();
  SparseMatrix lap = hp_laplacian(g.adj, 0.0, kDegreeEps);
  Matrix dense = lap.to_dense();
  CHECK((dense - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("hp_laplacian on a 2-node unit edge, alpha 0.5") {
  Graph g = two_node_graph();
  Matrix dense = hp_laplacian(g.adj, 0.5, kDegreeEps).to_dense();
  Matrix expect(2, 2);
  expect << 1.0, -0.5, -0.5, 1.0;
  CHECK((dense - expect).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("hp_laplacian triangle alpha 1 matches the dense oracle") {
  Graph g = triangle_graph();
  Matrix dense = hp_laplacian(g.adj, 1.0, kDegreeEps).to_dense();
  Matrix expect =
      Matrix::Identity(3, 3) - 1.0 * oracle::dense_sym_norm(g.adj.to_dense(), kDegreeEps);
  CHECK((dense - expect).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(dense(0, 0) == doctest::Approx(1.0));
  CHECK(dense(0, 1) == doctest::Approx(-0.5));
}

TEST_CASE("hp_laplacian stores the diagonal explicitly") {
  Graph g = two_node_graph();
  SparseMatrix lap = hp_laplacian(g.adj, 0.3, kDegreeEps);
  CHECK(lap.nnz() == 4);  // 2 off-diagonal + 2 diagonal
  CHECK_THROWS_AS(hp_laplacian(g.adj, 1.5, kDegreeEps), DataError);
}

TEST_CASE("edge and node homophily on the labeled triangle") {
  Graph g = triangle_graph({0, 0, 1});
  CHECK(edge_homophily(g) == doctest::Approx(1.0 / 3.0));
  CHECK(node_homophily(g) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("homophily equals 1 for uniform labels and stays in [0,1]") {
  Graph g = triangle_graph({2, 2, 2});
  CHECK(edge_homophily(g) == 1.0);
  CHECK(node_homophily(g) == 1.0);
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    Graph r = oracle::random_graph(20, 2, 0.2, seed, /*with_labels=*/true, 3);
    double he = edge_homophily(r);
    double hn = node_homophily(r);
    CHECK(he >= 0.0);
    CHECK(he <= 1.0);
    CHECK(hn >= 0.0);
    CHECK(hn <= 1.0);
  }
}

TEST_CASE("homophily requires labels; isolated nodes contribute zero") {
  Graph g = triangle_graph();
  CHECK_THROWS_AS(edge_homophily(g), DataError);
  CHECK_THROWS_AS(node_homophily(g), DataError);
  // node 2 isolated: contributes 0 to the node average
  Matrix x = Matrix::Zero(3, 1);
  Graph iso = build_graph({{0, 1}}, x, {0, 0, 0});
  CHECK(node_homophily(iso) == doctest::Approx(2.0 / 3.0));
  CHECK(edge_homophily(iso) == 1.0);
}

TEST_CASE("spmm agrees with dense multiply") {
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    Graph g = oracle::random_graph(17, 2, 0.3, seed);
    Matrix x = oracle::random_matrix(17, 5, seed + 7);
    Matrix got = spmm(g.adj, x);
    Matrix expect = g.adj.to_dense() * x;
    CHECK((got - expect).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_SUITE_END();
