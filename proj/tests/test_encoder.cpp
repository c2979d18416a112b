#include "greet/encoder.hpp"

#include "oracle.hpp"

#include <doctest.h>

using namespace greet;

TEST_SUITE_BEGIN("encoder");

namespace {

// Single-layer identity MLP over d dims.
Mlp identity_mlp(int d) {
  Mlp mlp;
  LinearLayer layer;
  layer.weight = Matrix::Identity(d, d);
  layer.bias = Matrix::Zero(1, d);
  mlp.layers.push_back(std::move(layer));
  return mlp;
}

Var unit_view_values(Tape& t, const Graph& g) {
  return t.constant(Matrix::Ones(g.adj.nnz(), 1));
}

}  // namespace

TEST_CASE("sgc on a 2-node unit edge permutes rows, twice restores them") {
  Matrix x(2, 2);
  x << 1.0, 2.0, 3.0, 4.0;
  Graph g = build_graph({{0, 1}}, x);
  Mlp id = identity_mlp(2);
  for (int L : {1, 2}) {
    Tape t;
    MlpVars mlp = register_mlp(t, id, false);
    Var h = sgc_encode(t.constant(x), mlp, g.adj.pattern, unit_view_values(t, g), L, kDegreeEps);
    Matrix expect = L == 1 ? Matrix(x.colwise().reverse()) : x;
    CHECK((t.value(h) - expect).cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("sgc with all-zero view weights collapses to zero") {
  Graph g = oracle::random_graph(6, 3, 0.4, 1);
  Tape t;
  MlpVars mlp = register_mlp(t, identity_mlp(3), false);
  Var vals = t.constant(Matrix::Zero(g.adj.nnz(), 1));
  Var h = sgc_encode(t.constant(g.features), mlp, g.adj.pattern, vals, 1, kDegreeEps);
  CHECK(t.value(h).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("sgc on the unit triangle averages the other two rows") {
  Matrix x = oracle::random_matrix(3, 2, 2);
  Graph g = build_graph({{0, 1}, {1, 2}, {0, 2}}, x);
  Tape t;
  MlpVars mlp = register_mlp(t, identity_mlp(2), false);
  Var h = sgc_encode(t.constant(x), mlp, g.adj.pattern, unit_view_values(t, g), 1, kDegreeEps);
  for (int i = 0; i < 3; ++i) {
    Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(2);
    for (int j = 0; j < 3; ++j) {
      if (j != i) mean += x.row(j);
    }
    mean /= 2.0;
    CHECK((t.value(h).row(i) - mean).cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("lapsgc with alpha 0 is bit-identical to the MLP output") {
  Graph g = oracle::random_graph(8, 4, 0.3, 3);
  std::mt19937_64 rng(4);
  Mlp mlp = make_mlp({4, 3, 3}, rng);
  Tape t;
  MlpVars vars = register_mlp(t, mlp, false);
  Var x = t.constant(g.features);
  Var h = lapsgc_encode(x, vars, g.adj.pattern, unit_view_values(t, g), 3, 0.0, kDegreeEps);
  Var plain = mlp_forward(x, vars);
  CHECK(t.value(h) == t.value(plain));
}

TEST_CASE("lapsgc on a 2-node unit edge with alpha 0.5") {
  Matrix x(2, 2);
  x << 1.0, -2.0, 0.5, 3.0;
  Graph g = build_graph({{0, 1}}, x);
  Tape t;
  MlpVars mlp = register_mlp(t, identity_mlp(2), false);
  Var h = lapsgc_encode(t.constant(x), mlp, g.adj.pattern, unit_view_values(t, g), 1, 0.5,
                        kDegreeEps);
  CHECK((t.value(h).row(0) - (x.row(0) - 0.5 * x.row(1))).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((t.value(h).row(1) - (x.row(1) - 0.5 * x.row(0))).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("lapsgc with alpha 1 annihilates constant signals on regular graphs") {
  Matrix x = Matrix::Ones(3, 2) * 2.5;
  Graph g = build_graph({{0, 1}, {1, 2}, {0, 2}}, x);
  Tape t;
  MlpVars mlp = register_mlp(t, identity_mlp(2), false);
  Var h = lapsgc_encode(t.constant(x), mlp, g.adj.pattern, unit_view_values(t, g), 1, 1.0,
                        kDegreeEps);
  CHECK(t.value(h).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("lapsgc matches repeated dense hp_laplacian application") {
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    Graph g = oracle::random_graph(10, 3, 0.3, seed);
    double alpha = 0.3 + 0.1 * static_cast<double>(seed);
    int L = 2;
    Tape t;
    MlpVars mlp = register_mlp(t, identity_mlp(3), false);
    Var h = lapsgc_encode(t.constant(g.features), mlp, g.adj.pattern, unit_view_values(t, g),
                          L, alpha, kDegreeEps);
    Matrix lap = hp_laplacian(g.adj, alpha, kDegreeEps).to_dense();
    Matrix expect = g.features;
    for (int l = 0; l < L; ++l) expect = (lap * expect).eval();
    CHECK((t.value(h) - expect).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("projection heads: zero single layer yields bias rows, identity is a no-op") {
  Matrix h = oracle::random_matrix(5, 3, 6);
  Tape t;
  Mlp zero;
  LinearLayer layer;
  layer.weight = Matrix::Zero(3, 2);
  layer.bias = oracle::random_matrix(1, 2, 7);
  zero.layers.push_back(layer);
  MlpVars zero_vars = register_mlp(t, zero, false);
  Var hz = project(t.input(h, false), zero_vars);
  for (int i = 0; i < 5; ++i) {
    CHECK((t.value(hz).row(i) - layer.bias.row(0)).cwiseAbs().maxCoeff() == 0.0);
  }
  MlpVars id_vars = register_mlp(t, identity_mlp(3), false);
  Var hi = project(t.input(h, false), id_vars);
  CHECK(t.value(hi) == h);
}

TEST_CASE("projection matches a scalar recomputation") {
  std::mt19937_64 rng(8);
  Mlp head = make_mlp({3, 4, 4}, rng);  // L_p = 2
  Matrix h = oracle::random_matrix(6, 3, 9);
  Tape t;
  MlpVars vars = register_mlp(t, head, false);
  Var z = project(t.input(h, false), vars);
  for (int i = 0; i < 6; ++i) {
    Eigen::RowVectorXd a = h.row(i) * head.layers[0].weight + head.layers[0].bias.row(0);
    a = a.cwiseMax(0.0);
    Eigen::RowVectorXd b = a * head.layers[1].weight + head.layers[1].bias.row(0);
    CHECK((t.value(z).row(i) - b).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("both encoders commute with node relabeling") {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    int n = 12 + static_cast<int>(seed) * 9;  // up to 30
    Graph g = oracle::random_graph(n, 3, 0.25, seed);
    std::mt19937_64 rng(seed + 50);
    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);

    Matrix xp(n, 3);
    for (int i = 0; i < n; ++i) xp.row(perm[static_cast<std::size_t>(i)]) = g.features.row(i);
    std::vector<std::pair<std::int64_t, std::int64_t>> relabeled;
    for (const auto& [a, b] : g.edges) {
      relabeled.emplace_back(perm[static_cast<std::size_t>(a)],
                             perm[static_cast<std::size_t>(b)]);
    }
    Graph gp = build_graph(relabeled, xp);

    std::mt19937_64 mlp_rng(seed + 60);
    Mlp enc_mlp = make_mlp({3, 4, 4}, mlp_rng);
    auto encode_both = [&](const Graph& graph) {
      Tape t;
      MlpVars vars = register_mlp(t, enc_mlp, false);
      Var ones = t.constant(Matrix::Ones(graph.adj.nnz(), 1));
      Var lo = sgc_encode(t.constant(graph.features), vars, graph.adj.pattern, ones, 2,
                          kDegreeEps);
      Var hi = lapsgc_encode(t.constant(graph.features), vars, graph.adj.pattern, ones, 2, 0.5,
                             kDegreeEps);
      return std::make_pair(t.value(lo), t.value(hi));
    };
    auto [lo, hi] = encode_both(g);
    auto [lop, hip] = encode_both(gp);
    for (int i = 0; i < n; ++i) {
      CHECK((lop.row(perm[static_cast<std::size_t>(i)]) - lo.row(i)).cwiseAbs().maxCoeff() <
            1e-12);
      CHECK((hip.row(perm[static_cast<std::size_t>(i)]) - hi.row(i)).cwiseAbs().maxCoeff() <
            1e-12);
    }
  }
}

TEST_CASE("fusion keeps the channel blocks intact") {
  Matrix a = oracle::random_matrix(4, 3, 10);
  Matrix b = oracle::random_matrix(4, 2, 11);
  DualRepresentation rep = fuse(a, b);
  CHECK(rep.h.leftCols(3) == rep.h_hm);
  CHECK(rep.h.rightCols(2) == rep.h_ht);
  CHECK(rep.channel_dim() == 3);
}

TEST_CASE("augmentation no-op at zero rates") {
  Graph g = oracle::random_graph(10, 4, 0.4, 12);
  ViewData out = augment_view(g.adj, g.features, 0.0, 0.0, 99);
  CHECK(out.a.to_dense() == g.adj.to_dense());
  CHECK(out.x == g.features);
}

TEST_CASE("edge dropping removes both directions and keeps symmetry") {
  Graph g = oracle::random_graph(20, 3, 0.3, 13);
  ViewData out = augment_view(g.adj, g.features, 0.0, 0.5, 7);
  CHECK(out.a.is_symmetric());
  CHECK(out.a.nnz() % 2 == 0);
  CHECK(out.a.nnz() < g.adj.nnz());
  // surviving entries keep their original values
  for (int i = 0; i < out.a.rows(); ++i) {
    for (std::int64_t e = out.a.row_ptr()[i]; e < out.a.row_ptr()[i + 1]; ++e) {
      CHECK(out.a.values[e] == g.adj.coeff(i, out.a.col_idx()[e]));
    }
  }
}

TEST_CASE("near-total edge dropping leaves almost nothing") {
  Graph g = oracle::random_graph(30, 2, 0.4, 14);
  ViewData out = augment_view(g.adj, g.features, 0.0, 0.999, 3);
  CHECK(out.a.nnz() <= g.adj.nnz() / 10);
}

TEST_CASE("surviving edge count stays within binomial bounds") {
  // m edges, p_e = 0.5: mean m/2, std sqrt(m)/2; 3.29 sigma = 99.9%.
  SynthToken:
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::int64_t m = 1000;
    AugmentPlan plan = sample_augmentation(m, 4, 0.0, 0.5, derive_seed(seed, 1234));
    std::int64_t kept = 0;
    for (char c : plan.edge_keep) kept += c;
    double mean = 500.0, sigma = std::sqrt(250.0);
    CHECK(std::abs(static_cast<double>(kept) - mean) < 3.29 * sigma);
  }
}

TEST_CASE("feature masking zeroes whole columns with the stated rate") {
  Graph g = oracle::random_graph(8, 64, 0.4, 15);
  ViewData out = augment_view(g.adj, g.features, 0.3, 0.0, 21);
  int masked = 0;
  for (int c = 0; c < 64; ++c) {
    bool is_zero = out.x.col(c).cwiseAbs().maxCoeff() == 0.0;
    bool was_zero = g.features.col(c).cwiseAbs().maxCoeff() == 0.0;
    if (is_zero && !was_zero) {
      ++masked;
    } else {
      CHECK(out.x.col(c) == g.features.col(c));
    }
  }
  CHECK(masked > 4);   // ~19 expected
  CHECK(masked < 40);
}

TEST_CASE("augmentation rejects rates outside [0,1)") {
  CHECK_THROWS_AS(sample_augmentation(10, 2, 1.0, 0.0, 0), DataError);
  CHECK_THROWS_AS(sample_augmentation(10, 2, 0.0, -0.1, 0), DataError);
}

TEST_CASE("encoder gradients pass finite differences for MLPs and view values") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Graph g = oracle::random_graph(8 + static_cast<int>(seed) * 3, 3, 0.3, seed);
    std::mt19937_64 rng(seed + 70);
    Mlp mlp = make_mlp({3, 4, 4}, rng);
    std::uniform_real_distribution<double> unif(0.2, 0.8);
    Matrix w(g.m, 1);
    for (Eigen::Index e = 0; e < g.m; ++e) w(e, 0) = unif(rng);
    Matrix wsum = oracle::random_matrix(g.n, 4, seed + 71);
    auto entry_edge =
        std::make_shared<std::vector<int>>(g.entry_edge.begin(), g.entry_edge.end());

    auto builder = [&](bool highpass) {
      return [&, highpass](Tape& t, const std::vector<Var>& p) {
        MlpVars vars;
        vars.layers = {{p[0], p[1]}, {p[2], p[3]}};
        Var vals = ops::gather_rows(p[4], entry_edge);
        if (highpass) vals = ops::sub_from_scalar(1.0, vals);
        Var h = highpass ? lapsgc_encode(t.constant(g.features), vars, g.adj.pattern, vals, 2,
                                         0.6, kDegreeEps)
                         : sgc_encode(t.constant(g.features), vars, g.adj.pattern, vals, 2,
                                      kDegreeEps);
        return ops::sum_all(ops::mul(h, t.constant(wsum)));
      };
    };
    std::vector<Matrix> leaves{mlp.layers[0].weight, mlp.layers[0].bias, mlp.layers[1].weight,
                               mlp.layers[1].bias, w};
    auto low = grad_check(builder(false), leaves, 1e-4, 1e-4);
    CHECK(low.failures.empty());
    auto high = grad_check(builder(true), leaves, 1e-4, 1e-4);
    CHECK(high.failures.empty());
  }
}

TEST_SUITE_END();
