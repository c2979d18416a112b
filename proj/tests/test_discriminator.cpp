#include "greet/discriminator.hpp"

#include "oracle.hpp"

#include <doctest.h>

using namespace greet;

TEST_SUITE_BEGIN("discriminator");

namespace {

ModelParams tiny_params(int d_f, int d_s, std::uint64_t seed) {
  ModelDims dims;
  dims.d_f = d_f;
  dims.d_s = d_s;
  dims.d_i = 4;
  dims.d_r = 8;
  dims.d_p = 4;
  dims.l_mlp = 2;
  dims.l_p = 1;
  return init_params(dims, seed);
}

}  // namespace

TEST_CASE("zero readout weights give zero logits everywhere") {
  Graph g = oracle::random_graph(6, 3, 0.5, 1);
  ModelParams params = tiny_params(3, 2, 0);
  params.disc_mlp2.layers[0].weight.setZero();
  params.disc_mlp2.layers[0].bias.setZero();
  StructuralEncoding enc = structural_encoding(g, 2);
  Tape t;
  DiscriminatorVars disc = register_discriminator(t, params, false);
  Var theta = edge_logits(t.constant(g.features), t.constant(enc.S), g, disc);
  CHECK(t.value(theta).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("edge logits are symmetric in the endpoint order and match the scalar oracle") {
  Graph g = oracle::random_graph(3, 4, 0.9, 2);
  REQUIRE(g.m >= 2);
  ModelParams params = tiny_params(4, 3, 3);
  StructuralEncoding enc = structural_encoding(g, 3);
  Tape t;
  DiscriminatorVars disc = register_discriminator(t, params, false);
  Var theta = edge_logits(t.constant(g.features), t.constant(enc.S), g, disc);
  const Matrix& w1 = params.disc_mlp1.layers[0].weight;
  const Matrix& b1 = params.disc_mlp1.layers[0].bias;
  const Matrix& w2 = params.disc_mlp2.layers[0].weight;
  const Matrix& b2 = params.disc_mlp2.layers[0].bias;
  for (std::size_t e = 0; e < g.edges.size(); ++e) {
    auto [i, j] = g.edges[e];
    double forward = oracle::scalar_edge_logit(g.features.row(i), enc.S.row(i),
                                               g.features.row(j), enc.S.row(j), w1, b1, w2, b2);
    double reversed = oracle::scalar_edge_logit(g.features.row(j), enc.S.row(j),
                                                g.features.row(i), enc.S.row(i), w1, b1, w2, b2);
    CHECK(forward == doctest::Approx(reversed).epsilon(1e-12));
    CHECK(t.value(theta)(static_cast<Eigen::Index>(e), 0) ==
          doctest::Approx(forward).epsilon(1e-10));
  }
}

TEST_CASE("gumbel weight formula at the stated points") {
  // delta = 0.5: zero logistic noise
  CHECK(gumbel_weight(0.7, 1.0, 0.5) == doctest::Approx(1.0 / (1.0 + std::exp(-0.7))));
  // delta with logit exactly 1
  double d = std::exp(1.0) / (1.0 + std::exp(1.0));
  CHECK(gumbel_weight(0.7, 1.0, d) == doctest::Approx(1.0 / (1.0 + std::exp(-1.7))));
  // sharpening at low temperature
  CHECK(gumbel_weight(0.7, 0.1, 0.5) == doctest::Approx(1.0 / (1.0 + std::exp(-7.0))));
  CHECK_THROWS_AS(gumbel_weight(0.0, 1.0, 0.0), DataError);
  CHECK_THROWS_AS(gumbel_weight(0.0, 1.0, 1.0), DataError);
  CHECK_THROWS_AS(gumbel_weight(0.0, 0.0, 0.5), DataError);
}

TEST_CASE("gumbel weight is monotone and satisfies the complement identity") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unif(0.05, 0.95);
  for (int trial = 0; trial < 50; ++trial) {
    double theta = unif(rng) * 4.0 - 2.0;
    double delta = unif(rng);
    double tau = 0.2 + unif(rng);
    double w = gumbel_weight(theta, tau, delta);
    CHECK(w > 0.0);
    CHECK(w < 1.0);
    CHECK(gumbel_weight(theta + 0.1, tau, delta) > w);
    CHECK(gumbel_weight(theta, tau, std::min(delta + 0.02, 0.999)) >= w);
    CHECK(w + gumbel_weight(-theta, tau, 1.0 - delta) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("gumbel weight saturates as the temperature vanishes") {
  // delta != sigmoid(-theta): the sign of theta + logit(delta) decides the limit.
  CHECK(gumbel_weight(0.4, 1e-4, 0.5) == doctest::Approx(1.0));
  CHECK(gumbel_weight(-0.4, 1e-4, 0.5) == doctest::Approx(0.0));
}

TEST_CASE("gumbel gradient through the tape matches finite differences") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Matrix theta = oracle::random_matrix(6, 1, seed);
    Vector delta = sample_edge_noise(6, derive_seed(seed, 77));
    Matrix wsum = oracle::random_matrix(6, 1, seed + 1);
    auto report = grad_check(
        [&](Tape& t, const std::vector<Var>& p) {
          Var w = gumbel_weights(p[0], delta, 0.7);
          return ops::sum_all(ops::mul(w, t.constant(wsum)));
        },
        {theta}, 1e-4, 1e-6);
    CHECK(report.failures.empty());
  }
  // analytic dw/dtheta = w(1-w)/tau
  Tape t;
  Var theta = t.input(Matrix::Constant(1, 1, 0.3), true);
  Var w = gumbel_weights(theta, noise_free(1), 0.5);
  t.backward(ops::sum_all(w));
  double wv = t.value(w)(0, 0);
  CHECK(t.grad(theta)(0, 0) == doctest::Approx(wv * (1.0 - wv) / 0.5).epsilon(1e-12));
}

TEST_CASE("split_views at the stated extremes") {
  Graph g = oracle::random_graph(5, 2, 0.6, 4);
  SUBCASE("all weights 1: homophilic view equals adjacency") {
    DualViews v = split_views(g, Vector::Ones(g.m));
    CHECK((v.hm.values - g.adj.values).cwiseAbs().maxCoeff() == 0.0);
    CHECK(v.ht.values.cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("all weights 0.5: both views are half the adjacency") {
    DualViews v = split_views(g, Vector::Constant(g.m, 0.5));
    CHECK((v.hm.values - 0.5 * g.adj.values).cwiseAbs().maxCoeff() == 0.0);
    CHECK((v.ht.values - 0.5 * g.adj.values).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("split_views complementarity and symmetry hold for any weights") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Graph g = oracle::random_graph(8, 2, 0.4, seed);
    Vector w(g.m);
    for (Eigen::Index e = 0; e < g.m; ++e) {
      w[e] = counter_uniform(derive_seed(seed, 5), static_cast<std::uint64_t>(e));
    }
    DualViews v = split_views(g, w);
    CHECK((v.hm.values + v.ht.values - Vector::Ones(g.adj.nnz())).cwiseAbs().maxCoeff() == 0.0);
    CHECK(v.hm.is_symmetric());
    CHECK(v.ht.is_symmetric());
    CHECK(v.hm.pattern == g.adj.pattern);  // shared sparsity
  }
}

TEST_CASE("split_views rejects weights beyond rounding tolerance") {
  Graph g = oracle::random_graph(4, 2, 0.9, 6);
  Vector bad = Vector::Constant(g.m, 1.2);
  CHECK_THROWS_AS(split_views(g, bad), DataError);
  // exact endpoints are accepted (rounding of the sigmoid)
  CHECK_NOTHROW(split_views(g, Vector::Zero(g.m)));
  CHECK_NOTHROW(split_views(g, Vector::Ones(g.m)));
}

TEST_CASE("tape-level views mirror weights onto both directions") {
  Graph g = oracle::random_graph(7, 2, 0.5, 8);
  Tape t;
  Matrix w = oracle::random_matrix(g.m, 1, 9).array().abs().min(0.99).max(0.01);
  Var wv = t.input(w, false);
  DualViewVars views = split_views_vars(g, wv);
  const Matrix& hm = t.value(views.hm_values);
  const Matrix& ht = t.value(views.ht_values);
  const auto& mirror = g.adj.pattern->mirror();
  for (std::int64_t e = 0; e < g.adj.nnz(); ++e) {
    CHECK(hm(e, 0) == w(g.entry_edge[e], 0));
    CHECK(hm(e, 0) == hm(mirror[e], 0));
    CHECK(hm(e, 0) + ht(e, 0) == 1.0);
  }
}

TEST_CASE("per-edge noise is counter-based and order-independent") {
  Vector a = sample_edge_noise(100, 42);
  Vector b = sample_edge_noise(100, 42);
  CHECK(a == b);
  for (Eigen::Index e = 0; e < a.size(); ++e) {
    CHECK(a[e] > 0.0);
    CHECK(a[e] < 1.0);
    CHECK(a[e] == counter_uniform(42, static_cast<std::uint64_t>(e)));
  }
  CHECK(noise_free(3) == Vector::Constant(3, 0.5));
}

TEST_SUITE_END();
