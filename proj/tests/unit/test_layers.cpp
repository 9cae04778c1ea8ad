// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "support/fixtures.hpp"
#include "treeseek/error.hpp"
#include "treeseek/gnn_layers.hpp"

#include <algorithm>

using namespace treeseek;
using fixtures::to_edges;
using fixtures::to_mat;
using fixtures::to_vec;

namespace {

GraphState state_of(const Eigen::MatrixXd& h, std::vector<Edge> edges, int root = 0) {
  GraphState s;
  s.h = h;
  s.h0 = h;
  s.edges = std::move(edges);
  s.root = root;
  for (int i = 0; i < h.rows(); ++i) s.origin.push_back(i);
  return s;
}

oracle::Vec oracle_scores(const AstGPoolLayer& l, const GraphState& s, PoolingMethod m) {
  const auto h = to_mat(s.h);
  const auto e = to_edges(s.edges);
  const auto p = to_vec(l.proj);
  switch (m) {
    case PoolingMethod::AstGPool: return oracle::ast_scores(h, e, p, l.beta1, l.beta2);
    case PoolingMethod::TopKPool: return oracle::ast_scores(h, e, p, 1.0, 0.0);
    case PoolingMethod::SagPool: return oracle::sag_scores(h, e, p);
  }
  return {};
}

oracle::Gru to_oracle(const GruParams& g) {
  return {to_mat(g.w_z), to_mat(g.u_z), to_mat(g.w_r), to_mat(g.u_r), to_mat(g.w_h),
          to_mat(g.u_h), to_vec(g.b_z), to_vec(g.b_r), to_vec(g.b_h)};
}

GruParams random_gru(SplitMix64& rng, int in, int h) {
  using fixtures::random_matrix;
  using fixtures::random_vector;
  return {random_matrix(rng, h, in), random_matrix(rng, h, h), random_matrix(rng, h, in),
          random_matrix(rng, h, h),  random_matrix(rng, h, in), random_matrix(rng, h, h),
          random_vector(rng, h),     random_vector(rng, h),     random_vector(rng, h)};
}

}  // namespace

TEST_SUITE("layers") {
  TEST_CASE("FAConv agrees with the reference loop") {
    SplitMix64 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
      const int n = 1 + static_cast<int>(rng.below(15));
      GraphState s = fixtures::random_state(rng, n, 5);
      FaConvLayer layer{fixtures::random_vector(rng, 10), 0.5};
      FaConvTrace trace;
      const Eigen::MatrixXd out = faconv_forward(layer, s, &trace);
      const auto ref = oracle::faconv(to_mat(s.h), to_mat(s.h0), to_edges(s.edges), to_vec(layer.gate), 0.5);
      CHECK(fixtures::max_abs_diff(to_mat(out), ref) < 1e-12);
      for (double a : trace.alpha) {
        CHECK(a >= -1.0);
        CHECK(a <= 1.0);
      }
    }
  }

  TEST_CASE("FAConv without edges is the scaled initial residual") {
    SplitMix64 rng(2);
    GraphState s = fixtures::random_state(rng, 4, 3);
    s.edges.clear();
    const FaConvLayer layer{fixtures::random_vector(rng, 6), 0.5};
    CHECK(faconv_forward(layer, s).isApprox(0.5 * s.h0));
  }

  TEST_CASE("FAConv shape errors") {
    SplitMix64 rng(3);
    GraphState s = fixtures::random_state(rng, 4, 3);
    CHECK_THROWS_AS(faconv_forward(FaConvLayer{Eigen::VectorXd::Zero(5), 0.5}, s), ShapeError);
    s.h0 = Eigen::MatrixXd::Zero(3, 3);
    CHECK_THROWS_AS(faconv_forward(FaConvLayer{Eigen::VectorXd::Zero(6), 0.5}, s), ShapeError);
  }

  TEST_CASE("importance score on a star counts children") {
    const GraphState s = state_of(Eigen::MatrixXd::Zero(4, 2), {{1, 0}, {2, 0}, {3, 0}});
    const AstGPoolLayer layer{Eigen::Vector2d(1.0, 0.0), 0.0, 1.0, 0.25};
    const Eigen::VectorXd score = astgpool_score(layer, s);
    CHECK(score.isApprox(Eigen::Vector4d(3, 0, 0, 0)));
    CHECK(select_top_k(score, 0.25, 0) == std::vector<int>{0});
  }

  TEST_CASE("importance score hand fixture") {
    Eigen::MatrixXd h(5, 2);
    h << 1, 0, 0, 1, 1, 1, 2, -1, 0, 0;
    const GraphState s = state_of(h, {{1, 0}, {2, 0}, {3, 2}, {4, 2}});
    const AstGPoolLayer layer{Eigen::Vector2d(3.0, 4.0), 1.0, 1.0, 0.4};
    const Eigen::VectorXd score = astgpool_score(layer, s);
    const double expect[] = {2.6, 0.8, 3.4, 0.4, 0.0};
    for (int i = 0; i < 5; ++i) CHECK(score[i] == doctest::Approx(expect[i]).epsilon(1e-12));
    CHECK(select_top_k(score, 0.4, 0) == std::vector<int>{0, 2});
  }

  TEST_CASE("feature term alone is proportional to the projection") {
    SplitMix64 rng(5);
    const GraphState s = fixtures::random_state(rng, 9, 4);
    const Eigen::VectorXd p = fixtures::random_vector(rng, 4);
    const AstGPoolLayer layer{p, 1.7, 0.0, 0.5};
    CHECK(astgpool_score(layer, s).isApprox(1.7 * s.h * p / p.norm()));
  }

  TEST_CASE("zero projection leaves the degree term") {
    const GraphState s = state_of(Eigen::MatrixXd::Ones(3, 2), {{1, 0}, {2, 0}});
    const AstGPoolLayer layer{Eigen::Vector2d::Zero(), 1.0, 2.0, 0.5};
    CHECK(astgpool_score(layer, s).isApprox(Eigen::Vector3d(4, 0, 0)));
  }

  TEST_CASE("pooling matches the reference for every method") {
    SplitMix64 rng(17);
    for (PoolingMethod m : {PoolingMethod::AstGPool, PoolingMethod::TopKPool, PoolingMethod::SagPool}) {
      for (int trial = 0; trial < 25; ++trial) {
        const int n = 1 + static_cast<int>(rng.below(20));
        GraphState s = fixtures::random_state(rng, n, 4);
        const double ratio = rng.uniform(0.05, 1.0);
        const AstGPoolLayer layer{fixtures::random_vector(rng, 4), rng.uniform(0.2, 2.0),
                                  rng.uniform(0.0, 2.0), ratio};
        const auto ref_scores = oracle_scores(layer, s, m);
        CHECK(fixtures::max_abs_diff(to_vec(pooling_scores(layer, s, m)), ref_scores) < 1e-12);

        PoolTrace trace;
        const GraphState out = graph_pool(layer, s, m, &trace);
        const auto ref = oracle::pool(to_mat(s.h), to_edges(s.edges), ref_scores, ratio, s.root);
        REQUIRE(trace.kept == ref.kept);
        CHECK(fixtures::max_abs_diff(to_mat(out.h), ref.h) < 1e-12);
        CHECK(to_edges(out.edges) == ref.edges);
        for (std::size_t r = 0; r < ref.kept.size(); ++r) {
          CHECK(out.origin[r] == s.origin[static_cast<std::size_t>(ref.kept[r])]);
          CHECK(out.h0.row(static_cast<Eigen::Index>(r)) == s.h0.row(ref.kept[r]));
        }
        CHECK(out.origin[static_cast<std::size_t>(out.root)] == s.origin[static_cast<std::size_t>(s.root)]);
      }
    }
  }

  TEST_CASE("selection sizes") {
    const Eigen::Vector4d scores(0.1, 0.9, 0.5, 0.7);
    CHECK(select_top_k(scores, 0.5, 0) == std::vector<int>{0, 1});
    CHECK(select_top_k(scores, 0.5, 1) == std::vector<int>{1, 3});
    CHECK(select_top_k(scores, 1.0, 2) == std::vector<int>{0, 1, 2, 3});
    CHECK(select_top_k(scores, 0.01, 3) == std::vector<int>{3});
    CHECK(select_top_k(Eigen::Vector3d(1, 1, 1), 0.6, 0) == std::vector<int>{0, 1});
  }

  TEST_CASE("root persists and selection grows with the ratio") {
    SplitMix64 rng(23);
    for (int trial = 0; trial < 100; ++trial) {
      const int n = 1 + static_cast<int>(rng.below(40));
      const Eigen::VectorXd scores = fixtures::random_vector(rng, n);
      const int root = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
      std::vector<int> prev;
      for (int step = 1; step <= 20; ++step) {
        const double ratio = step / 20.0;
        const auto kept = select_top_k(scores, ratio, root);
        CHECK(std::binary_search(kept.begin(), kept.end(), root));
        CHECK(std::includes(kept.begin(), kept.end(), prev.begin(), prev.end()));
        CHECK(kept == oracle::select(to_vec(scores), ratio, root));
        prev = kept;
      }
    }
  }

  TEST_CASE("feature-only selection is invariant to positive rescaling") {
    SplitMix64 rng(29);
    for (int trial = 0; trial < 30; ++trial) {
      GraphState s = fixtures::random_state(rng, 12, 3);
      AstGPoolLayer layer{fixtures::random_vector(rng, 3), 1.0, 1.0, 0.5};
      PoolTrace a, b, c;
      graph_pool(layer, s, PoolingMethod::TopKPool, &a);
      layer.proj *= 7.5;
      graph_pool(layer, s, PoolingMethod::TopKPool, &b);
      s.h *= 3.0;
      graph_pool(layer, s, PoolingMethod::TopKPool, &c);
      CHECK(a.kept == b.kept);
      CHECK(a.kept == c.kept);
    }
  }

  TEST_CASE("without the feature term selection follows in-degree on random trees") {
    SplitMix64 rng(31);
    for (int trial = 0; trial < 100; ++trial) {
      const int n = 2 + static_cast<int>(rng.below(60));
      const GraphState s = fixtures::random_state(rng, n, 4);
      const AstGPoolLayer layer{fixtures::random_vector(rng, 4), 0.0, 1.0, 0.3};
      oracle::Vec deg;
      for (int d : oracle::indegree(static_cast<std::size_t>(n), to_edges(s.edges))) deg.push_back(d);
      const Eigen::VectorXd score = astgpool_score(layer, s);
      CHECK(to_vec(score) == deg);
      CHECK(select_top_k(score, 0.3, 0) == oracle::select(deg, 0.3, 0));
    }
  }

  TEST_CASE("global max pool") {
    Eigen::MatrixXd h(3, 2);
    h << 1, 5, 4, 5, -2, 0;
    std::vector<int> arg;
    CHECK(global_max_pool(h, &arg).isApprox(Eigen::Vector2d(4, 5)));
    CHECK(arg == std::vector<int>{1, 0});
    CHECK(to_vec(global_max_pool(h)) == oracle::max_pool(to_mat(h)));
  }

  TEST_CASE("GRU fusion agrees with the reference") {
    SplitMix64 rng(37);
    const GruParams g = random_gru(rng, 4, 3);
    std::vector<Eigen::VectorXd> xs;
    std::vector<oracle::Vec> ref_xs;
    for (int l = 0; l < 3; ++l) {
      xs.push_back(fixtures::random_vector(rng, 4));
      ref_xs.push_back(to_vec(xs.back()));
    }
    const auto ref = oracle::gru_sequence(to_oracle(g), ref_xs);
    CHECK(fixtures::max_abs_diff(to_vec(gru_fuse(g, xs)), ref) < 1e-14);
  }

  TEST_CASE("single GRU step from zero has a closed form") {
    SplitMix64 rng(41);
    const GruParams g = random_gru(rng, 4, 3);
    const Eigen::VectorXd x = fixtures::random_vector(rng, 4);
    const Eigen::VectorXd z =
        (g.w_z * x + g.b_z).unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
    const Eigen::VectorXd cand = (g.w_h * x + g.b_h).array().tanh().matrix();
    CHECK(gru_fuse(g, {x}).isApprox(z.cwiseProduct(cand), 1e-14));

    GruParams zero = g;
    for (auto* m : {&zero.w_z, &zero.u_z, &zero.w_r, &zero.u_r, &zero.w_h, &zero.u_h}) m->setZero();
    for (auto* v : {&zero.b_z, &zero.b_r, &zero.b_h}) v->setZero();
    CHECK(gru_fuse(zero, {x, x, x}).isZero());
  }

  TEST_CASE("GRU contracts") {
    SplitMix64 rng(43);
    const GruParams g = random_gru(rng, 4, 3);
    CHECK_THROWS_AS(gru_fuse(g, {}), ContractViolation);
    CHECK_THROWS_AS(gru_fuse(g, {Eigen::VectorXd::Zero(5)}), ShapeError);
  }

  TEST_CASE("pooling method names") {
    CHECK(parse_pooling_method("ASTGPool") == PoolingMethod::AstGPool);
    CHECK(parse_pooling_method("topk") == PoolingMethod::TopKPool);
    CHECK(parse_pooling_method("sagpool") == PoolingMethod::SagPool);
    CHECK_THROWS_AS(parse_pooling_method("mean"), UsageError);
    for (PoolingMethod m : {PoolingMethod::AstGPool, PoolingMethod::TopKPool, PoolingMethod::SagPool}) {
      CHECK(parse_pooling_method(to_string(m)) == m);
    }
  }
}
