// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "support/fixtures.hpp"
#include "treeseek/error.hpp"
#include "treeseek/model.hpp"

#include <cstring>
#include <numeric>

using namespace treeseek;
using fixtures::to_edges;
using fixtures::to_mat;
using fixtures::to_vec;

namespace {

ModelConfig small_config(PoolingMethod m = PoolingMethod::AstGPool) {
  ModelConfig c;
  c.type_width = 3;
  c.content_dim = 5;
  c.hidden = 6;
  c.depth = 3;
  c.ratio = 0.5;
  c.pooling = m;
  return c;
}

oracle::Vec oracle_scores(const AstGPoolLayer& l, const oracle::Mat& h, const oracle::EdgeList& e,
                          PoolingMethod m) {
  const auto p = to_vec(l.proj);
  if (m == PoolingMethod::SagPool) return oracle::sag_scores(h, e, p);
  if (m == PoolingMethod::TopKPool) return oracle::ast_scores(h, e, p, 1.0, 0.0);
  return oracle::ast_scores(h, e, p, l.beta1, l.beta2);
}

// Composes the reference pieces in the documented order.
oracle::Vec oracle_forward(const GnnModel& m, const CodeGraph& g, const Eigen::VectorXd& root) {
  const auto x = to_mat(g.features);
  const auto w = to_mat(m.input_proj);
  oracle::Mat h;
  for (const auto& row : x) {
    auto p = oracle::matvec(w, row);
    for (double& v : p) v = std::max(0.0, v);
    h.push_back(p);
  }
  oracle::Mat h0 = h;
  auto edges = to_edges(g.edges);
  int root_id = g.root;
  std::vector<oracle::Vec> reads;
  for (int l = 0; l < m.config.depth; ++l) {
    const auto conv = oracle::faconv(h, h0, edges, to_vec(m.conv[l].gate), m.config.eps);
    reads.push_back(oracle::max_pool(conv));
    if (l + 1 < m.config.depth || m.config.pool_last) {
      const auto scores = oracle_scores(m.pool[l], conv, edges, m.config.pooling);
      auto pooled = oracle::pool(conv, edges, scores, m.config.ratio, root_id);
      oracle::Mat next_h0;
      for (int k : pooled.kept) next_h0.push_back(h0[static_cast<std::size_t>(k)]);
      root_id = static_cast<int>(std::find(pooled.kept.begin(), pooled.kept.end(), root_id) -
                                 pooled.kept.begin());
      h = pooled.h;
      h0 = next_h0;
      edges = pooled.edges;
    } else {
      h = conv;
    }
  }
  const oracle::Gru gru{to_mat(m.gru.w_z), to_mat(m.gru.u_z), to_mat(m.gru.w_r),
                        to_mat(m.gru.u_r), to_mat(m.gru.w_h), to_mat(m.gru.u_h),
                        to_vec(m.gru.b_z), to_vec(m.gru.b_r), to_vec(m.gru.b_h)};
  const auto fused = oracle::gru_sequence(gru, reads);
  const auto out = oracle::matvec(to_mat(m.output_proj), fused);
  const double s = oracle::sigmoid(m.lambda);
  oracle::Vec y(out.size());
  double n = 0.0;
  for (std::size_t k = 0; k < y.size(); ++k) {
    y[k] = s * out[k] + (1.0 - s) * root[static_cast<Eigen::Index>(k)];
    n += y[k] * y[k];
  }
  for (double& v : y) v /= std::sqrt(n);
  return y;
}

CodeGraph permuted(const CodeGraph& g, const std::vector<int>& perm) {
  // perm[old] = new
  CodeGraph out = g;
  for (int i = 0; i < g.num_nodes; ++i) out.features.row(perm[i]) = g.features.row(i);
  for (auto& e : out.edges) e = {perm[e.src], perm[e.dst]};
  out.root = perm[g.root];
  return out;
}

}  // namespace

TEST_SUITE("model") {
  TEST_CASE("forward equals the reference composition") {
    SplitMix64 rng(101);
    for (PoolingMethod pm : {PoolingMethod::AstGPool, PoolingMethod::TopKPool, PoolingMethod::SagPool}) {
      for (bool pool_last : {true, false}) {
        ModelConfig cfg = small_config(pm);
        cfg.pool_last = pool_last;
        const GnnModel m = GnnModel::create(cfg, 7);
        for (int trial = 0; trial < 10; ++trial) {
          const CodeGraph g = fixtures::random_graph(rng, 1 + static_cast<int>(rng.below(25)), 3, 5);
          const Eigen::VectorXd root = fixtures::random_unit(rng, 5);
          const auto y = model_forward(m, g, root);
          CHECK(fixtures::max_abs_diff(to_vec(y), oracle_forward(m, g, root)) < 1e-12);
          CHECK(y.norm() == doctest::Approx(1.0).epsilon(1e-12));
        }
      }
    }
  }

  TEST_CASE("initial scalars") {
    const GnnModel m = GnnModel::create(small_config(), 1);
    CHECK(m.sigma_lambda() == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(m.tau() == doctest::Approx(0.07).epsilon(1e-12));
  }

  TEST_CASE("vanishing residual weight returns the root embedding") {
    SplitMix64 rng(5);
    GnnModel m = GnnModel::create(small_config(), 3);
    m.lambda = -60.0;
    const CodeGraph g = fixtures::random_graph(rng, 8, 3, 5);
    const Eigen::VectorXd root = fixtures::random_unit(rng, 5);
    CHECK(model_forward(m, g, root).isApprox(root, 1e-12));
  }

  TEST_CASE("identity-initialized adapter passes the root through") {
    SplitMix64 rng(6);
    ModelConfig cfg = small_config();
    cfg.mlp_adapter = true;
    const GnnModel m = GnnModel::create(cfg, 3);
    const Eigen::VectorXd root = fixtures::random_unit(rng, 5);
    CHECK(model_forward(m, fixtures::random_graph(rng, 4, 3, 5), root).isApprox(root, 1e-12));
    // The graph is ignored entirely, even when its width is wrong.
    CHECK(model_forward(m, fixtures::random_graph(rng, 4, 1, 1), root).isApprox(root, 1e-12));
  }

  TEST_CASE("forward and backward are bit-deterministic") {
    SplitMix64 rng(9);
    const GnnModel m = GnnModel::create(small_config(), 11);
    const CodeGraph g = fixtures::random_graph(rng, 15, 3, 5);
    const Eigen::VectorXd root = fixtures::random_unit(rng, 5);
    const Eigen::VectorXd d = fixtures::random_vector(rng, 5);
    auto run = [&] {
      ForwardTrace t;
      const Eigen::VectorXd y = model_forward(m, g, root, &t);
      GnnModel grads = GnnModel::zeros_like(m);
      model_backward(m, t, d, grads);
      std::vector<double> flat(y.data(), y.data() + y.size());
      for (const auto& p : std::as_const(grads).parameters()) flat.insert(flat.end(), p.data.begin(), p.data.end());
      return flat;
    };
    const auto a = run();
    const auto b = run();
    REQUIRE(a.size() == b.size());
    CHECK(std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
    CHECK(GnnModel::create(small_config(), 11).parameters().size() == m.parameters().size());
  }

  TEST_CASE("output is invariant to node relabelling") {
    SplitMix64 rng(13);
    GnnModel m = GnnModel::create(small_config(), 2);
    // Positive activations keep every pooling score distinct.
    m.input_proj = m.input_proj.cwiseAbs();
    for (int trial = 0; trial < 20; ++trial) {
      CodeGraph g = fixtures::random_graph(rng, 12, 3, 5);
      g.features = g.features.cwiseAbs();
      std::vector<int> perm(12);
      std::iota(perm.begin(), perm.end(), 0);
      for (int i = 11; i > 0; --i) std::swap(perm[i], perm[rng.below(static_cast<std::uint64_t>(i + 1))]);
      const Eigen::VectorXd root = fixtures::random_unit(rng, 5);
      CHECK((model_forward(m, g, root) - model_forward(m, permuted(g, perm), root)).cwiseAbs().maxCoeff() < 1e-9);
    }
  }

  TEST_CASE("shape errors") {
    SplitMix64 rng(15);
    const GnnModel m = GnnModel::create(small_config(), 2);
    const Eigen::VectorXd root = fixtures::random_unit(rng, 5);
    CHECK_THROWS_AS(model_forward(m, fixtures::random_graph(rng, 4, 2, 5), root), ShapeError);
    CHECK_THROWS_AS(model_forward(m, fixtures::random_graph(rng, 4, 3, 5), fixtures::random_unit(rng, 4)),
                    ShapeError);
    ModelConfig bad = small_config();
    bad.out_dim = 7;
    CHECK_THROWS_AS(GnnModel::create(bad, 1), ContractViolation);
  }

  TEST_CASE("parameter names and decay flags") {
    const GnnModel m = GnnModel::create(small_config(), 2);
    std::vector<std::string> names;
    std::size_t total = 0;
    for (const auto& p : m.parameters()) {
      names.push_back(p.name);
      total += p.data.size();
      const bool scalar = p.name == "lambda" || p.name == "tau" || p.name.ends_with("beta1") ||
                          p.name.ends_with("beta2");
      CHECK(p.decay == !scalar);
    }
    CHECK(total == m.parameter_count());
    CHECK(names.front() == "input_proj");
    CHECK(std::find(names.begin(), names.end(), "conv.2.g") != names.end());
    CHECK(std::find(names.begin(), names.end(), "pool.1.beta2") != names.end());
    CHECK(std::find(names.begin(), names.end(), "out_proj") != names.end());
    CHECK(names.back() == "tau");

    GnnModel sum = GnnModel::zeros_like(m);
    sum += m;
    sum += m;
    CHECK(sum.input_proj.isApprox(2.0 * m.input_proj));
  }
}
