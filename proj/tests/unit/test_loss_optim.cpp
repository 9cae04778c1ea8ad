// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "support/fixtures.hpp"
#include "treeseek/error.hpp"
#include "treeseek/loss.hpp"
#include "treeseek/optim.hpp"

#include <cmath>

using namespace treeseek;

TEST_SUITE("loss") {
  TEST_CASE("identical rows give ln N") {
    SplitMix64 rng(1);
    const Eigen::RowVectorXd row = fixtures::random_unit(rng, 6).transpose();
    const Eigen::MatrixXd c = row.replicate(4, 1);
    for (double tau : {0.07, 0.5, 3.0}) {
      const LossResult r = contrastive_loss(c, c, tau);
      CHECK(std::abs(r.loss - std::log(4.0)) < 1e-9);
      CHECK(std::abs(r.loss_code - std::log(4.0)) < 1e-9);
      CHECK(std::abs(r.loss_text - std::log(4.0)) < 1e-9);
    }
  }

  TEST_CASE("orthonormal matched pairs at unit temperature") {
    const Eigen::MatrixXd c = Eigen::MatrixXd::Identity(2, 3);
    const LossResult r = contrastive_loss(c, c, 1.0);
    CHECK(std::abs(r.loss - std::log(1.0 + std::exp(-1.0))) < 1e-9);
  }

  TEST_CASE("agrees with the reference and is symmetric") {
    SplitMix64 rng(2);
    for (int trial = 0; trial < 20; ++trial) {
      const int n = 2 + static_cast<int>(rng.below(8));
      const Eigen::MatrixXd c = fixtures::random_matrix(rng, n, 5);
      const Eigen::MatrixXd t = fixtures::random_matrix(rng, n, 5);
      const double tau = rng.uniform(0.05, 2.0);
      const LossResult a = contrastive_loss(c, t, tau);
      const LossResult b = contrastive_loss(t, c, tau);
      CHECK(std::abs(a.loss - oracle::contrastive_loss(fixtures::to_mat(c), fixtures::to_mat(t), tau)) < 1e-12);
      CHECK(std::abs(a.loss - b.loss) < 1e-12);
      CHECK(a.loss_code >= 0.0);
      CHECK(a.loss_text >= 0.0);
      CHECK(a.loss == doctest::Approx((a.loss_code + a.loss_text) / 2).epsilon(1e-14));
      CHECK(a.d_code.isApprox(b.d_text, 1e-12));
    }
  }

  TEST_CASE("finite differences at N=5, d=6") {
    SplitMix64 rng(3);
    Eigen::MatrixXd c = fixtures::random_matrix(rng, 5, 6);
    const Eigen::MatrixXd t = fixtures::random_matrix(rng, 5, 6);
    double tau = 0.3;
    const LossResult r = contrastive_loss(c, t, tau);
    const auto f = [&] { return contrastive_loss(c, t, tau).loss; };
    const auto num_c = fixtures::numeric_gradient({c.data(), static_cast<std::size_t>(c.size())}, f);
    CHECK(fixtures::relative_error({r.d_code.data(), static_cast<std::size_t>(r.d_code.size())}, num_c) < 1e-6);
    const auto num_tau = fixtures::numeric_gradient({&tau, 1}, f);
    CHECK(fixtures::relative_error({&r.d_tau, 1}, num_tau) < 1e-6);
  }

  TEST_CASE("contracts") {
    SplitMix64 rng(4);
    const Eigen::MatrixXd one = fixtures::random_matrix(rng, 1, 4);
    CHECK_THROWS_AS(contrastive_loss(one, one, 1.0), ContractViolation);
    Eigen::MatrixXd z = fixtures::random_matrix(rng, 3, 4);
    z.row(1).setZero();
    CHECK_THROWS_AS(contrastive_loss(z, fixtures::random_matrix(rng, 3, 4), 1.0), ContractViolation);
    CHECK_THROWS_AS(contrastive_loss(z, fixtures::random_matrix(rng, 2, 4), 1.0), ShapeError);
  }

  TEST_CASE("tiny or negative temperatures are clamped") {
    SplitMix64 rng(5);
    const Eigen::MatrixXd c = fixtures::random_matrix(rng, 3, 4);
    const Eigen::MatrixXd t = fixtures::random_matrix(rng, 3, 4);
    const LossResult ref = contrastive_loss(c, t, 1e-3);
    for (double tau : {0.0, -1.0, 1e-6}) {
      const LossResult r = contrastive_loss(c, t, tau);
      CHECK(r.tau == 1e-3);
      CHECK(r.d_tau == 0.0);
      CHECK(r.loss == ref.loss);
    }
  }
}

TEST_SUITE("optim") {
  TEST_CASE("single step matches the hand-computed update") {
    AdamW opt(AdamWOptions{0.9, 0.999, 1e-8, 0.01});
    double x = 1.0, y = 1.0;
    const double g = 0.5;
    opt.step({{&x, 1}, {&y, 1}}, {{&g, 1}, {&g, 1}}, {true, false}, 0.1);
    const double update = 0.1 * 0.5 / (0.5 + 1e-8);
    CHECK(x == doctest::Approx(0.999 - update).epsilon(1e-15));
    CHECK(y == doctest::Approx(1.0 - update).epsilon(1e-15));
    CHECK(opt.step_count() == 1);
  }

  TEST_CASE("zero gradient") {
    std::vector<double> p{1.0, -2.0, 3.0};
    const std::vector<double> g(3, 0.0);
    AdamW none(AdamWOptions{0.9, 0.999, 1e-8, 0.0});
    none.step({{p.data(), 3}}, {{g.data(), 3}}, {true}, 0.01);
    CHECK(p == std::vector<double>{1.0, -2.0, 3.0});

    AdamW decay(AdamWOptions{0.9, 0.999, 1e-8, 0.5});
    const double before = std::hypot(p[0], p[1], p[2]);
    decay.step({{p.data(), 3}}, {{g.data(), 3}}, {true}, 0.1);
    CHECK(std::hypot(p[0], p[1], p[2]) == doctest::Approx(before * (1 - 0.1 * 0.5)).epsilon(1e-14));
  }

  TEST_CASE("model step spares the scalar knobs from decay") {
    ModelConfig cfg;
    cfg.content_dim = 4;
    cfg.type_width = 2;
    cfg.depth = 2;
    GnnModel m = GnnModel::create(cfg, 1);
    const GnnModel before = m;
    AdamW opt(AdamWOptions{0.9, 0.999, 1e-8, 0.5});
    opt.step(m, GnnModel::zeros_like(m), 0.1);
    CHECK(m.lambda == before.lambda);
    CHECK(m.log_inv_tau == before.log_inv_tau);
    CHECK(m.pool[0].beta1 == before.pool[0].beta1);
    CHECK(m.input_proj.isApprox(0.95 * before.input_proj, 1e-14));
    CHECK(m.gru.b_z.isApprox(0.95 * before.gru.b_z, 1e-14));
  }

  TEST_CASE("layout changes are rejected") {
    ModelConfig cfg;
    cfg.content_dim = 4;
    GnnModel m = GnnModel::create(cfg, 1);
    ModelConfig other = cfg;
    other.depth = 2;
    AdamW opt;
    CHECK_THROWS_AS(opt.step(m, GnnModel::zeros_like(GnnModel::create(other, 1)), 0.1), ShapeError);
  }
}
