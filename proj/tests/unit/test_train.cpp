// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "treeseek/error.hpp"
#include "treeseek/trainer.hpp"

#include <cmath>
#include <cstring>
#include <numbers>

using namespace treeseek;

namespace {

struct Setup {
  Pipeline pipeline{PipelineConfig{}, std::make_shared<HashingProvider>(16, 0)};
  std::vector<EncodedSample> samples;
  Setup() { samples = encode_corpus(pipeline, synthetic_corpus(24, 3), 2).samples; }
};

TrainConfig small_train() {
  TrainConfig c;
  c.batch_size = 8;
  c.steps = 40;
  c.lr = 0.01;
  c.pooling_ratio = 0.5;
  c.seed = 5;
  return c;
}

std::vector<double> flat(const GnnModel& m) {
  std::vector<double> out;
  for (const auto& p : m.parameters()) out.insert(out.end(), p.data.begin(), p.data.end());
  return out;
}

}  // namespace

TEST_SUITE("train") {
  TEST_CASE("learning-rate schedule") {
    TrainConfig c;
    c.steps = 101;
    c.lr = 0.004;
    c.warmup_fraction = 0.1;
    CHECK(lr_at(0, c) == 0.0);
    CHECK(lr_at(5, c) == doctest::Approx(0.002).epsilon(1e-12));
    CHECK(lr_at(10, c) == doctest::Approx(0.004).epsilon(1e-12));
    // Halfway through the decay: progress = 45 / 90.
    CHECK(lr_at(55, c) == doctest::Approx(0.004 * 0.5 * (1 + std::cos(std::numbers::pi * 0.5))).epsilon(1e-12));
    CHECK(lr_at(100, c) == doctest::Approx(0.0).epsilon(1e-15));
    for (int s = 1; s <= 10; ++s) CHECK(lr_at(s, c) >= lr_at(s - 1, c));
    for (int s = 11; s <= 100; ++s) CHECK(lr_at(s, c) <= lr_at(s - 1, c));
  }

  TEST_CASE("config JSON") {
    TrainConfig c = small_train();
    c.pooling = PoolingMethod::SagPool;
    c.mlp_adapter = true;
    c.hidden = 12;
    const TrainConfig back = TrainConfig::from_json(c.to_json());
    CHECK(back.to_json() == c.to_json());
    const TrainConfig partial = TrainConfig::from_json(R"({"steps": 7})", c);
    CHECK(partial.steps == 7);
    CHECK(partial.hidden == 12);
    CHECK_THROWS_AS(TrainConfig::from_json(R"({"stepz": 7})"), UsageError);
    CHECK_THROWS_AS(TrainConfig::from_json("{"), UsageError);
  }

  TEST_CASE("validation") {
    TrainConfig c;
    CHECK_NOTHROW(c.validate());
    c.batch_size = 1;
    CHECK_THROWS_AS(c.validate(), UsageError);
    c = TrainConfig{};
    c.pooling_ratio = 0.0;
    CHECK_THROWS_AS(c.validate(), UsageError);
    c = TrainConfig{};
    c.warmup_fraction = 1.0;
    CHECK_THROWS_AS(c.validate(), UsageError);
  }

  TEST_CASE("thread count does not change the result") {
    const Setup s;
    TrainConfig c = small_train();
    const GnnModel init = GnnModel::create(model_config_for(c, s.pipeline), c.seed);
    c.jobs = 1;
    const TrainResult a = train(c, s.samples, init);
    c.jobs = 4;
    const TrainResult b = train(c, s.samples, init);
    const auto fa = flat(a.model), fb = flat(b.model);
    REQUIRE(fa.size() == fb.size());
    CHECK(std::memcmp(fa.data(), fb.data(), fa.size() * sizeof(double)) == 0);
    REQUIRE(a.log.size() == b.log.size());
    for (std::size_t i = 0; i < a.log.size(); ++i) CHECK(a.log[i].loss == b.log[i].loss);
    CHECK(metrics_csv(a.log) == metrics_csv(b.log));
  }

  TEST_CASE("loss falls and starts near the uniform bound") {
    const Setup s;
    TrainConfig c = small_train();
    c.steps = 80;
    // At unit temperature unrelated embeddings give logits near zero, so the
    // first loss sits close to ln(batch).
    GnnModel init = GnnModel::create(model_config_for(c, s.pipeline), 1);
    init.log_inv_tau = 0.0;
    const TrainResult r = train(c, s.samples, init);
    REQUIRE(r.log.size() == 80);
    CHECK(std::abs(r.log.front().loss - std::log(8.0)) < 0.25);
    double head = 0.0, tail = 0.0;
    for (int i = 0; i < 10; ++i) {
      head += r.log[static_cast<std::size_t>(i)].loss;
      tail += r.log[r.log.size() - 1 - static_cast<std::size_t>(i)].loss;
    }
    CHECK(tail < head);
    for (const auto& row : r.log) {
      CHECK(std::isfinite(row.loss));
      CHECK(row.tau >= GnnModel::kMinTau);
      CHECK(row.sigma_lambda > 0.0);
      CHECK(row.sigma_lambda < 1.0);
    }
  }

  TEST_CASE("too few samples for a batch") {
    const Setup s;
    TrainConfig c = small_train();
    c.batch_size = 64;
    CHECK_THROWS_AS(train(c, s.samples, GnnModel::create(model_config_for(c, s.pipeline), 1)), UsageError);
  }

  TEST_CASE("metrics CSV") {
    const std::vector<StepLog> log{{0, 1.5, 0.0, 0.2, 0.07}, {1, 1.25, 0.001, 0.21, 0.069}};
    const std::string csv = metrics_csv(log);
    CHECK(csv.starts_with("step,loss,lr,sigma_lambda,tau\n0,1.5,0,0.20000000000000001,"));
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
  }

  TEST_CASE("embedding rows follow sample order") {
    const Setup s;
    const GnnModel m = GnnModel::create(model_config_for(small_train(), s.pipeline), 4);
    const Eigen::MatrixXd a = embed_codes(m, s.samples, 1);
    const Eigen::MatrixXd b = embed_codes(m, s.samples, 3);
    CHECK(a == b);
    CHECK(a.rows() == static_cast<Eigen::Index>(s.samples.size()));
    CHECK(text_matrix(s.samples).row(2).transpose() == s.samples[2].text_embedding);
  }
}
