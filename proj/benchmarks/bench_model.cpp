// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include "treeseek/corpus.hpp"
#include "treeseek/log.hpp"
#include "treeseek/loss.hpp"
#include "treeseek/pipeline.hpp"
#include "treeseek/retrieval.hpp"
#include "treeseek/trainer.hpp"

using namespace treeseek;

namespace {

const Pipeline& pipeline() {
  static const Pipeline p(PipelineConfig{}, std::make_shared<HashingProvider>(64, 0));
  return p;
}

const std::vector<EncodedSample>& samples() {
  static const auto s = encode_corpus(pipeline(), synthetic_corpus(64, 1), 1).samples;
  return s;
}

void BM_EncodeCode(benchmark::State& state) {
  const auto corpus = synthetic_corpus(16, 2);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(pipeline().encode_code(corpus[i++ % corpus.size()].code));
  }
}
BENCHMARK(BM_EncodeCode);

void BM_Forward(benchmark::State& state) {
  TrainConfig tc;
  tc.depth = static_cast<int>(state.range(0));
  const GnnModel m = GnnModel::create(model_config_for(tc, pipeline()), 1);
  std::size_t i = 0;
  for (auto _ : state) {
    const auto& s = samples()[i++ % samples().size()];
    benchmark::DoNotOptimize(model_forward(m, s.graph, s.root_embedding));
  }
}
BENCHMARK(BM_Forward)->Arg(1)->Arg(3)->Arg(5);

void BM_ForwardBackward(benchmark::State& state) {
  const GnnModel m = GnnModel::create(model_config_for(TrainConfig{}, pipeline()), 1);
  GnnModel grads = GnnModel::zeros_like(m);
  const Eigen::VectorXd d = Eigen::VectorXd::Ones(64);
  std::size_t i = 0;
  for (auto _ : state) {
    const auto& s = samples()[i++ % samples().size()];
    ForwardTrace t;
    model_forward(m, s.graph, s.root_embedding, &t);
    model_backward(m, t, d, grads);
  }
}
BENCHMARK(BM_ForwardBackward);

void BM_ContrastiveLoss(benchmark::State& state) {
  const auto n = state.range(0);
  const Eigen::MatrixXd c = Eigen::MatrixXd::Random(n, 64);
  const Eigen::MatrixXd t = Eigen::MatrixXd::Random(n, 64);
  for (auto _ : state) benchmark::DoNotOptimize(contrastive_loss(c, t, 0.07));
}
BENCHMARK(BM_ContrastiveLoss)->Arg(64)->Arg(256);

void BM_Query(benchmark::State& state) {
  const auto n = static_cast<int>(state.range(0));
  RetrievalIndex idx(64, {"fnv1a64:bench", "pipe:bench", "hash:bench"}, "{}");
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd v = hash_embed("entry " + std::to_string(i), 64, 3);
    idx.add({"e" + std::to_string(i), std::vector<float>(v.data(), v.data() + 64), "python", 0});
  }
  const Eigen::VectorXd q = hash_embed("query", 64, 3);
  for (auto _ : state) benchmark::DoNotOptimize(query(idx, q, 10));
}
BENCHMARK(BM_Query)->Arg(1000)->Arg(10000);

}  // namespace

int main(int argc, char** argv) {
  log::set_level(log::Level::Error);
  benchmark::Initialize(&argc, argv);
  if (benchmark::ReportUnrecognizedArguments(argc, argv)) return 1;
  benchmark::RunSpecifiedBenchmarks();
  benchmark::Shutdown();
  return 0;
}
