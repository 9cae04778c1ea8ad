// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "support/fixtures.hpp"
#include "treeseek/checkpoint.hpp"
#include "treeseek/error.hpp"
#include "treeseek/retrieval.hpp"
#include "treeseek/trainer.hpp"

#include <algorithm>
#include <fstream>
#include <json.hpp>

using namespace treeseek;

namespace {

IndexFingerprints fps() { return {"fnv1a64:m", "pipe:p", "hash:x"}; }

std::vector<float> unit_floats(SplitMix64& rng, int dim) {
  const Eigen::VectorXd v = fixtures::random_unit(rng, dim);
  std::vector<float> f(v.data(), v.data() + dim);
  double n = 0.0;
  for (float x : f) n += static_cast<double>(x) * x;
  for (float& x : f) x = static_cast<float>(x / std::sqrt(n));
  return f;
}

RetrievalIndex random_index(SplitMix64& rng, int n, int dim) {
  RetrievalIndex idx(dim, fps(), ProviderSpec{}.to_json());
  for (int i = 0; i < n; ++i) idx.add({"e" + std::to_string(i), unit_floats(rng, dim), "python", 0});
  return idx;
}

Eigen::VectorXd as_vec(const std::vector<float>& f) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(f.size()));
  for (std::size_t i = 0; i < f.size(); ++i) v[static_cast<Eigen::Index>(i)] = f[i];
  return v;
}

struct Built {
  Pipeline pipeline{PipelineConfig{}, std::make_shared<HashingProvider>(16, 0)};
  GnnModel model;
  std::vector<CorpusSample> corpus = synthetic_corpus(6, 1);
  Built() {
    TrainConfig c;
    c.pooling_ratio = 0.5;
    model = GnnModel::create(model_config_for(c, pipeline), 3);
  }
};

}  // namespace

TEST_SUITE("retrieval") {
  TEST_CASE("top-k equals an exhaustive scan") {
    SplitMix64 rng(1);
    const RetrievalIndex idx = random_index(rng, 50, 8);
    for (int trial = 0; trial < 20; ++trial) {
      const Eigen::VectorXd q = fixtures::random_unit(rng, 8);
      std::vector<Hit> all;
      for (const auto& e : idx.entries()) all.push_back({e.id, as_vec(e.vector).dot(q)});
      std::sort(all.begin(), all.end(), [](const Hit& a, const Hit& b) {
        return a.similarity != b.similarity ? a.similarity > b.similarity : a.id < b.id;
      });
      const auto hits = query(idx, q, 7);
      REQUIRE(hits.size() == 7);
      for (std::size_t i = 0; i < hits.size(); ++i) {
        CHECK(hits[i].id == all[i].id);
        CHECK(hits[i].similarity == doctest::Approx(all[i].similarity).epsilon(1e-12));
        if (i > 0) CHECK(hits[i - 1].similarity >= hits[i].similarity);
      }
    }
  }

  TEST_CASE("stored vector ranks itself first") {
    SplitMix64 rng(2);
    const RetrievalIndex idx = random_index(rng, 10, 8);
    const auto hits = query(idx, as_vec(idx.entries()[2].vector), 100);
    CHECK(hits.size() == 10);
    CHECK(hits[0].id == "e2");
    CHECK(hits[0].similarity == doctest::Approx(1.0).epsilon(1e-6));
  }

  TEST_CASE("ties resolve by id") {
    RetrievalIndex idx(2, fps(), "{}");
    idx.add({"b", {1.0f, 0.0f}, "python", 0});
    idx.add({"a", {1.0f, 0.0f}, "python", 0});
    idx.add({"c", {0.0f, 1.0f}, "python", 0});
    const auto hits = query(idx, Eigen::Vector2d(1, 0), 3);
    CHECK(hits[0].id == "a");
    CHECK(hits[1].id == "b");
    CHECK(hits[2].id == "c");
  }

  TEST_CASE("entry validation") {
    RetrievalIndex idx(2, fps(), "{}");
    CHECK_THROWS_AS(idx.add({"x", {1.0f, 1.0f}, "python", 0}), ContractViolation);
    CHECK_THROWS_AS(idx.add({"x", {1.0f}, "python", 0}), ShapeError);
    idx.add({"x", {1.0f, 0.0f}, "python", 0});
    CHECK_THROWS_AS(idx.add({"x", {0.0f, 1.0f}, "python", 0}), DuplicateId);
    CHECK(idx.find("x") == 0u);
    CHECK(!idx.find("y"));
  }

  TEST_CASE("save, load and re-save are lossless") {
    SplitMix64 rng(3);
    fixtures::TempDir dir("index");
    RetrievalIndex idx = random_index(rng, 12, 8);
    std::vector<CorpusSample> payload;
    for (const auto& e : idx.entries()) payload.push_back({e.id, "python", "x = " + e.id + "\n", "doc " + e.id});
    save_index(idx, payload, dir / "a.idx");
    RetrievalIndex back = load_index(dir / "a.idx");
    CHECK(back == idx);
    // The header names its sidecar, so the copy keeps the file name.
    std::filesystem::create_directories(dir / "b");
    save_index(back, payload, dir / "b" / "a.idx");
    CHECK(fixtures::slurp(dir / "a.idx") == fixtures::slurp(dir / "b" / "a.idx"));
    CHECK(fixtures::slurp(dir / "a.idx.payload.jsonl") == fixtures::slurp(dir / "b" / "a.idx.payload.jsonl"));
    for (std::size_t i = 0; i < payload.size(); ++i) CHECK(load_payload(dir / "a.idx", back.entries()[i]) == payload[i]);

    const std::string good = fixtures::slurp(dir / "a.idx");
    fixtures::spit(dir / "t.idx", good.substr(0, good.size() - 3));
    CHECK_THROWS_AS(load_index(dir / "t.idx"), FormatError);
    fixtures::spit(dir / "x.idx", good + "!");
    CHECK_THROWS_AS(load_index(dir / "x.idx"), FormatError);
    fixtures::spit(dir / "h.idx", "{not json\n");
    CHECK_THROWS_AS(load_index(dir / "h.idx"), FormatError);
    CHECK_THROWS_AS(load_index(dir / "missing.idx"), Error);
  }

  TEST_CASE("fingerprint checks") {
    SplitMix64 rng(4);
    const RetrievalIndex idx = random_index(rng, 3, 8);
    CHECK_NOTHROW(check_compatible(idx, "fnv1a64:m", "pipe:p"));
    CHECK_THROWS_AS(check_compatible(idx, "fnv1a64:other", "pipe:p"), FingerprintMismatch);
    CHECK_THROWS_AS(check_compatible(idx, "fnv1a64:m", "pipe:q"), FingerprintMismatch);
    const HashingProvider provider(8, 0);
    CHECK_THROWS_AS(query(idx, "mean of a list", provider, 3), FingerprintMismatch);
  }

  TEST_CASE("building from a corpus") {
    const Built b;
    const std::string spec = ProviderSpec{ProviderSpec::Kind::Hashing, 16}.to_json();
    const BuildResult empty = build_index({}, b.pipeline, b.model, spec);
    CHECK(empty.index.size() == 0);

    const std::vector<CorpusSample> three(b.corpus.begin(), b.corpus.begin() + 3);
    const BuildResult r = build_index(three, b.pipeline, b.model, spec, 2);
    REQUIRE(r.index.size() == 3);
    CHECK(r.index.dim() == 16);
    CHECK(r.failures.empty());
    CHECK(r.payload == three);
    CHECK(r.index.fingerprints().model == model_fingerprint(b.model));
    CHECK(r.index.fingerprints().pipeline == b.pipeline.fingerprint());
    const EncodedCode enc = b.pipeline.encode_code(three[1].code, three[1].id);
    const Eigen::VectorXd y = model_forward(b.model, enc.graph, enc.root_embedding);
    CHECK((as_vec(r.index.entries()[1].vector) - y).cwiseAbs().maxCoeff() < 1e-6);
    const auto hits = query(r.index, three[0].doc, b.pipeline.provider(), 2);
    CHECK(hits.size() == 2);

    auto dup = three;
    dup.push_back(three[0]);
    CHECK_THROWS_AS(build_index(dup, b.pipeline, b.model, spec), DuplicateId);

    auto bad = three;
    bad[1].language = "javascript";
    const BuildResult partial = build_index(bad, b.pipeline, b.model, spec);
    CHECK(partial.index.size() == 2);
    REQUIRE(partial.failures.size() == 1);
    CHECK(partial.failures[0].id == three[1].id);
  }

  TEST_CASE("evaluation ranks against brute force") {
    SplitMix64 rng(5);
    const RetrievalIndex idx = random_index(rng, 20, 8);
    std::vector<EvalQuery> qs;
    std::vector<int> expected;
    for (int i = 0; i < 20; ++i) {
      EvalQuery q{"q" + std::to_string(i), "e" + std::to_string(i), fixtures::random_unit(rng, 8)};
      if (i % 4 == 0) q.embedding = as_vec(idx.entries()[static_cast<std::size_t>(i)].vector);
      oracle::Vec sims;
      std::vector<std::string> ids;
      for (const auto& e : idx.entries()) {
        sims.push_back(oracle::cosine(fixtures::to_vec(as_vec(e.vector)), fixtures::to_vec(q.embedding)));
        ids.push_back(e.id);
      }
      expected.push_back(oracle::brute_rank(sims, ids, static_cast<std::size_t>(i)));
      qs.push_back(std::move(q));
    }
    qs.push_back({"lost", "nope", fixtures::random_unit(rng, 8)});
    const RetrievalReport r = evaluate_retrieval(idx, qs);
    CHECK(r.n_queries == 20);
    CHECK(r.excluded == 1);
    CHECK(r.errors.size() == 1);
    REQUIRE(r.ranks.size() == 20);
    for (std::size_t i = 0; i < 20; ++i) CHECK(r.ranks[i].rank == expected[i]);
    CHECK(r.ranks[0].rank == 1);
    CHECK(r.mrr == doctest::Approx(mrr(expected)));
    CHECK(std::abs(r.mam.mean - r.mam.mean_prime) < 1e-12);

    const auto j = nlohmann::json::parse(report_json(r));
    for (const char* key : {"n_queries", "excluded", "mrr", "recall", "mam", "errors"}) CHECK(j.contains(key));
    CHECK(j["recall"].contains("recall@5"));
    CHECK(j["mam"].contains("sd_prime"));
    CHECK(ranks_csv(r).starts_with("query_id,rank\nq0,1\n"));
  }

  TEST_CASE("candidate pools") {
    SplitMix64 rng(6);
    const RetrievalIndex idx = random_index(rng, 30, 8);
    std::vector<EvalQuery> qs;
    for (int i = 0; i < 30; ++i) qs.push_back({"q" + std::to_string(i), "e" + std::to_string(i), fixtures::random_unit(rng, 8)});
    EvalOptions o;
    o.pool_size = 3;
    o.seed = 9;
    const RetrievalReport a = evaluate_retrieval(idx, qs, o);
    const RetrievalReport b = evaluate_retrieval(idx, qs, o);
    for (std::size_t i = 0; i < 30; ++i) {
      CHECK(a.ranks[i].rank >= 1);
      CHECK(a.ranks[i].rank <= 3);
      CHECK(a.ranks[i].rank == b.ranks[i].rank);
    }
    o.pool_size = 0;
    CHECK_THROWS_AS(evaluate_retrieval(idx, qs, o), UsageError);
    EvalOptions bad_k;
    bad_k.ks = {0};
    CHECK_THROWS_AS(evaluate_retrieval(idx, qs, bad_k), UsageError);
  }

  TEST_CASE("CSV quoting") {
    RetrievalReport r;
    r.ranks = {{"a,b", 2}, {"say \"hi\"", 1}};
    CHECK(ranks_csv(r) == "query_id,rank\n\"a,b\",2\n\"say \"\"hi\"\"\",1\n");
  }
}
