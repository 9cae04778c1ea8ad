// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "support/fixtures.hpp"
#include "treeseek/corpus.hpp"
#include "treeseek/embedding_store.hpp"
#include "treeseek/error.hpp"
#include "treeseek/pipeline.hpp"

#include <set>

using namespace treeseek;

TEST_SUITE("corpus") {
  TEST_CASE("line round trip") {
    const CorpusSample s{"id-1", "python", "def f():\n    return \"\\u00e9\"\n", "returns \xc3\xa9"};
    CHECK(parse_corpus_line(corpus_line(s)) == s);
  }

  TEST_CASE("file round trip and duplicate detection") {
    fixtures::TempDir dir("corpus");
    const auto samples = synthetic_corpus(20, 4);
    write_corpus(dir / "c.jsonl", samples);
    CHECK(read_corpus(dir / "c.jsonl") == samples);
    fixtures::spit(dir / "d.jsonl", corpus_line(samples[0]) + "\n" + corpus_line(samples[0]) + "\n");
    CHECK_THROWS_AS(read_corpus(dir / "d.jsonl"), DuplicateId);
  }

  TEST_CASE("malformed lines") {
    CHECK_THROWS_AS(parse_corpus_line("{", 3), FormatError);
    CHECK_THROWS_AS(parse_corpus_line(R"({"id": "x"})", 1), FormatError);
  }

  TEST_CASE("synthetic corpus is deterministic and distinct") {
    const auto a = synthetic_corpus(128, 9);
    CHECK(a == synthetic_corpus(128, 9));
    CHECK(a != synthetic_corpus(128, 10));
    std::set<std::string> ids, codes, docs;
    for (const auto& s : a) {
      ids.insert(s.id);
      codes.insert(s.code);
      docs.insert(s.doc);
      CHECK(s.language == "python");
    }
    CHECK(ids.size() == 128);
    CHECK(codes.size() == 128);
    CHECK(docs.size() == 128);
    CHECK_THROWS(synthetic_corpus(129, 0));
  }
}

TEST_SUITE("pipeline") {
  TEST_CASE("encodes code into a featured graph") {
    const Pipeline p(PipelineConfig{}, std::make_shared<HashingProvider>(16, 0));
    const EncodedCode c = p.encode_code("def mean(data):\n    return sum(data)/len(data)");
    CHECK(c.graph.num_nodes > 5);
    CHECK(c.graph.features.cols() == p.feature_width());
    CHECK(c.root_embedding.norm() == doctest::Approx(1.0));
    CHECK(c.graph.features.row(0).tail(16).transpose().isApprox(c.root_embedding));
  }

  TEST_CASE("keyed store vectors replace the root and doc embeddings") {
    auto store = std::make_shared<EmbeddingStore>(8, "enc");
    std::vector<float> code(8, 0.0f), doc(8, 0.0f);
    code[1] = 1.0f;
    doc[2] = 3.0f;
    store->add("code:s1", code);
    store->add("doc:s1", doc);
    const Pipeline p(PipelineConfig{},
                     std::make_shared<StoreProvider>(store, MissingPolicy::FallbackToHash));
    const EncodedCode c = p.encode_code("x = 1", "s1");
    CHECK(c.root_embedding[1] == 1.0);
    CHECK(p.embed_doc("anything", "s1")[2] == 1.0);
    CHECK(p.embed_doc("anything", "s2").norm() == doctest::Approx(1.0));
  }

  TEST_CASE("corpus encoding records failures and ignores job count") {
    auto corpus = synthetic_corpus(24, 2);
    corpus[5].language = "go";
    const Pipeline p(PipelineConfig{}, std::make_shared<HashingProvider>(16, 0));
    const EncodedCorpus one = encode_corpus(p, corpus, 1);
    const EncodedCorpus four = encode_corpus(p, corpus, 4);
    REQUIRE(one.failures.size() == 1);
    CHECK(one.failures[0].id == corpus[5].id);
    REQUIRE(one.samples.size() == four.samples.size());
    for (std::size_t i = 0; i < one.samples.size(); ++i) {
      CHECK(one.samples[i].id == four.samples[i].id);
      CHECK(one.samples[i].graph.features == four.samples[i].graph.features);
      CHECK(one.samples[i].text_embedding == four.samples[i].text_embedding);
    }
  }

  TEST_CASE("fingerprints track configuration") {
    const auto prov = std::make_shared<HashingProvider>(16, 0);
    PipelineConfig a, b;
    b.graph.undirected = true;
    CHECK(Pipeline(a, prov).fingerprint() == Pipeline(a, prov).fingerprint());
    CHECK(Pipeline(a, prov).fingerprint() != Pipeline(b, prov).fingerprint());
    CHECK(Pipeline(a, prov).fingerprint() !=
          Pipeline(a, std::make_shared<HashingProvider>(16, 1)).fingerprint());
  }

  TEST_CASE("config JSON round trip") {
    PipelineConfig c;
    c.language = "go";
    c.graph.no_node_type = true;
    c.container_kinds = ContainerKinds{"block", "x"};
    const PipelineConfig back = PipelineConfig::from_json(c.to_json());
    CHECK(back.language == "go");
    CHECK(back.graph.no_node_type);
    CHECK(back.container_kinds == c.container_kinds);
    ProviderSpec s;
    s.kind = ProviderSpec::Kind::Store;
    s.store_path = "x.embs";
    s.missing = MissingPolicy::Error;
    CHECK(ProviderSpec::from_json(s.to_json()) == s);
  }
}
