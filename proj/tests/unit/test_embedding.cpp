// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "support/fixtures.hpp"
#include "treeseek/embedding.hpp"
#include "treeseek/embedding_store.hpp"
#include "treeseek/error.hpp"
#include "treeseek/text.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

using namespace treeseek;

namespace {

std::uint64_t ref_mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Seed-0 reference: ASCII-only text, one byte per code point.
oracle::Vec ref_hash_embed(const std::string& text, int dim) {
  oracle::Vec v(static_cast<std::size_t>(dim), 0.0);
  std::vector<std::string> grams;
  if (text.size() < 3) {
    grams.push_back(text);
  } else {
    for (std::size_t i = 0; i + 3 <= text.size(); ++i) grams.push_back(text.substr(i, 3));
  }
  for (const auto& g : grams) {
    const std::uint64_t h = oracle::fnv1a64(g);
    v[ref_mix(h) % static_cast<std::uint64_t>(dim)] += (ref_mix(h ^ 0x2545f4914f6cdd1dULL) & 1) ? 1.0 : -1.0;
  }
  double n = 0.0;
  for (double x : v) n += x * x;
  for (double& x : v) x /= std::sqrt(n);
  return v;
}

EmbeddingStore random_store(SplitMix64& rng, std::uint32_t dim, std::size_t count) {
  EmbeddingStore s(dim, "model-\xc3\xa9-" + std::to_string(rng.below(1000)));
  for (std::size_t i = 0; i < count; ++i) {
    std::vector<float> v(dim);
    for (auto& x : v) x = static_cast<float>(rng.uniform(-2.0, 2.0));
    s.add("id-" + std::to_string(i) + (i % 3 == 0 ? "-\xe2\x82\xac" : ""), std::move(v));
  }
  return s;
}

std::string bytes_of(const EmbeddingStore& s) {
  std::ostringstream os(std::ios::binary);
  write_store(os, s);
  return os.str();
}

}  // namespace

TEST_SUITE("embedding") {
  TEST_CASE("hash embedding matches the reference construction") {
    for (const std::string text : {"def mean ( data ) :", "ab", "x", "return a + b", "(((("}) {
      const EmbeddingVector got = hash_embed(text, 64, 0);
      const oracle::Vec want = ref_hash_embed(text, 64);
      CHECK(fixtures::max_abs_diff(fixtures::to_vec(got), want) < 1e-15);
    }
  }

  TEST_CASE("hash embedding contracts") {
    CHECK(hash_embed("anything", 32, 1).norm() == doctest::Approx(1.0).epsilon(1e-12));
    const EmbeddingVector e = hash_embed("", 16, 0);
    CHECK(e[0] == 1.0);
    CHECK(e.norm() == 1.0);
    CHECK_THROWS_AS(hash_embed("x", 4, 0), ContractViolation);
    CHECK_THROWS_AS(hash_embed("\xff", 16, 0), EncodingError);
    CHECK(hash_embed("same text", 32, 3) == hash_embed("same text", 32, 3));
    CHECK(hash_embed("same text", 32, 3) != hash_embed("same text", 32, 4));
  }

  TEST_CASE("multi-byte code points form single gram positions") {
    // Three code points, six bytes: exactly one gram.
    const std::string s = "\xc3\xa9\xc3\xa9\xc3\xa9";
    const EmbeddingVector v = hash_embed(s, 64, 0);
    int nonzero = 0;
    for (Eigen::Index i = 0; i < v.size(); ++i) nonzero += v[i] != 0.0 ? 1 : 0;
    CHECK(nonzero == 1);
  }

  TEST_CASE("hashing provider truncates to its input budget") {
    const HashingProvider p(32, 0, 8);
    CHECK(p.embed_text("0123456789abcdef") == hash_embed("01234567", 32, 0));
    CHECK(p.fingerprint() != HashingProvider(32, 1, 8).fingerprint());
  }

  TEST_CASE("store provider looks up keys and content hashes") {
    auto store = std::make_shared<EmbeddingStore>(8, "m");
    std::vector<float> v(8, 0.0f);
    v[3] = 2.0f;
    store->add("code:s1", v);
    store->add(content_key("hello"), v);
    const StoreProvider strict(store, MissingPolicy::Error);
    CHECK(strict.lookup("code:s1").value()[3] == 1.0);
    CHECK_FALSE(strict.lookup("code:s2").has_value());
    CHECK(strict.embed_text("hello")[3] == 1.0);
    CHECK_THROWS_AS(strict.embed_text("other"), MissingEmbedding);
    const StoreProvider lenient(store, MissingPolicy::FallbackToHash, 5);
    CHECK(lenient.embed_text("other") == hash_embed("other", 8, 5));
  }
}

TEST_SUITE("store") {
  TEST_CASE("byte-exact round trip on randomized stores") {
    SplitMix64 rng(23);
    fixtures::TempDir dir("store");
    for (int t = 0; t < 20; ++t) {
      const auto dim = static_cast<std::uint32_t>(1 + rng.below(40));
      const EmbeddingStore s = random_store(rng, dim, rng.below(30));
      const auto path = dir / ("s" + std::to_string(t) + ".embs");
      save_store(s, path);
      const EmbeddingStore back = load_store(path);
      CHECK(back == s);
      CHECK(bytes_of(back) == fixtures::slurp(path));
    }
  }

  TEST_CASE("header layout") {
    EmbeddingStore s(2, "ab");
    s.add("x", {1.0f, -1.0f});
    const std::string b = bytes_of(s);
    CHECK(b.substr(0, 4) == "EMBS");
    CHECK(b.size() == 4 + 4 + 4 + 8 + 4 + 2 + 4 + 1 + 8);
    CHECK(static_cast<unsigned char>(b[4]) == 1);   // version LE
    CHECK(static_cast<unsigned char>(b[8]) == 2);   // dim LE
    CHECK(static_cast<unsigned char>(b[12]) == 1);  // count LE
  }

  TEST_CASE("corruption is reported with an offset") {
    EmbeddingStore s(2, "m");
    s.add("x", {1.0f, 0.0f});
    const std::string good = bytes_of(s);

    std::string bad = good;
    bad[0] = 'X';
    std::istringstream a(bad);
    try {
      read_store(a);
      FAIL("expected FormatError");
    } catch (const FormatError& e) {
      CHECK(e.offset() == 0);
    }

    std::istringstream truncated(good.substr(0, good.size() - 3));
    try {
      read_store(truncated);
      FAIL("expected FormatError");
    } catch (const FormatError& e) {
      CHECK(e.offset() == good.size() - 4);  // start of the short float read
    }

    std::istringstream dim(good);
    CHECK_THROWS_AS(read_store(dim, 0, 3u), FormatError);
  }

  TEST_CASE("trailing bytes and duplicates are rejected") {
    fixtures::TempDir dir("store-bad");
    EmbeddingStore s(1, "m");
    s.add("x", {1.0f});
    fixtures::spit(dir / "t.embs", bytes_of(s) + "junk");
    CHECK_THROWS_AS(load_store(dir / "t.embs"), FormatError);
    CHECK_THROWS_AS(s.add("x", {2.0f}), DuplicateId);
    CHECK_THROWS_AS(s.add("y", {1.0f, 2.0f}), ShapeError);
  }

  TEST_CASE("JSONL import") {
    fixtures::TempDir dir("jsonl");
    fixtures::spit(dir / "v.jsonl",
                   "{\"id\": \"doc:a\", \"vector\": [0.5, 0.25]}\n\n{\"id\": \"doc:b\", \"vector\": [1, 2]}\n");
    const EmbeddingStore s = import_jsonl(dir / "v.jsonl", "enc");
    CHECK(s.dim() == 2);
    CHECK(s.size() == 2);
    CHECK(s.model_id() == "enc");
    CHECK(s.find("doc:b").value()[1] == 2.0f);
    fixtures::spit(dir / "w.jsonl", "{\"id\": \"a\", \"vector\": [1]}\n{\"id\": \"b\", \"vector\": [1, 2]}\n");
    CHECK_THROWS_AS(import_jsonl(dir / "w.jsonl", "enc"), FormatError);
  }
}
