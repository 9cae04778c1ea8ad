// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "support/fixtures.hpp"
#include "treeseek/ast.hpp"
#include "treeseek/embedding.hpp"
#include "treeseek/error.hpp"
#include "treeseek/graph.hpp"
#include "treeseek/languages.hpp"

#include <set>

using namespace treeseek;

namespace {

// Returns a fixed vector for every text.
class ConstantProvider final : public EmbeddingProvider {
public:
  explicit ConstantProvider(EmbeddingVector v) : v_(std::move(v)) {}
  int dim() const override { return static_cast<int>(v_.size()); }
  EmbeddingVector embed_text(std::string_view) const override { return v_; }
  std::size_t max_input_bytes() const override { return 1024; }
  std::string fingerprint() const override { return "const"; }

private:
  EmbeddingVector v_;
};

RefinedAst two_leaf_tree() {
  RefinedAst t;
  t.nodes = {{0, "root", "x y", {1, 2}}, {1, "a", "x", {}}, {2, "b", "y", {}}};
  return t;
}

std::string random_text(SplitMix64& rng) {
  static const char* const pieces[] = {"a", "\"", "\\", "\n", "\xc3\xa9", "{", "}", " ", "\t", "z"};
  std::string s;
  const auto n = rng.below(12);
  for (std::uint64_t i = 0; i < n; ++i) s += pieces[rng.below(10)];
  return s;
}

}  // namespace

TEST_SUITE("graph") {
  TEST_CASE("vocabulary appends an unknown slot") {
    const TypeVocabulary v("toy", {"a", "b"});
    CHECK(v.size() == 3);
    CHECK(v.lookup("a") == 0);
    CHECK(v.lookup("b") == 1);
    CHECK(v.lookup("zzz") == v.unknown_index());
    CHECK(v.unknown_index() == 2);
    CHECK_THROWS_AS(TypeVocabulary("toy", {"a", "a"}), ContractViolation);
  }

  TEST_CASE("grammar vocabularies have unique kinds") {
    for (const auto& lang : supported_languages()) {
      const TypeVocabulary v = TypeVocabulary::for_language(lang);
      const std::set<std::string> unique(v.kinds().begin(), v.kinds().end());
      CHECK(unique.size() == v.kinds().size());
      CHECK(v.lookup("function_definition_that_does_not_exist") == v.unknown_index());
    }
  }

  TEST_CASE("feature row is one-hot kind followed by the content embedding") {
    RefinedAst t;
    t.nodes = {{0, "b", "x", {}}};
    const TypeVocabulary v("toy", {"a", "b"});
    EmbeddingVector e(2);
    e << 0.6, 0.8;
    const ConstantProvider p(e);
    const CodeGraph g = initialize_features(t, v, p);
    REQUIRE(g.features.rows() == 1);
    REQUIRE(g.features.cols() == 5);
    const double want[] = {0, 1, 0, 0.6, 0.8};
    for (int k = 0; k < 5; ++k) CHECK(g.features(0, k) == want[k]);
  }

  TEST_CASE("unseen kinds land on the unknown column") {
    RefinedAst t;
    t.nodes = {{0, "mystery", "x", {}}};
    const TypeVocabulary v("toy", {"a", "b"});
    const CodeGraph g = initialize_features(t, v, ConstantProvider(EmbeddingVector::Ones(2)));
    CHECK(g.features(0, 2) == 1.0);
    CHECK(g.node_kinds[0] == 2);
  }

  TEST_CASE("no_node_type drops the one-hot block") {
    GraphOptions opt;
    opt.no_node_type = true;
    const CodeGraph g = initialize_features(two_leaf_tree(), TypeVocabulary("toy", {"a", "b"}),
                                            ConstantProvider(EmbeddingVector::Ones(2)), opt);
    CHECK(g.features.cols() == 2);
    CHECK(g.type_width == 0);
  }

  TEST_CASE("edges point from child to parent") {
    const EdgeList e = build_graph(two_leaf_tree());
    CHECK(e.root == 0);
    CHECK(e.edges == std::vector<Edge>{{1, 0}, {2, 0}});
    GraphOptions u;
    u.undirected = true;
    CHECK(build_graph(two_leaf_tree(), u).edges.size() == 4);
  }

  TEST_CASE("reversed tree degrees") {
    const RefinedAst r = refine_ast(parse_source("def f(a, b):\n    return a * b + 1\n", "python"),
                                    {"block"});
    const EdgeList e = build_graph(r);
    std::vector<int> out(r.nodes.size(), 0), in(r.nodes.size(), 0);
    for (const auto& ed : e.edges) {
      ++out[ed.src];
      ++in[ed.dst];
    }
    for (const auto& n : r.nodes) {
      CHECK(out[n.id] == (n.id == r.root ? 0 : 1));
      CHECK(in[n.id] == static_cast<int>(n.children.size()));
    }
  }

  TEST_CASE("graph JSON round-trips on randomized fixtures") {
    SplitMix64 rng(17);
    for (int t = 0; t < 50; ++t) {
      GraphDump d;
      const int n = 1 + static_cast<int>(rng.below(12));
      for (int i = 0; i < n; ++i) d.nodes.push_back({i, random_text(rng) + "k", random_text(rng)});
      for (const auto& e : fixtures::random_tree_edges(rng, n)) d.edges.push_back(e);
      const std::string json = serialize_graph(d);
      const GraphDump back = parse_graph(json);
      CHECK(back == d);
      CHECK(serialize_graph(back) == json);
    }
  }

  TEST_CASE("malformed graph JSON is a format error") {
    CHECK_THROWS_AS(parse_graph("{"), FormatError);
    CHECK_THROWS_AS(parse_graph(R"({"root":0,"nodes":[],"edges":[[0]]})"), FormatError);
    CHECK_THROWS_AS(parse_graph(R"({"root":5,"nodes":[{"id":0,"kind":"a","content":""}],"edges":[]})"),
                    FormatError);
  }
}
