// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "treeseek/ast.hpp"
#include "treeseek/corpus.hpp"
#include "treeseek/error.hpp"
#include "treeseek/languages.hpp"
#include "treeseek/text.hpp"

#include <algorithm>

using namespace treeseek;

namespace {

const char* const kMean = "def mean(data):\n    return sum(data)/len(data)";

ContainerKinds containers(const std::string& lang) {
  const auto& k = grammar(lang).container_kinds;
  return {k.begin(), k.end()};
}

RefinedAst refine(const std::string& src, const std::string& lang = "python") {
  return refine_ast(parse_source(src, lang), containers(lang));
}

bool has_shadow(const RefinedAst& t) {
  for (const auto& n : t.nodes) {
    if (n.id != t.root && n.kind == n.content) return true;
  }
  return false;
}

const RefinedNode* find_kind(const RefinedAst& t, std::string_view kind) {
  for (const auto& n : t.nodes) {
    if (n.kind == kind) return &n;
  }
  return nullptr;
}

}  // namespace

TEST_SUITE("ast") {
  TEST_CASE("parse gives a pre-order tree with a function_definition under the root") {
    const RawAst ast = parse_source(kMean, "python");
    CHECK_NOTHROW(ast.validate());
    CHECK(ast.root == 0);
    REQUIRE(!ast.nodes[0].children.empty());
    CHECK(ast.nodes[ast.nodes[0].children[0]].kind == "function_definition");
    std::size_t edges = 0;
    for (const auto& n : ast.nodes) edges += n.children.size();
    CHECK(edges == ast.nodes.size() - 1);
  }

  TEST_CASE("empty source is a lone root") {
    const RawAst ast = parse_source("", "python");
    REQUIRE(ast.nodes.size() == 1);
    CHECK(ast.nodes[0].children.empty());
    const RefinedAst r = refine_ast(ast, containers("python"));
    CHECK(r.nodes.size() == 1);
    CHECK(r.nodes[0].content.empty());
  }

  TEST_CASE("unsupported language and bad encoding") {
    CHECK_THROWS_AS(parse_source("x", "cobol"), UnsupportedLanguage);
    try {
      parse_source("x = 1\n\xff", "python");
      FAIL("expected EncodingError");
    } catch (const EncodingError& e) {
      CHECK(e.offset() == 6);
    }
  }

  TEST_CASE("shadow predicate compares kind to source text") {
    const RawAst ast = parse_source(kMean, "python");
    int shadows = 0;
    for (const auto& n : ast.nodes) {
      if (is_shadow_node(n, ast.source)) {
        ++shadows;
        CHECK(ast.text(n) == n.kind);
      }
    }
    CHECK(shadows >= 4);  // def ( ) : return / ...
  }

  TEST_CASE("function_definition is rebuilt from its non-container children") {
    const RefinedAst r = refine(kMean);
    const RefinedNode* fn = find_kind(r, "function_definition");
    REQUIRE(fn != nullptr);
    CHECK(strip_whitespace(fn->content) == strip_whitespace("def mean (data):"));
    CHECK_FALSE(has_shadow(r));
    CHECK_NOTHROW(r.validate());
  }

  TEST_CASE("root content is the source, optionally truncated") {
    const RefinedAst full = refine(kMean);
    CHECK(full.nodes[full.root].content == kMean);
    const RefinedAst cut = refine_ast(parse_source(kMean, "python"), containers("python"), 10);
    CHECK(cut.nodes[cut.root].content == std::string(kMean).substr(0, 10));
    const std::string uni = "s = '\xe2\x82\xac'";
    const RefinedAst u = refine_ast(parse_source(uni, "python"), containers("python"), 6);
    CHECK(u.nodes[u.root].content == "s = '");
  }

  TEST_CASE("hand-built tree folds punctuation into its parent") {
    RawAst ast;
    ast.source = "a+b";
    ast.nodes = {{0, "module", {0, 3}, {1}},
                 {1, "expr", {0, 3}, {2, 3, 4}},
                 {2, "identifier", {0, 1}, {}},
                 {3, "+", {1, 2}, {}},
                 {4, "identifier", {2, 3}, {}}};
    const RefinedAst r = refine_ast(ast, {});
    REQUIRE(r.nodes.size() == 4);
    CHECK(r.nodes[1].kind == "expr");
    CHECK(r.nodes[1].content == "a + b");
    CHECK(r.nodes[1].children == std::vector<int>{2, 3});
  }

  TEST_CASE("container children are left out of a rebuilt parent") {
    RawAst ast;
    ast.source = "if x: y";
    ast.nodes = {{0, "module", {0, 7}, {1}},
                 {1, "if_statement", {0, 7}, {2, 3, 4, 5}},
                 {2, "if", {0, 2}, {}},
                 {3, "identifier", {3, 4}, {}},
                 {4, ":", {4, 5}, {}},
                 {5, "block", {6, 7}, {6}},
                 {6, "identifier", {6, 7}, {}}};
    const RefinedAst r = refine_ast(ast, {"block"});
    CHECK(r.nodes[1].content == "if x :");
    const RefinedAst r2 = refine_ast(ast, {});
    CHECK(r2.nodes[1].content == "if x : y");
  }

  TEST_CASE("refinement invariants over the synthetic corpus") {
    for (const auto& s : synthetic_corpus(128, 3)) {
      const RefinedAst r = refine(s.code);
      CHECK_NOTHROW(r.validate());
      CHECK_FALSE(has_shadow(r));
      CHECK(r.root == 0);
      CHECK(r.nodes[0].content == s.code);
      for (std::size_t i = 0; i < r.nodes.size(); ++i) CHECK(r.nodes[i].id == static_cast<int>(i));
      // Pre-order: every child id is larger than its parent's.
      for (const auto& n : r.nodes) {
        for (int c : n.children) CHECK(c > n.id);
      }
      // Refining again changes nothing.
      const RefinedAst again = refine_ast(r, containers("python"));
      REQUIRE(again.nodes.size() == r.nodes.size());
      for (std::size_t i = 0; i < r.nodes.size(); ++i) {
        CHECK(again.nodes[i].kind == r.nodes[i].kind);
        CHECK(again.nodes[i].content == r.nodes[i].content);
        CHECK(again.nodes[i].children == r.nodes[i].children);
      }
    }
  }

  TEST_CASE("javascript and go parse and refine") {
    const RefinedAst js = refine("function add(a, b) { return a + b; }", "javascript");
    CHECK_FALSE(has_shadow(js));
    CHECK(find_kind(js, "function_declaration") != nullptr);
    const RefinedAst go = refine("package main\nfunc add(a int, b int) int { return a + b }\n", "go");
    CHECK_FALSE(has_shadow(go));
    CHECK(find_kind(go, "function_declaration") != nullptr);
  }

  TEST_CASE("syntax errors still yield a valid tree") {
    const RawAst ast = parse_source("def broken(:\n", "python");
    CHECK_NOTHROW(ast.validate());
    const RefinedAst r = refine_ast(ast, containers("python"));
    CHECK_NOTHROW(r.validate());
  }

  TEST_CASE("supported languages") {
    const auto langs = supported_languages();
    for (const char* l : {"python", "javascript", "go"}) {
      CHECK(std::find(langs.begin(), langs.end(), l) != langs.end());
    }
  }
}
