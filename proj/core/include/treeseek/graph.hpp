// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "treeseek/ast.hpp"
#include "treeseek/embedding.hpp"

#include <Eigen/Core>

#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace treeseek {

/// One-hot basis over a grammar's node kinds plus a trailing unknown slot.
class TypeVocabulary {
public:
  static constexpr std::string_view kUnknownKind = "<unknown>";

  TypeVocabulary() = default;
  TypeVocabulary(std::string language, std::vector<std::string> kinds);

  /// Vocabulary over the grammar's full kind inventory.
  static TypeVocabulary for_language(std::string_view language);

  const std::string& language() const { return language_; }
  const std::vector<std::string>& kinds() const { return kinds_; }
  int size() const { return static_cast<int>(kinds_.size()); }
  int unknown_index() const { return unknown_index_; }

  int lookup(std::string_view kind) const;

private:
  std::string language_;
  std::vector<std::string> kinds_;
  std::unordered_map<std::string, int> index_;
  int unknown_index_ = 0;
};

struct Edge {
  int src = 0;
  int dst = 0;
  bool operator==(const Edge&) const = default;
  auto operator<=>(const Edge&) const = default;
};

struct GraphOptions {
  /// Emit both directions of every tree edge ("undirect AST" ablation).
  bool undirected = false;
  /// Drop the one-hot kind block from node features ("no AST node type" ablation).
  bool no_node_type = false;
};

struct EdgeList {
  std::vector<Edge> edges;
  int root = 0;
};

/// Featured graph over a refined tree. Edges point from former child to
/// former parent.
struct CodeGraph {
  int num_nodes = 0;
  std::vector<Edge> edges;
  int root = 0;
  /// num_nodes x (type_width + content_dim); row i = one-hot(kind) || content.
  Eigen::MatrixXd features;
  std::vector<int> node_kinds;
  int type_width = 0;
  int content_dim = 0;
  std::vector<std::string> kinds;
  std::vector<std::string> contents;
};

/// Structural part of a graph dump: what serialize_graph writes.
struct GraphDump {
  struct Node {
    int id = 0;
    std::string kind;
    std::string content;
    bool operator==(const Node&) const = default;
  };
  int root = 0;
  std::vector<Node> nodes;
  std::vector<Edge> edges;
  bool operator==(const GraphDump&) const = default;
};

EdgeList build_graph(const RefinedAst& refined, const GraphOptions& options = {});

/// Builds the featured graph. `root_content_embedding`, when given, replaces
/// the embedding of the root's content (used for store-keyed whole-code
/// vectors). Embedder failures are rethrown as EmbeddingError with the node id.
CodeGraph initialize_features(const RefinedAst& refined, const TypeVocabulary& vocab,
                              const EmbeddingProvider& embedder,
                              const GraphOptions& options = {},
                              const EmbeddingVector* root_content_embedding = nullptr);

GraphDump dump_of(const CodeGraph& graph);

/// JSON: {"root": int, "nodes": [{"id","kind","content"}], "edges": [[src,dst],...]}
std::string serialize_graph(const CodeGraph& graph);
std::string serialize_graph(const GraphDump& dump);
/// Throws FormatError on malformed input.
GraphDump parse_graph(std::string_view json_text);

}  // namespace treeseek
