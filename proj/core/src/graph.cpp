// SPDX-License-Identifier: Apache-2.0
#include "treeseek/graph.hpp"

#include "treeseek/error.hpp"
#include "treeseek/languages.hpp"

#include <json.hpp>

namespace treeseek {

TypeVocabulary::TypeVocabulary(std::string language, std::vector<std::string> kinds)
    : language_(std::move(language)), kinds_(std::move(kinds)) {
  for (std::size_t i = 0; i < kinds_.size(); ++i) {
    if (kinds_[i] == kUnknownKind) throw ContractViolation("vocabulary may not list <unknown>");
    if (!index_.emplace(kinds_[i], static_cast<int>(i)).second) {
      throw ContractViolation("duplicate kind '" + kinds_[i] + "' in vocabulary");
    }
  }
  unknown_index_ = static_cast<int>(kinds_.size());
  kinds_.emplace_back(kUnknownKind);
}

TypeVocabulary TypeVocabulary::for_language(std::string_view language) {
  const Grammar& g = grammar(language);
  return TypeVocabulary(g.id, g.kind_inventory);
}

int TypeVocabulary::lookup(std::string_view kind) const {
  const auto it = index_.find(std::string(kind));
  return it == index_.end() ? unknown_index_ : it->second;
}

EdgeList build_graph(const RefinedAst& refined, const GraphOptions& options) {
  EdgeList out;
  out.root = refined.root;
  for (const auto& node : refined.nodes) {
    for (int child : node.children) {
      out.edges.push_back({child, node.id});
      if (options.undirected) out.edges.push_back({node.id, child});
    }
  }
  return out;
}

CodeGraph initialize_features(const RefinedAst& refined, const TypeVocabulary& vocab,
                              const EmbeddingProvider& embedder, const GraphOptions& options,
                              const EmbeddingVector* root_content_embedding) {
  const int d = embedder.dim();
  if (d <= 0) throw ContractViolation("embedder dimension must be positive");
  const int t = options.no_node_type ? 0 : vocab.size();

  CodeGraph g;
  g.num_nodes = static_cast<int>(refined.nodes.size());
  auto edges = build_graph(refined, options);
  g.edges = std::move(edges.edges);
  g.root = edges.root;
  g.type_width = t;
  g.content_dim = d;
  g.features = Eigen::MatrixXd::Zero(g.num_nodes, t + d);
  g.node_kinds.resize(g.num_nodes);
  g.kinds.resize(g.num_nodes);
  g.contents.resize(g.num_nodes);

  for (const auto& node : refined.nodes) {
    const int i = node.id;
    const int kind_index = vocab.lookup(node.kind);
    g.node_kinds[i] = kind_index;
    g.kinds[i] = node.kind;
    g.contents[i] = node.content;
    if (t > 0) g.features(i, kind_index) = 1.0;

    EmbeddingVector content;
    try {
      if (i == refined.root && root_content_embedding != nullptr) {
        content = *root_content_embedding;
      } else {
        content = embedder.embed_text(node.content);
      }
    } catch (const EmbeddingError&) {
      throw;
    } catch (const std::exception& e) {
      throw EmbeddingError(i, e.what());
    }
    if (content.size() != d) {
      throw EmbeddingError(i, "embedding has dimension " + std::to_string(content.size()) +
                                  ", expected " + std::to_string(d));
    }
    if (!content.allFinite() || !normalize(content)) {
      throw EmbeddingError(i, "embedding is zero or not finite");
    }
    g.features.row(i).tail(d) = content.transpose();
  }
  return g;
}

GraphDump dump_of(const CodeGraph& graph) {
  GraphDump dump;
  dump.root = graph.root;
  dump.edges = graph.edges;
  dump.nodes.reserve(graph.num_nodes);
  for (int i = 0; i < graph.num_nodes; ++i) {
    dump.nodes.push_back({i, graph.kinds.at(i), graph.contents.at(i)});
  }
  return dump;
}

std::string serialize_graph(const GraphDump& dump) {
  nlohmann::ordered_json j;
  j["root"] = dump.root;
  auto nodes = nlohmann::ordered_json::array();
  for (const auto& n : dump.nodes) {
    nlohmann::ordered_json node;
    node["id"] = n.id;
    node["kind"] = n.kind;
    node["content"] = n.content;
    nodes.push_back(std::move(node));
  }
  j["nodes"] = std::move(nodes);
  auto edges = nlohmann::ordered_json::array();
  for (const auto& e : dump.edges) edges.push_back({e.src, e.dst});
  j["edges"] = std::move(edges);
  return j.dump();
}

std::string serialize_graph(const CodeGraph& graph) { return serialize_graph(dump_of(graph)); }

GraphDump parse_graph(std::string_view json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(std::string("graph JSON: ") + e.what(), e.byte);
  }
  GraphDump dump;
  try {
    dump.root = j.at("root").get<int>();
    for (const auto& n : j.at("nodes")) {
      dump.nodes.push_back({n.at("id").get<int>(), n.at("kind").get<std::string>(),
                            n.at("content").get<std::string>()});
    }
    for (const auto& e : j.at("edges")) {
      if (!e.is_array() || e.size() != 2) throw FormatError("graph JSON: edge is not a pair", 0);
      dump.edges.push_back({e[0].get<int>(), e[1].get<int>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("graph JSON: ") + e.what(), 0);
  }
  const int n = static_cast<int>(dump.nodes.size());
  for (int i = 0; i < n; ++i) {
    if (dump.nodes[i].id != i) throw FormatError("graph JSON: node ids must be dense", 0);
  }
  if (n > 0 && (dump.root < 0 || dump.root >= n)) {
    throw FormatError("graph JSON: root out of range", 0);
  }
  for (const auto& e : dump.edges) {
    if (e.src < 0 || e.src >= n || e.dst < 0 || e.dst >= n) {
      throw FormatError("graph JSON: edge endpoint out of range", 0);
    }
  }
  return dump;
}

}  // namespace treeseek
