// SPDX-License-Identifier: Apache-2.0
#include "treeseek/ast.hpp"
#include "treeseek/text.hpp"

#include <utility>

namespace treeseek {
namespace {

struct WorkNode {
  std::string kind;
  std::string content;
  std::vector<int> children;
};

bool is_container(const ContainerKinds& containers, std::string_view kind) {
  return containers.find(kind) != containers.end();
}

std::vector<int> post_order(const std::vector<WorkNode>& nodes, int root) {
  std::vector<int> order;
  order.reserve(nodes.size());
  std::vector<std::pair<int, bool>> stack{{root, false}};
  while (!stack.empty()) {
    auto [v, expanded] = stack.back();
    stack.pop_back();
    if (expanded) {
      order.push_back(v);
      continue;
    }
    stack.emplace_back(v, true);
    for (auto it = nodes[v].children.rbegin(); it != nodes[v].children.rend(); ++it) {
      stack.emplace_back(*it, false);
    }
  }
  return order;
}

void fold_shadow_nodes(std::vector<WorkNode>& nodes, int root, const ContainerKinds& containers) {
  const auto shadow = [&](int id) {
    return id != root && nodes[id].kind == nodes[id].content;
  };

  for (const int v : post_order(nodes, root)) {
    WorkNode& node = nodes[v];
    bool has_shadow = false;
    for (int c : node.children) has_shadow = has_shadow || shadow(c);
    if (!has_shadow) continue;

    const bool container_parent = is_container(containers, node.kind);
    std::string rebuilt;
    for (int c : node.children) {
      if (!container_parent && is_container(containers, nodes[c].kind)) continue;
      if (nodes[c].content.empty()) continue;
      if (!rebuilt.empty()) rebuilt.push_back(' ');
      rebuilt += nodes[c].content;
    }

    std::vector<int> kept;
    kept.reserve(node.children.size());
    for (int c : node.children) {
      if (shadow(c)) {
        // Children of a shadow node were refined already; they move up.
        kept.insert(kept.end(), nodes[c].children.begin(), nodes[c].children.end());
      } else {
        kept.push_back(c);
      }
    }
    node.content = std::move(rebuilt);
    node.children = std::move(kept);
  }
}

RefinedAst renumber(std::vector<WorkNode>& nodes, int root) {
  RefinedAst out;
  out.root = 0;
  std::vector<std::pair<int, int>> stack{{root, -1}};  // (work id, new parent id)
  while (!stack.empty()) {
    auto [v, parent] = stack.back();
    stack.pop_back();
    const int id = static_cast<int>(out.nodes.size());
    RefinedNode node;
    node.id = id;
    node.kind = std::move(nodes[v].kind);
    node.content = std::move(nodes[v].content);
    out.nodes.push_back(std::move(node));
    if (parent >= 0) out.nodes[parent].children.push_back(id);
    for (auto it = nodes[v].children.rbegin(); it != nodes[v].children.rend(); ++it) {
      stack.emplace_back(*it, id);
    }
  }
  return out;
}

}  // namespace

RefinedAst refine_ast(const RawAst& ast, const ContainerKinds& container_kinds,
                      std::size_t max_root_bytes) {
  std::vector<WorkNode> nodes;
  nodes.reserve(ast.nodes.size());
  for (const auto& raw : ast.nodes) {
    nodes.push_back({raw.kind, std::string(ast.text(raw)), raw.children});
  }
  fold_shadow_nodes(nodes, ast.root, container_kinds);
  nodes[ast.root].content = std::string(truncate_utf8(ast.source, max_root_bytes));
  return renumber(nodes, ast.root);
}

RefinedAst refine_ast(const RefinedAst& ast, const ContainerKinds& container_kinds) {
  std::vector<WorkNode> nodes;
  nodes.reserve(ast.nodes.size());
  for (const auto& n : ast.nodes) nodes.push_back({n.kind, n.content, n.children});
  fold_shadow_nodes(nodes, ast.root, container_kinds);
  return renumber(nodes, ast.root);
}

}  // namespace treeseek
