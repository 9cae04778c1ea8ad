// SPDX-License-Identifier: Apache-2.0
#include "treeseek/ast.hpp"

#include "treeseek/error.hpp"
#include "treeseek/text.hpp"
#include "ts_grammar.hpp"

#include <memory>
#include <sstream>
#include <vector>

namespace treeseek {
namespace {

struct ParserDeleter {
  void operator()(TSParser* p) const { ts_parser_delete(p); }
};
struct TreeDeleter {
  void operator()(TSTree* t) const { ts_tree_delete(t); }
};

template <typename Node>
void check_tree_shape(const std::vector<Node>& nodes, int root, const char* what) {
  const int n = static_cast<int>(nodes.size());
  if (n == 0) throw ContractViolation(std::string(what) + ": empty tree");
  if (root < 0 || root >= n) throw ContractViolation(std::string(what) + ": root out of range");

  std::vector<int> parent_count(n, 0);
  std::size_t edges = 0;
  for (int i = 0; i < n; ++i) {
    if (nodes[i].id != i) throw ContractViolation(std::string(what) + ": ids are not dense");
    std::vector<char> seen(n, 0);
    for (int c : nodes[i].children) {
      if (c < 0 || c >= n) throw ContractViolation(std::string(what) + ": child out of range");
      if (seen[c]) throw ContractViolation(std::string(what) + ": duplicate child");
      seen[c] = 1;
      ++parent_count[c];
      ++edges;
    }
  }
  if (edges != static_cast<std::size_t>(n - 1)) {
    throw ContractViolation(std::string(what) + ": edge count is not n - 1");
  }
  for (int i = 0; i < n; ++i) {
    const int expected = i == root ? 0 : 1;
    if (parent_count[i] != expected) {
      throw ContractViolation(std::string(what) + ": node " + std::to_string(i) +
                              " has " + std::to_string(parent_count[i]) + " parents");
    }
  }
  // n - 1 edges, one parent each, and everything reachable => a tree.
  std::vector<int> stack{root};
  std::vector<char> visited(n, 0);
  int reached = 0;
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    if (visited[v]) throw ContractViolation(std::string(what) + ": cycle");
    visited[v] = 1;
    ++reached;
    for (int c : nodes[v].children) stack.push_back(c);
  }
  if (reached != n) throw ContractViolation(std::string(what) + ": unreachable nodes");
}

}  // namespace

std::string_view RawAst::text(const RawNode& node) const {
  return std::string_view(source).substr(node.span.begin, node.span.end - node.span.begin);
}

void RawAst::validate() const {
  check_tree_shape(nodes, root, "RawAst");
  for (const auto& node : nodes) {
    if (node.span.begin > node.span.end || node.span.end > source.size()) {
      throw ContractViolation("RawAst: span of node " + std::to_string(node.id) +
                              " lies outside the source");
    }
    for (int c : node.children) {
      const auto& cs = nodes[c].span;
      if (cs.begin < node.span.begin || cs.end > node.span.end) {
        throw ContractViolation("RawAst: node " + std::to_string(c) +
                                " is not contained in its parent");
      }
    }
  }
}

void RefinedAst::validate() const { check_tree_shape(nodes, root, "RefinedAst"); }

RawAst parse_source(std::string_view source, std::string_view language) {
  const TSLanguage* lang = detail::ts_language(language);
  if (auto bad = find_invalid_utf8(source)) throw EncodingError("invalid UTF-8", *bad);
  if (source.size() > UINT32_MAX) throw EncodingError("source too large", UINT32_MAX);

  std::unique_ptr<TSParser, ParserDeleter> parser(ts_parser_new());
  if (!ts_parser_set_language(parser.get(), lang)) {
    throw ContractViolation("tree-sitter rejected the grammar for " + std::string(language));
  }
  std::unique_ptr<TSTree, TreeDeleter> tree(ts_parser_parse_string(
      parser.get(), nullptr, source.data(), static_cast<std::uint32_t>(source.size())));
  if (!tree) throw ContractViolation("tree-sitter returned no tree");

  RawAst ast;
  ast.source = std::string(source);
  ast.root = 0;

  // Pre-order walk with a cursor; `parents` tracks the id of each ancestor.
  TSTreeCursor cursor = ts_tree_cursor_new(ts_tree_root_node(tree.get()));
  std::vector<int> parents;
  while (true) {
    const TSNode node = ts_tree_cursor_current_node(&cursor);
    const int id = static_cast<int>(ast.nodes.size());
    RawNode raw;
    raw.id = id;
    raw.kind = ts_node_type(node);
    raw.span = {ts_node_start_byte(node), ts_node_end_byte(node)};
    ast.nodes.push_back(std::move(raw));
    if (!parents.empty()) ast.nodes[parents.back()].children.push_back(id);

    if (ts_tree_cursor_goto_first_child(&cursor)) {
      parents.push_back(id);
      continue;
    }
    bool done = false;
    while (!ts_tree_cursor_goto_next_sibling(&cursor)) {
      if (!ts_tree_cursor_goto_parent(&cursor)) {
        done = true;
        break;
      }
      parents.pop_back();
    }
    if (done) break;
  }
  ts_tree_cursor_delete(&cursor);
  return ast;
}

bool is_shadow_node(const RawNode& node, std::string_view source) {
  if (node.span.end > source.size() || node.span.begin > node.span.end) return false;
  return node.kind == source.substr(node.span.begin, node.span.end - node.span.begin);
}

std::string summarize(const RawAst& ast, std::size_t max_text) {
  std::ostringstream out;
  out << "nodes: " << ast.nodes.size() << "\n";
  std::vector<std::pair<int, int>> stack{{ast.root, 0}};
  while (!stack.empty()) {
    auto [id, depth] = stack.back();
    stack.pop_back();
    const RawNode& node = ast.nodes[id];
    std::string text(ast.text(node));
    for (auto& c : text) {
      if (c == '\n' || c == '\t' || c == '\r') c = ' ';
    }
    if (text.size() > max_text) text = std::string(truncate_utf8(text, max_text)) + "...";
    out << std::string(2 * depth, ' ') << node.kind << " [" << node.span.begin << ","
        << node.span.end << ")";
    if (is_shadow_node(node, ast.source)) out << " shadow";
    out << " \"" << text << "\"\n";
    for (auto it = node.children.rbegin(); it != node.children.rend(); ++it) {
      stack.emplace_back(*it, depth + 1);
    }
  }
  return out.str();
}

}  // namespace treeseek
