// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <limits>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace treeseek {

struct ByteRange {
  std::uint32_t begin = 0;
  std::uint32_t end = 0;
  bool operator==(const ByteRange&) const = default;
};

struct RawNode {
  int id = 0;
  std::string kind;
  ByteRange span;
  std::vector<int> children;
};

/// Concrete syntax tree as emitted by the parser. Ids are dense and assigned
/// in pre-order, so the root is node 0 for parsed trees.
struct RawAst {
  std::vector<RawNode> nodes;
  int root = 0;
  std::string source;

  std::string_view text(const RawNode& node) const;
  std::string_view text(int id) const { return text(nodes.at(id)); }

  /// Throws ContractViolation if the tree invariants do not hold.
  void validate() const;
};

struct RefinedNode {
  int id = 0;
  std::string kind;
  std::string content;
  std::vector<int> children;
};

struct RefinedAst {
  std::vector<RefinedNode> nodes;
  int root = 0;

  std::size_t size() const { return nodes.size(); }
  void validate() const;
};

using ContainerKinds = std::set<std::string, std::less<>>;

/// Parses `source` with the grammar registered for `language`.
/// Throws UnsupportedLanguage or EncodingError.
RawAst parse_source(std::string_view source, std::string_view language);

/// A node whose kind string equals its source text, e.g. keywords and
/// punctuation.
bool is_shadow_node(const RawNode& node, std::string_view source);

/// Folds shadow nodes into their parents, bottom-up.
///
/// Working from the leaves, a node with at least one shadow child gets its
/// content rebuilt as the space-joined contents of its children, skipping
/// children whose kind is in `container_kinds` (a container parent keeps all
/// of its children). Shadow children are then removed; any children they
/// had are spliced into their place. A node counts as shadow when its kind
/// equals its current content. The root is never removed and its content is
/// the source text, truncated to `max_root_bytes` on a code point boundary.
/// Output ids are renumbered in pre-order.
RefinedAst refine_ast(const RawAst& ast, const ContainerKinds& container_kinds,
                      std::size_t max_root_bytes = std::numeric_limits<std::size_t>::max());

/// Re-applies the same rules to an already refined tree (content stands in for
/// source text). A no-op on the output of the overload above.
RefinedAst refine_ast(const RefinedAst& ast, const ContainerKinds& container_kinds);

/// Human-readable indented dump of a parsed tree.
std::string summarize(const RawAst& ast, std::size_t max_text = 40);

}  // namespace treeseek
