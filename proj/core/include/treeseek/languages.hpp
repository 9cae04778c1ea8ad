// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace treeseek {

/// A grammar the parser knows about. The tree-sitter handle stays inside the
/// library; callers only see the language id and its metadata.
struct Grammar {
  std::string id;
  /// Kinds that act as statement containers during refinement.
  std::vector<std::string> container_kinds;
  /// Every visible node kind the grammar can emit, in symbol-table order.
  std::vector<std::string> kind_inventory;
};

/// Throws UnsupportedLanguage for ids not in supported_languages().
const Grammar& grammar(std::string_view language);

std::vector<std::string> supported_languages();

}  // namespace treeseek
