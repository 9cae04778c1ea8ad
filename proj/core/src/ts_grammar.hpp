// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <tree_sitter/api.h>

#include <string_view>

namespace treeseek::detail {

/// tree-sitter handle for a supported language. Throws UnsupportedLanguage.
const TSLanguage* ts_language(std::string_view language);

}  // namespace treeseek::detail
