// SPDX-License-Identifier: Apache-2.0
#include "treeseek/languages.hpp"

#include "treeseek/error.hpp"
#include "ts_grammar.hpp"

#include <array>
#include <unordered_set>

extern "C" {
const TSLanguage* tree_sitter_python();
const TSLanguage* tree_sitter_javascript();
const TSLanguage* tree_sitter_go();
}

namespace treeseek {
namespace {

struct Registration {
  std::string_view id;
  const TSLanguage* (*factory)();
  std::array<std::string_view, 1> containers;
};

constexpr std::array kRegistry{
    Registration{"python", &tree_sitter_python, {"block"}},
    Registration{"javascript", &tree_sitter_javascript, {"statement_block"}},
    Registration{"go", &tree_sitter_go, {"block"}},
};

const Registration* find_registration(std::string_view language) {
  for (const auto& r : kRegistry) {
    if (r.id == language) return &r;
  }
  return nullptr;
}

Grammar make_grammar(const Registration& r) {
  Grammar g;
  g.id = std::string(r.id);
  for (auto c : r.containers) g.container_kinds.emplace_back(c);

  const TSLanguage* lang = r.factory();
  std::unordered_set<std::string> seen;
  const std::uint32_t count = ts_language_symbol_count(lang);
  for (std::uint32_t sym = 0; sym < count; ++sym) {
    const TSSymbolType type = ts_language_symbol_type(lang, static_cast<TSSymbol>(sym));
    if (type != TSSymbolTypeRegular && type != TSSymbolTypeAnonymous) continue;
    std::string name = ts_language_symbol_name(lang, static_cast<TSSymbol>(sym));
    if (seen.insert(name).second) g.kind_inventory.push_back(std::move(name));
  }
  if (seen.insert("ERROR").second) g.kind_inventory.emplace_back("ERROR");
  return g;
}

}  // namespace

namespace detail {

const TSLanguage* ts_language(std::string_view language) {
  const Registration* r = find_registration(language);
  if (r == nullptr) throw UnsupportedLanguage(std::string(language));
  return r->factory();
}

}  // namespace detail

const Grammar& grammar(std::string_view language) {
  // Built once per process; the registry is immutable afterwards.
  static const std::array<Grammar, kRegistry.size()> grammars = [] {
    std::array<Grammar, kRegistry.size()> out;
    for (std::size_t i = 0; i < kRegistry.size(); ++i) out[i] = make_grammar(kRegistry[i]);
    return out;
  }();
  for (std::size_t i = 0; i < kRegistry.size(); ++i) {
    if (kRegistry[i].id == language) return grammars[i];
  }
  throw UnsupportedLanguage(std::string(language));
}

std::vector<std::string> supported_languages() {
  std::vector<std::string> out;
  for (const auto& r : kRegistry) out.emplace_back(r.id);
  return out;
}

}  // namespace treeseek
