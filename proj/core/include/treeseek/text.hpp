// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace treeseek {

/// Offset of the first byte that breaks UTF-8 well-formedness, if any.
std::optional<std::size_t> find_invalid_utf8(std::string_view text);

/// Decodes well-formed UTF-8 into code points. Throws EncodingError otherwise.
std::vector<char32_t> decode_utf8(std::string_view text);

/// Longest prefix of at most `max_bytes` bytes that ends on a code point boundary.
std::string_view truncate_utf8(std::string_view text, std::size_t max_bytes);

/// 64-bit FNV-1a, with the seed folded into the offset basis.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0);

/// Mixes a 64-bit value (splitmix64 finalizer).
std::uint64_t mix64(std::uint64_t x);

/// Store key for per-node content embeddings: "fnv1a64:" + 16 lowercase hex digits.
std::string content_key(std::string_view text);

std::string hex64(std::uint64_t value);

/// Copy of `text` with every ASCII whitespace character removed.
std::string strip_whitespace(std::string_view text);

std::vector<std::string> split(std::string_view text, char delimiter);

}  // namespace treeseek
