// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace treeseek {

/// One line of the JSON Lines corpus: {"id", "language", "code", "doc"}.
struct CorpusSample {
  std::string id;
  std::string language;
  std::string code;
  std::string doc;
  bool operator==(const CorpusSample&) const = default;
};

/// Parses one JSON object; unknown keys are ignored. Throws FormatError.
CorpusSample parse_corpus_line(std::string_view line, std::uint64_t line_number = 0);
std::string corpus_line(const CorpusSample& sample);

/// Reads a whole corpus file. Blank lines are skipped; duplicate ids throw
/// DuplicateId.
std::vector<CorpusSample> read_corpus(const std::filesystem::path& path);
void write_corpus(const std::filesystem::path& path, const std::vector<CorpusSample>& samples);

/// Deterministic corpus of small Python functions paired with one-line
/// descriptions. Every sample has a distinct id, code and doc.
std::vector<CorpusSample> synthetic_corpus(int count, std::uint64_t seed);

}  // namespace treeseek
