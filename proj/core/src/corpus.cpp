// SPDX-License-Identifier: Apache-2.0
#include "treeseek/corpus.hpp"

#include "treeseek/error.hpp"

#include <json.hpp>

#include <fstream>
#include <unordered_set>

namespace treeseek {

CorpusSample parse_corpus_line(std::string_view line, std::uint64_t line_number) {
  const auto fail = [&](const std::string& why) {
    return FormatError("corpus line " + std::to_string(line_number) + ": " + why, line_number);
  };
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw fail(e.what());
  }
  if (!j.is_object()) throw fail("expected a JSON object");

  CorpusSample s;
  const auto field = [&](const char* key, std::string& dst, bool required) {
    const auto it = j.find(key);
    if (it == j.end()) {
      if (required) throw fail(std::string("missing \"") + key + "\"");
      return;
    }
    if (!it->is_string()) throw fail(std::string("\"") + key + "\" must be a string");
    dst = it->get<std::string>();
  };
  field("id", s.id, true);
  field("language", s.language, true);
  field("code", s.code, true);
  field("doc", s.doc, false);
  return s;
}

std::string corpus_line(const CorpusSample& sample) {
  nlohmann::ordered_json j;
  j["id"] = sample.id;
  j["language"] = sample.language;
  j["code"] = sample.code;
  j["doc"] = sample.doc;
  return j.dump();
}

std::vector<CorpusSample> read_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open corpus " + path.string(), 0);
  std::vector<CorpusSample> out;
  std::unordered_set<std::string> ids;
  std::string line;
  std::uint64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    CorpusSample s = parse_corpus_line(line, line_no);
    if (!ids.insert(s.id).second) throw DuplicateId(s.id);
    out.push_back(std::move(s));
  }
  return out;
}

void write_corpus(const std::filesystem::path& path, const std::vector<CorpusSample>& samples) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing", 0);
  for (const auto& s : samples) out << corpus_line(s) << '\n';
}

}  // namespace treeseek
