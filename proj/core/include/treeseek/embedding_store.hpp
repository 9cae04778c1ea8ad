// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace treeseek {

/// In-memory form of the binary embedding store.
///
/// On-disk layout, all integers little-endian:
///
///   "EMBS" | u32 version | u32 dim | u64 count | u32 len, model_id bytes
///   count x ( u32 len, id bytes | dim x f32 )
///
/// Records keep insertion order so that save/load round trips are byte-exact.
class EmbeddingStore {
public:
  static constexpr std::uint32_t kVersion = 1;

  struct Record {
    std::string id;
    std::vector<float> values;
  };

  EmbeddingStore() = default;
  EmbeddingStore(std::uint32_t dim, std::string model_id);

  std::uint32_t dim() const { return dim_; }
  const std::string& model_id() const { return model_id_; }
  std::size_t size() const { return records_.size(); }
  const std::vector<Record>& records() const { return records_; }

  /// Throws DuplicateId or ShapeError.
  void add(std::string id, std::vector<float> values);
  std::optional<std::span<const float>> find(std::string_view id) const;

  bool operator==(const EmbeddingStore& other) const;

private:
  std::uint32_t dim_ = 0;
  std::string model_id_;
  std::vector<Record> records_;
  std::unordered_map<std::string, std::size_t> index_;
};

void write_store(std::ostream& out, const EmbeddingStore& store);

/// Reads one store starting at the stream's current position. Offsets in
/// FormatError messages are relative to that position plus `base_offset`.
EmbeddingStore read_store(std::istream& in, std::uint64_t base_offset = 0,
                          std::optional<std::uint32_t> expected_dim = std::nullopt);

void save_store(const EmbeddingStore& store, const std::filesystem::path& path);
EmbeddingStore load_store(const std::filesystem::path& path,
                          std::optional<std::uint32_t> expected_dim = std::nullopt);

/// Converts JSON Lines of {"id": string, "vector": [numbers]} into a store.
/// All vectors must share one length.
EmbeddingStore import_jsonl(const std::filesystem::path& path, std::string model_id);

}  // namespace treeseek
