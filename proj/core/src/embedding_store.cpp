// SPDX-License-Identifier: Apache-2.0
#include "treeseek/embedding_store.hpp"

#include "binary_io.hpp"
#include "treeseek/error.hpp"
#include "treeseek/text.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>

namespace treeseek {
namespace {

constexpr char kMagic[4] = {'E', 'M', 'B', 'S'};
// Upper bound on id/model_id lengths, to fail fast on garbage headers.
constexpr std::uint32_t kMaxStringBytes = 1u << 24;

}  // namespace

EmbeddingStore::EmbeddingStore(std::uint32_t dim, std::string model_id)
    : dim_(dim), model_id_(std::move(model_id)) {}

void EmbeddingStore::add(std::string id, std::vector<float> values) {
  if (values.size() != dim_) {
    throw ShapeError("embedding '" + id + "' has " + std::to_string(values.size()) +
                     " values, store dim is " + std::to_string(dim_));
  }
  if (index_.count(id) != 0) throw DuplicateId(id);
  index_.emplace(id, records_.size());
  records_.push_back({std::move(id), std::move(values)});
}

std::optional<std::span<const float>> EmbeddingStore::find(std::string_view id) const {
  const auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return std::span<const float>(records_[it->second].values);
}

bool EmbeddingStore::operator==(const EmbeddingStore& other) const {
  if (dim_ != other.dim_ || model_id_ != other.model_id_ || records_.size() != other.records_.size()) {
    return false;
  }
  for (std::size_t i = 0; i < records_.size(); ++i) {
    const auto& a = records_[i];
    const auto& b = other.records_[i];
    if (a.id != b.id) return false;
    for (std::size_t k = 0; k < a.values.size(); ++k) {
      // Compare bit patterns so NaN payloads and signed zeros count.
      if (std::bit_cast<std::uint32_t>(a.values[k]) != std::bit_cast<std::uint32_t>(b.values[k])) {
        return false;
      }
    }
  }
  return true;
}

void write_store(std::ostream& out, const EmbeddingStore& store) {
  out.write(kMagic, 4);
  detail::put_u32(out, EmbeddingStore::kVersion);
  detail::put_u32(out, store.dim());
  detail::put_u64(out, store.size());
  detail::put_u32(out, static_cast<std::uint32_t>(store.model_id().size()));
  out.write(store.model_id().data(), static_cast<std::streamsize>(store.model_id().size()));
  for (const auto& rec : store.records()) {
    detail::put_u32(out, static_cast<std::uint32_t>(rec.id.size()));
    out.write(rec.id.data(), static_cast<std::streamsize>(rec.id.size()));
    for (float v : rec.values) detail::put_f32(out, v);
  }
  if (!out) throw FormatError("failed to write embedding store", 0);
}

EmbeddingStore read_store(std::istream& in, std::uint64_t base_offset,
                          std::optional<std::uint32_t> expected_dim) {
  detail::ByteReader r(in, base_offset);

  const std::uint64_t magic_at = r.offset();
  char magic[4];
  r.read(magic, 4, "magic");
  if (std::string_view(magic, 4) != std::string_view(kMagic, 4)) {
    throw FormatError("bad magic, expected \"EMBS\"", magic_at);
  }
  const std::uint64_t version_at = r.offset();
  const std::uint32_t version = r.u32("version");
  if (version != EmbeddingStore::kVersion) {
    throw FormatError("unsupported store version " + std::to_string(version), version_at);
  }
  const std::uint64_t dim_at = r.offset();
  const std::uint32_t dim = r.u32("dim");
  if (expected_dim && dim != *expected_dim) {
    throw FormatError("store dim " + std::to_string(dim) + " does not match expected " +
                          std::to_string(*expected_dim),
                      dim_at);
  }
  const std::uint64_t count = r.u64("count");
  const std::uint64_t model_len_at = r.offset();
  const std::uint32_t model_len = r.u32("model_id length");
  if (model_len > kMaxStringBytes) throw FormatError("model_id length out of range", model_len_at);
  std::string model_id = r.bytes(model_len, "model_id");
  if (auto bad = find_invalid_utf8(model_id)) {
    throw FormatError("model_id is not UTF-8", model_len_at + 4 + *bad);
  }

  EmbeddingStore store(dim, std::move(model_id));
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::uint64_t rec_at = r.offset();
    const std::uint32_t id_len = r.u32("record id length");
    if (id_len > kMaxStringBytes) throw FormatError("record id length out of range", rec_at);
    std::string id = r.bytes(id_len, "record id");
    std::vector<float> values(dim);
    for (auto& v : values) v = r.f32("record vector");
    try {
      store.add(std::move(id), std::move(values));
    } catch (const DuplicateId& e) {
      throw FormatError("duplicate record id '" + e.id() + "'", rec_at);
    }
  }
  return store;
}

void save_store(const EmbeddingStore& store, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing", 0);
  write_store(out, store);
}

EmbeddingStore load_store(const std::filesystem::path& path,
                          std::optional<std::uint32_t> expected_dim) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string(), 0);
  EmbeddingStore store = read_store(in, 0, expected_dim);
  if (in.peek() != std::char_traits<char>::eof()) {
    throw FormatError("trailing bytes after the last record",
                      static_cast<std::uint64_t>(in.tellg()));
  }
  return store;
}

EmbeddingStore import_jsonl(const std::filesystem::path& path, std::string model_id) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string(), 0);
  std::optional<EmbeddingStore> store;
  std::string line;
  std::uint64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("line " + std::to_string(line_no) + ": " + e.what(), line_no);
    }
    if (!j.is_object() || !j.contains("id") || !j["id"].is_string() || !j.contains("vector") ||
        !j["vector"].is_array()) {
      throw FormatError("line " + std::to_string(line_no) + ": expected {\"id\", \"vector\"}",
                        line_no);
    }
    std::vector<float> values;
    values.reserve(j["vector"].size());
    for (const auto& x : j["vector"]) {
      if (!x.is_number()) {
        throw FormatError("line " + std::to_string(line_no) + ": non-numeric vector entry", line_no);
      }
      const double d = x.get<double>();
      if (!std::isfinite(d)) {
        throw FormatError("line " + std::to_string(line_no) + ": non-finite entry", line_no);
      }
      values.push_back(static_cast<float>(d));
    }
    if (!store) store.emplace(static_cast<std::uint32_t>(values.size()), model_id);
    if (values.size() != store->dim()) {
      throw FormatError("line " + std::to_string(line_no) + ": vector length " +
                            std::to_string(values.size()) + " differs from " +
                            std::to_string(store->dim()),
                        line_no);
    }
    try {
      store->add(j["id"].get<std::string>(), std::move(values));
    } catch (const DuplicateId& e) {
      throw FormatError("line " + std::to_string(line_no) + ": duplicate id '" + e.id() + "'",
                        line_no);
    }
  }
  return store ? std::move(*store) : EmbeddingStore(0, std::move(model_id));
}

}  // namespace treeseek
