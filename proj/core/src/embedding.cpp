// SPDX-License-Identifier: Apache-2.0
#include "treeseek/embedding.hpp"

#include "treeseek/embedding_store.hpp"
#include "treeseek/error.hpp"
#include "treeseek/log.hpp"
#include "treeseek/text.hpp"

#include <vector>

namespace treeseek {
namespace {

constexpr std::uint64_t kSignSalt = 0x2545f4914f6cdd1dULL;

// Byte offsets of each code point start, plus the end offset.
std::vector<std::size_t> code_point_offsets(std::string_view text) {
  std::vector<std::size_t> offsets;
  offsets.reserve(text.size() + 1);
  for (std::size_t i = 0; i < text.size(); ++i) {
    if ((static_cast<unsigned char>(text[i]) & 0xC0) != 0x80) offsets.push_back(i);
  }
  offsets.push_back(text.size());
  return offsets;
}

}  // namespace

bool normalize(EmbeddingVector& v) {
  const double n = v.norm();
  if (n == 0.0) return false;
  v /= n;
  return true;
}

EmbeddingVector hash_embed(std::string_view text, int dim, std::uint64_t seed) {
  if (dim < 8) throw ContractViolation("hash_embed requires dim >= 8");
  if (auto bad = find_invalid_utf8(text)) throw EncodingError("invalid UTF-8", *bad);

  EmbeddingVector v = EmbeddingVector::Zero(dim);
  if (text.empty()) {
    v[0] = 1.0;
    return v;
  }

  const auto offsets = code_point_offsets(text);
  const std::size_t cps = offsets.size() - 1;
  const auto add_gram = [&](std::string_view gram) {
    const std::uint64_t h = fnv1a64(gram, seed);
    const auto bucket = static_cast<int>(mix64(h) % static_cast<std::uint64_t>(dim));
    const double sign = (mix64(h ^ kSignSalt) & 1ULL) ? 1.0 : -1.0;
    v[bucket] += sign;
  };

  if (cps < 3) {
    add_gram(text);
  } else {
    for (std::size_t i = 0; i + 3 <= cps; ++i) {
      add_gram(text.substr(offsets[i], offsets[i + 3] - offsets[i]));
    }
  }
  if (!normalize(v)) {
    // Every bucket cancelled out; fall back to the same basis vector as "".
    v.setZero();
    v[0] = 1.0;
  }
  return v;
}

HashingProvider::HashingProvider(int dim, std::uint64_t seed, std::size_t max_input_bytes)
    : dim_(dim), seed_(seed), max_input_bytes_(max_input_bytes) {
  if (dim < 8) throw ContractViolation("hashing provider requires dim >= 8");
  if (max_input_bytes == 0) throw ContractViolation("max_input_bytes must be positive");
}

EmbeddingVector HashingProvider::embed_text(std::string_view text) const {
  return hash_embed(truncate_utf8(text, max_input_bytes_), dim_, seed_);
}

std::string HashingProvider::fingerprint() const {
  return "hash:d=" + std::to_string(dim_) + ":seed=" + std::to_string(seed_) +
         ":max=" + std::to_string(max_input_bytes_);
}

StoreProvider::StoreProvider(std::shared_ptr<const EmbeddingStore> store, MissingPolicy policy,
                             std::uint64_t fallback_seed, std::size_t max_input_bytes)
    : store_(std::move(store)),
      policy_(policy),
      fallback_seed_(fallback_seed),
      max_input_bytes_(max_input_bytes) {
  if (!store_) throw ContractViolation("store provider needs a store");
  if (policy_ == MissingPolicy::FallbackToHash && store_->dim() < 8) {
    throw ContractViolation("hash fallback requires dim >= 8");
  }
}

int StoreProvider::dim() const { return static_cast<int>(store_->dim()); }

std::optional<EmbeddingVector> StoreProvider::lookup(std::string_view key) const {
  const auto found = store_->find(key);
  if (!found) return std::nullopt;
  EmbeddingVector v(static_cast<Eigen::Index>(found->size()));
  for (std::size_t i = 0; i < found->size(); ++i) v[static_cast<Eigen::Index>(i)] = (*found)[i];
  if (!normalize(v)) throw FormatError("stored embedding '" + std::string(key) + "' is zero", 0);
  return v;
}

EmbeddingVector StoreProvider::embed_text(std::string_view text) const {
  const std::string_view clipped = truncate_utf8(text, max_input_bytes_);
  const std::string key = content_key(clipped);
  if (auto v = lookup(key)) return *v;
  if (policy_ == MissingPolicy::Error) throw MissingEmbedding(key);
  if (!warned_.exchange(true)) {
    log::warn("no stored embedding for " + key +
              "; using the hashing fallback (further misses are logged at debug level)");
  } else {
    log::debug("no stored embedding for " + key);
  }
  return hash_embed(clipped, dim(), fallback_seed_);
}

std::string StoreProvider::fingerprint() const {
  return "store:" + store_->model_id() + ":d=" + std::to_string(store_->dim()) +
         ":max=" + std::to_string(max_input_bytes_);
}

}  // namespace treeseek
