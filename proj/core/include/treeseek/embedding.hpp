// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>

#include <atomic>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

namespace treeseek {

using EmbeddingVector = Eigen::VectorXd;

/// Scales `v` to unit L2 norm in place. A zero vector is left untouched and
/// `false` is returned.
bool normalize(EmbeddingVector& v);

/// Feature-hashed character 3-gram embedding.
///
/// Each 3-gram of code points is hashed into one of `dim` buckets and added
/// with a sign taken from an independent seeded hash; the result is
/// L2-normalized. Texts shorter than three code points contribute a single
/// gram made of the whole text. The empty text maps to e_1. Requires dim >= 8.
EmbeddingVector hash_embed(std::string_view text, int dim, std::uint64_t seed);

/// Source of frozen text embeddings. Implementations are immutable after
/// construction, so concurrent calls are safe.
class EmbeddingProvider {
public:
  virtual ~EmbeddingProvider() = default;

  virtual int dim() const = 0;

  /// Unit-norm embedding of arbitrary text (node contents, queries).
  virtual EmbeddingVector embed_text(std::string_view text) const = 0;

  /// Keyed lookup for whole-sample embeddings ("code:<id>", "doc:<id>").
  /// Providers without keyed storage return nullopt.
  virtual std::optional<EmbeddingVector> lookup(std::string_view key) const {
    (void)key;
    return std::nullopt;
  }

  /// Longest input, in bytes, the underlying encoder accepts.
  virtual std::size_t max_input_bytes() const = 0;

  /// Stable identity of the embedding space; indexes refuse providers whose
  /// fingerprint differs from the one they were built with.
  virtual std::string fingerprint() const = 0;
};

class HashingProvider final : public EmbeddingProvider {
public:
  static constexpr std::size_t kDefaultMaxInputBytes = 8192;

  HashingProvider(int dim, std::uint64_t seed,
                  std::size_t max_input_bytes = kDefaultMaxInputBytes);

  int dim() const override { return dim_; }
  std::uint64_t seed() const { return seed_; }
  EmbeddingVector embed_text(std::string_view text) const override;
  std::size_t max_input_bytes() const override { return max_input_bytes_; }
  std::string fingerprint() const override;

private:
  int dim_;
  std::uint64_t seed_;
  std::size_t max_input_bytes_;
};

class EmbeddingStore;

/// What a store-backed provider does when a content key is missing.
enum class MissingPolicy { FallbackToHash, Error };

class StoreProvider final : public EmbeddingProvider {
public:
  StoreProvider(std::shared_ptr<const EmbeddingStore> store, MissingPolicy policy,
                std::uint64_t fallback_seed = 0,
                std::size_t max_input_bytes = HashingProvider::kDefaultMaxInputBytes);

  int dim() const override;
  EmbeddingVector embed_text(std::string_view text) const override;
  std::optional<EmbeddingVector> lookup(std::string_view key) const override;
  std::size_t max_input_bytes() const override { return max_input_bytes_; }
  std::string fingerprint() const override;

private:
  std::shared_ptr<const EmbeddingStore> store_;
  MissingPolicy policy_;
  std::uint64_t fallback_seed_;
  std::size_t max_input_bytes_;
  mutable std::atomic<bool> warned_{false};
};

}  // namespace treeseek
