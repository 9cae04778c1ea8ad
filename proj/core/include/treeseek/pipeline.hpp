// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "treeseek/ast.hpp"
#include "treeseek/corpus.hpp"
#include "treeseek/embedding.hpp"
#include "treeseek/graph.hpp"

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace treeseek {

/// How to construct an embedding provider; persisted in checkpoints and
/// index headers so later commands rebuild the same embedding space.
struct ProviderSpec {
  enum class Kind { Hashing, Store };
  Kind kind = Kind::Hashing;
  int dim = 64;
  std::uint64_t seed = 0;
  std::string store_path;
  MissingPolicy missing = MissingPolicy::FallbackToHash;

  std::string to_json() const;
  static ProviderSpec from_json(std::string_view text);
  bool operator==(const ProviderSpec&) const = default;
};

std::shared_ptr<const EmbeddingProvider> make_provider(const ProviderSpec& spec);

struct PipelineConfig {
  std::string language = "python";
  GraphOptions graph;
  /// Defaults to the grammar's container kinds.
  std::optional<ContainerKinds> container_kinds;

  std::string to_json() const;
  static PipelineConfig from_json(std::string_view text);
};

struct EncodedCode {
  CodeGraph graph;
  EmbeddingVector root_embedding;
};

struct EncodedSample {
  std::string id;
  CodeGraph graph;
  EmbeddingVector root_embedding;
  EmbeddingVector text_embedding;
};

struct SampleFailure {
  std::string id;
  std::string message;
};

/// parse -> refine -> reversed graph -> features, for one language.
class Pipeline {
public:
  Pipeline(PipelineConfig config, std::shared_ptr<const EmbeddingProvider> provider);

  const PipelineConfig& config() const { return config_; }
  const TypeVocabulary& vocabulary() const { return vocab_; }
  const EmbeddingProvider& provider() const { return *provider_; }
  std::shared_ptr<const EmbeddingProvider> provider_ptr() const { return provider_; }
  const ContainerKinds& container_kinds() const { return containers_; }

  /// Node feature width the model's input projection must accept.
  int feature_width() const;

  RefinedAst refine(std::string_view code) const;

  /// `sample_id` enables the keyed "code:<id>" lookup for the root embedding.
  EncodedCode encode_code(std::string_view code, std::string_view sample_id = {}) const;

  /// Frozen text embedding of a description or query.
  EmbeddingVector embed_doc(std::string_view doc, std::string_view sample_id = {}) const;

  /// Hash over language, flags, container kinds, vocabulary and provider.
  std::string fingerprint() const;

private:
  PipelineConfig config_;
  std::shared_ptr<const EmbeddingProvider> provider_;
  TypeVocabulary vocab_;
  ContainerKinds containers_;
};

struct EncodedCorpus {
  std::vector<EncodedSample> samples;
  std::vector<SampleFailure> failures;
};

/// Encodes every sample, recording per-sample failures (wrong language,
/// parse or embedding errors) instead of throwing. Output order follows the
/// input regardless of `jobs`.
EncodedCorpus encode_corpus(const Pipeline& pipeline, const std::vector<CorpusSample>& corpus,
                            int jobs = 1);

}  // namespace treeseek
