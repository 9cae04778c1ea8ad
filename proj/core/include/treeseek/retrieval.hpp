// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "treeseek/corpus.hpp"
#include "treeseek/embedding.hpp"
#include "treeseek/metrics.hpp"
#include "treeseek/model.hpp"
#include "treeseek/pipeline.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace treeseek {

struct IndexEntry {
  std::string id;
  std::vector<float> vector;  // unit norm
  std::string language;
  std::uint64_t payload_offset = 0;  // byte offset of the entry's line in the sidecar
  bool operator==(const IndexEntry&) const = default;
};

struct IndexFingerprints {
  std::string model;
  std::string pipeline;
  std::string provider;
  bool operator==(const IndexFingerprints&) const = default;
};

/// Exact cosine index over code embeddings.
///
/// File layout: one JSON header line, then an embedding-store block holding
/// the vectors (same record layout as EmbeddingStore). Code text lives in a
/// JSON Lines sidecar next to the index, addressed by payload_offset.
class RetrievalIndex {
public:
  RetrievalIndex() = default;
  RetrievalIndex(int dim, IndexFingerprints fingerprints, std::string provider_spec_json);

  int dim() const { return dim_; }
  const IndexFingerprints& fingerprints() const { return fingerprints_; }
  const std::string& provider_spec_json() const { return provider_spec_; }
  const std::vector<IndexEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

  /// Throws DuplicateId, ShapeError, or ContractViolation for non-unit vectors.
  void add(IndexEntry entry);
  std::optional<std::size_t> find(std::string_view id) const;

  bool operator==(const RetrievalIndex& other) const;

private:
  int dim_ = 0;
  IndexFingerprints fingerprints_;
  std::string provider_spec_;
  std::vector<IndexEntry> entries_;
  std::unordered_map<std::string, std::size_t> by_id_;
};

struct Hit {
  std::string id;
  double similarity = 0.0;
};

/// Exhaustive top-k by cosine similarity, descending, ties by ascending id.
/// k larger than the index returns everything.
std::vector<Hit> query(const RetrievalIndex& index, const EmbeddingVector& query_vector,
                       std::size_t k);

/// Embeds `text` with `provider` first. Throws FingerprintMismatch when the
/// provider is not the one the index was built with.
std::vector<Hit> query(const RetrievalIndex& index, std::string_view text,
                       const EmbeddingProvider& provider, std::size_t k);

/// Refuses (FingerprintMismatch) a model or pipeline that differs from the index.
void check_compatible(const RetrievalIndex& index, const std::string& model_fp,
                      const std::string& pipeline_fp);

struct BuildResult {
  RetrievalIndex index;
  std::vector<CorpusSample> payload;  // samples that made it into the index, in order
  std::vector<SampleFailure> failures;
};

/// One entry per successfully encoded sample. Duplicate ids in the corpus
/// throw DuplicateId before any work is done.
BuildResult build_index(const std::vector<CorpusSample>& corpus, const Pipeline& pipeline,
                        const GnnModel& model, const std::string& provider_spec_json,
                        int jobs = 1);

/// Writes `path` and the sidecar `path` + ".payload.jsonl"; payload offsets
/// are recomputed from the sidecar as written.
void save_index(RetrievalIndex& index, const std::vector<CorpusSample>& payload,
                const std::filesystem::path& path);
RetrievalIndex load_index(const std::filesystem::path& path);

/// Reads one payload record back from the sidecar.
CorpusSample load_payload(const std::filesystem::path& index_path, const IndexEntry& entry);

struct EvalQuery {
  std::string query_id;
  std::string truth_id;
  EmbeddingVector embedding;
};

struct QueryOutcome {
  std::string query_id;
  int rank = 0;
};

struct RetrievalReport {
  double mrr = 0.0;
  std::map<int, double> recall;
  MamReport mam;
  std::size_t n_queries = 0;
  std::size_t excluded = 0;
  std::vector<QueryOutcome> ranks;
  std::vector<std::string> errors;
};

struct EvalOptions {
  std::vector<int> ks{1, 5, 10};
  /// Per-query candidate pool: the ground truth plus pool_size - 1 seeded
  /// distractors. Unset means the whole index.
  std::optional<std::size_t> pool_size;
  std::uint64_t seed = 0;
};

/// Ranks each query's ground truth among its candidates. Queries whose truth
/// id is absent are recorded in `errors` and excluded. MAM statistics use the
/// ground-truth code vectors against the query embeddings.
RetrievalReport evaluate_retrieval(const RetrievalIndex& index,
                                   const std::vector<EvalQuery>& queries,
                                   const EvalOptions& options = {});

std::string report_json(const RetrievalReport& report);
std::string ranks_csv(const RetrievalReport& report);

}  // namespace treeseek
