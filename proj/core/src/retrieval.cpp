// SPDX-License-Identifier: Apache-2.0
#include "treeseek/retrieval.hpp"

#include "parallel.hpp"
#include "treeseek/checkpoint.hpp"
#include "treeseek/embedding_store.hpp"
#include "treeseek/error.hpp"
#include "treeseek/rng.hpp"
#include "treeseek/text.hpp"

#include <json.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace treeseek {
namespace {

using ojson = nlohmann::ordered_json;

constexpr int kIndexVersion = 1;
constexpr double kUnitTolerance = 1e-4;

std::filesystem::path payload_path(const std::filesystem::path& index_path) {
  std::filesystem::path p = index_path;
  p += ".payload.jsonl";
  return p;
}

double dot(const std::vector<float>& a, const EmbeddingVector& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<double>(a[i]) * b[static_cast<Eigen::Index>(i)];
  return s;
}

bool hit_before(const Hit& a, const Hit& b) {
  if (a.similarity != b.similarity) return a.similarity > b.similarity;
  return a.id < b.id;
}

}  // namespace

RetrievalIndex::RetrievalIndex(int dim, IndexFingerprints fingerprints,
                               std::string provider_spec_json)
    : dim_(dim), fingerprints_(std::move(fingerprints)), provider_spec_(std::move(provider_spec_json)) {
  if (dim_ <= 0) throw ContractViolation("index dim must be positive");
  try {
    // Canonical form, so that a loaded index compares equal to the one saved.
    provider_spec_ = ojson::parse(provider_spec_).dump();
  } catch (const nlohmann::json::exception&) {
    throw ContractViolation("index provider spec is not valid JSON");
  }
  if (fingerprints_.model.empty() || fingerprints_.pipeline.empty() ||
      fingerprints_.provider.empty()) {
    throw ContractViolation("index fingerprints must be present");
  }
}

void RetrievalIndex::add(IndexEntry entry) {
  if (static_cast<int>(entry.vector.size()) != dim_) {
    throw ShapeError("index entry '" + entry.id + "' has dim " +
                     std::to_string(entry.vector.size()) + ", index dim is " +
                     std::to_string(dim_));
  }
  double n2 = 0.0;
  for (float v : entry.vector) n2 += static_cast<double>(v) * v;
  if (!(std::abs(std::sqrt(n2) - 1.0) <= kUnitTolerance)) {
    throw ContractViolation("index entry '" + entry.id + "' is not unit norm");
  }
  if (by_id_.count(entry.id) != 0) throw DuplicateId(entry.id);
  by_id_.emplace(entry.id, entries_.size());
  entries_.push_back(std::move(entry));
}

std::optional<std::size_t> RetrievalIndex::find(std::string_view id) const {
  const auto it = by_id_.find(std::string(id));
  if (it == by_id_.end()) return std::nullopt;
  return it->second;
}

bool RetrievalIndex::operator==(const RetrievalIndex& other) const {
  if (dim_ != other.dim_ || !(fingerprints_ == other.fingerprints_) ||
      provider_spec_ != other.provider_spec_ || entries_.size() != other.entries_.size()) {
    return false;
  }
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& a = entries_[i];
    const auto& b = other.entries_[i];
    if (a.id != b.id || a.language != b.language || a.payload_offset != b.payload_offset) return false;
    for (std::size_t k = 0; k < a.vector.size(); ++k) {
      if (std::bit_cast<std::uint32_t>(a.vector[k]) != std::bit_cast<std::uint32_t>(b.vector[k])) {
        return false;
      }
    }
  }
  return true;
}

std::vector<Hit> query(const RetrievalIndex& index, const EmbeddingVector& query_vector,
                       std::size_t k) {
  if (query_vector.size() != index.dim()) {
    throw ShapeError("query has dim " + std::to_string(query_vector.size()) + ", index dim is " +
                     std::to_string(index.dim()));
  }
  const double norm = query_vector.norm();
  if (!(norm > 0.0)) throw ContractViolation("query vector is zero");
  const EmbeddingVector q = query_vector / norm;

  std::vector<Hit> hits;
  hits.reserve(index.size());
  for (const auto& e : index.entries()) hits.push_back({e.id, dot(e.vector, q)});
  const std::size_t keep = std::min(k, hits.size());
  std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(keep), hits.end(),
                    hit_before);
  hits.resize(keep);
  return hits;
}

std::vector<Hit> query(const RetrievalIndex& index, std::string_view text,
                       const EmbeddingProvider& provider, std::size_t k) {
  if (provider.fingerprint() != index.fingerprints().provider) {
    throw FingerprintMismatch("query provider " + provider.fingerprint() +
                              " differs from the index provider " +
                              index.fingerprints().provider);
  }
  return query(index, provider.embed_text(text), k);
}

void check_compatible(const RetrievalIndex& index, const std::string& model_fp,
                      const std::string& pipeline_fp) {
  if (model_fp != index.fingerprints().model) {
    throw FingerprintMismatch("model " + model_fp + " differs from the index model " +
                              index.fingerprints().model);
  }
  if (pipeline_fp != index.fingerprints().pipeline) {
    throw FingerprintMismatch("pipeline " + pipeline_fp + " differs from the index pipeline " +
                              index.fingerprints().pipeline);
  }
}

BuildResult build_index(const std::vector<CorpusSample>& corpus, const Pipeline& pipeline,
                        const GnnModel& model, const std::string& provider_spec_json, int jobs) {
  std::set<std::string_view> seen;
  for (const auto& s : corpus) {
    if (!seen.insert(s.id).second) throw DuplicateId(s.id);
  }

  BuildResult out;
  out.index = RetrievalIndex(model.config.output_size(),
                             {model_fingerprint(model), pipeline.fingerprint(),
                              pipeline.provider().fingerprint()},
                             provider_spec_json);

  EncodedCorpus encoded = encode_corpus(pipeline, corpus, jobs);
  out.failures = std::move(encoded.failures);
  std::vector<std::optional<EmbeddingVector>> vectors(encoded.samples.size());
  std::vector<std::string> errors(encoded.samples.size());
  detail::parallel_for(encoded.samples.size(), jobs, [&](std::size_t i) {
    const auto& s = encoded.samples[i];
    try {
      vectors[i] = model_forward(model, s.graph, s.root_embedding);
    } catch (const Error& e) {
      errors[i] = e.what();
    }
  });

  std::unordered_map<std::string_view, const CorpusSample*> by_id;
  for (const auto& s : corpus) by_id.emplace(s.id, &s);
  for (std::size_t i = 0; i < encoded.samples.size(); ++i) {
    const auto& s = encoded.samples[i];
    if (!vectors[i]) {
      out.failures.push_back({s.id, errors[i]});
      continue;
    }
    IndexEntry entry;
    entry.id = s.id;
    entry.vector.resize(static_cast<std::size_t>(vectors[i]->size()));
    for (Eigen::Index k = 0; k < vectors[i]->size(); ++k) {
      entry.vector[static_cast<std::size_t>(k)] = static_cast<float>((*vectors[i])[k]);
    }
    entry.language = pipeline.config().language;
    out.index.add(std::move(entry));
    out.payload.push_back(*by_id.at(s.id));
  }
  return out;
}

void save_index(RetrievalIndex& index, const std::vector<CorpusSample>& payload,
                const std::filesystem::path& path) {
  if (payload.size() != index.size()) {
    throw ContractViolation("payload count differs from index size");
  }
  const std::filesystem::path side = payload_path(path);
  std::vector<std::uint64_t> offsets;
  {
    std::ofstream out(side, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot open " + side.string() + " for writing", 0);
    std::uint64_t pos = 0;
    for (std::size_t i = 0; i < payload.size(); ++i) {
      if (payload[i].id != index.entries()[i].id) {
        throw ContractViolation("payload order differs from index order at " + payload[i].id);
      }
      const std::string line = corpus_line(payload[i]) + "\n";
      offsets.push_back(pos);
      out.write(line.data(), static_cast<std::streamsize>(line.size()));
      pos += line.size();
    }
    if (!out) throw FormatError("failed to write " + side.string(), 0);
  }

  // Rebuild with fresh offsets so the in-memory index matches the file.
  RetrievalIndex updated(index.dim(), index.fingerprints(), index.provider_spec_json());
  for (std::size_t i = 0; i < index.size(); ++i) {
    IndexEntry e = index.entries()[i];
    e.payload_offset = offsets[i];
    updated.add(std::move(e));
  }
  index = std::move(updated);

  ojson header;
  header["format"] = "treeseek-index";
  header["version"] = kIndexVersion;
  header["dim"] = index.dim();
  header["count"] = index.size();
  header["fingerprints"] = {{"model", index.fingerprints().model},
                            {"pipeline", index.fingerprints().pipeline},
                            {"provider", index.fingerprints().provider}};
  header["provider"] = ojson::parse(index.provider_spec_json());
  header["payload"] = side.filename().string();
  ojson languages = ojson::array();
  ojson payload_offsets = ojson::array();
  for (const auto& e : index.entries()) {
    languages.push_back(e.language);
    payload_offsets.push_back(e.payload_offset);
  }
  header["languages"] = std::move(languages);
  header["payload_offsets"] = std::move(payload_offsets);

  EmbeddingStore block(static_cast<std::uint32_t>(index.dim()), index.fingerprints().model);
  for (const auto& e : index.entries()) block.add(e.id, e.vector);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing", 0);
  out << header.dump() << '\n';
  write_store(out, block);
  if (!out) throw FormatError("failed to write " + path.string(), 0);
}

RetrievalIndex load_index(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open index " + path.string(), 0);
  std::string line;
  if (!std::getline(in, line)) throw FormatError("index has no header line", 0);

  ojson h;
  try {
    h = ojson::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("index header: ") + e.what(), 0);
  }

  int dim = 0;
  std::size_t count = 0;
  IndexFingerprints fp;
  std::string provider;
  std::vector<std::string> languages;
  std::vector<std::uint64_t> offsets;
  try {
    if (h.at("format").get<std::string>() != "treeseek-index") {
      throw FormatError("not an index file", 0);
    }
    if (h.at("version").get<int>() != kIndexVersion) {
      throw FormatError("unsupported index version", 0);
    }
    dim = h.at("dim").get<int>();
    count = h.at("count").get<std::size_t>();
    fp.model = h.at("fingerprints").at("model").get<std::string>();
    fp.pipeline = h.at("fingerprints").at("pipeline").get<std::string>();
    fp.provider = h.at("fingerprints").at("provider").get<std::string>();
    provider = h.at("provider").dump();
    languages = h.at("languages").get<std::vector<std::string>>();
    offsets = h.at("payload_offsets").get<std::vector<std::uint64_t>>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("index header: ") + e.what(), 0);
  }
  if (languages.size() != count || offsets.size() != count || dim <= 0) {
    throw FormatError("index header is inconsistent", 0);
  }

  const std::uint64_t block_at = line.size() + 1;
  const EmbeddingStore block = read_store(in, block_at, static_cast<std::uint32_t>(dim));
  if (block.size() != count) {
    throw FormatError("index header count " + std::to_string(count) + " but block holds " +
                          std::to_string(block.size()),
                      block_at);
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw FormatError("trailing bytes after index block", 0);
  }

  RetrievalIndex index;
  try {
    index = RetrievalIndex(dim, fp, provider);
    for (std::size_t i = 0; i < count; ++i) {
      const auto& rec = block.records()[i];
      index.add({rec.id, rec.values, languages[i], offsets[i]});
    }
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Data) throw;
    throw FormatError(std::string("index content invalid: ") + e.what(), block_at);
  }
  return index;
}

CorpusSample load_payload(const std::filesystem::path& index_path, const IndexEntry& entry) {
  const std::filesystem::path side = payload_path(index_path);
  std::ifstream in(side, std::ios::binary);
  if (!in) throw FormatError("cannot open payload " + side.string(), 0);
  in.seekg(static_cast<std::streamoff>(entry.payload_offset));
  std::string line;
  if (!in || !std::getline(in, line)) {
    throw FormatError("payload offset out of range", entry.payload_offset);
  }
  CorpusSample s = parse_corpus_line(line);
  if (s.id != entry.id) {
    throw FormatError("payload record '" + s.id + "' does not match entry '" + entry.id + "'",
                      entry.payload_offset);
  }
  return s;
}

RetrievalReport evaluate_retrieval(const RetrievalIndex& index,
                                   const std::vector<EvalQuery>& queries,
                                   const EvalOptions& options) {
  for (int k : options.ks) {
    if (k < 1) throw UsageError("recall cutoffs must be >= 1");
  }
  if (options.pool_size && *options.pool_size < 1) throw UsageError("pool size must be >= 1");

  RetrievalReport report;
  SplitMix64 rng(options.seed);
  std::vector<int> ranks;
  std::vector<std::size_t> truth_rows;
  std::vector<const EvalQuery*> kept;

  std::vector<std::string> all_ids;
  all_ids.reserve(index.size());
  for (const auto& e : index.entries()) all_ids.push_back(e.id);

  for (const auto& q : queries) {
    const auto truth = index.find(q.truth_id);
    if (!truth) {
      report.errors.push_back("query '" + q.query_id + "': ground truth '" + q.truth_id +
                              "' is not in the index");
      ++report.excluded;
      continue;
    }
    if (q.embedding.size() != index.dim()) {
      throw ShapeError("query '" + q.query_id + "' has the wrong dimension");
    }
    const double norm = q.embedding.norm();
    if (!(norm > 0.0)) throw ContractViolation("query '" + q.query_id + "' embedding is zero");
    const EmbeddingVector v = q.embedding / norm;

    std::vector<std::size_t> candidates;
    if (options.pool_size && *options.pool_size < index.size()) {
      std::vector<std::size_t> others;
      others.reserve(index.size() - 1);
      for (std::size_t i = 0; i < index.size(); ++i) {
        if (i != *truth) others.push_back(i);
      }
      rng.shuffle(others);
      candidates.push_back(*truth);
      candidates.insert(candidates.end(), others.begin(),
                        others.begin() + static_cast<std::ptrdiff_t>(*options.pool_size - 1));
    } else {
      candidates.resize(index.size());
      for (std::size_t i = 0; i < index.size(); ++i) candidates[i] = i;
    }

    std::vector<double> sims;
    std::vector<std::string> ids;
    std::size_t truth_pos = 0;
    for (std::size_t c : candidates) {
      if (c == *truth) truth_pos = sims.size();
      sims.push_back(dot(index.entries()[c].vector, v));
      ids.push_back(all_ids[c]);
    }
    const int rank = rank_of(sims, ids, truth_pos);
    ranks.push_back(rank);
    report.ranks.push_back({q.query_id, rank});
    truth_rows.push_back(*truth);
    kept.push_back(&q);
  }

  report.n_queries = ranks.size();
  if (ranks.empty()) return report;
  report.mrr = mrr(ranks);
  for (int k : options.ks) report.recall[k] = recall_at_k(ranks, k);

  Eigen::MatrixXd codes(static_cast<Eigen::Index>(ranks.size()), index.dim());
  Eigen::MatrixXd texts(static_cast<Eigen::Index>(ranks.size()), index.dim());
  for (std::size_t i = 0; i < ranks.size(); ++i) {
    const auto& vec = index.entries()[truth_rows[i]].vector;
    for (int c = 0; c < index.dim(); ++c) codes(static_cast<Eigen::Index>(i), c) = vec[c];
    texts.row(static_cast<Eigen::Index>(i)) = kept[i]->embedding.transpose();
  }
  report.mam = mam_report(codes, texts);
  return report;
}

std::string report_json(const RetrievalReport& report) {
  ojson j;
  j["n_queries"] = report.n_queries;
  j["excluded"] = report.excluded;
  j["mrr"] = report.mrr;
  ojson recall = ojson::object();
  for (const auto& [k, v] : report.recall) recall["recall@" + std::to_string(k)] = v;
  j["recall"] = std::move(recall);
  j["mam"] = {{"mean", report.mam.mean},
              {"sd", report.mam.sd},
              {"mean_prime", report.mam.mean_prime},
              {"sd_prime", report.mam.sd_prime}};
  j["errors"] = report.errors;
  return j.dump(2);
}

std::string ranks_csv(const RetrievalReport& report) {
  std::ostringstream os;
  os << "query_id,rank\n";
  for (const auto& r : report.ranks) {
    // Ids are quoted only when they contain CSV metacharacters.
    if (r.query_id.find_first_of(",\"\n") != std::string::npos) {
      std::string q = "\"";
      for (char c : r.query_id) {
        if (c == '"') q += '"';
        q += c;
      }
      os << q << "\"," << r.rank << '\n';
    } else {
      os << r.query_id << ',' << r.rank << '\n';
    }
  }
  return os.str();
}

}  // namespace treeseek
