// SPDX-License-Identifier: Apache-2.0
#include "treeseek/pipeline.hpp"

#include "parallel.hpp"
#include "treeseek/embedding_store.hpp"
#include "treeseek/error.hpp"
#include "treeseek/languages.hpp"
#include "treeseek/text.hpp"

#include <json.hpp>

#include <optional>

namespace treeseek {
namespace {

nlohmann::json parse_json(std::string_view text, const char* what) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string(what) + ": " + e.what(), 0);
  }
}

}  // namespace

std::string ProviderSpec::to_json() const {
  nlohmann::ordered_json j;
  j["kind"] = kind == Kind::Hashing ? "hash" : "store";
  j["dim"] = dim;
  j["seed"] = seed;
  if (kind == Kind::Store) {
    j["store"] = store_path;
    j["missing"] = missing == MissingPolicy::Error ? "error" : "fallback";
  }
  return j.dump();
}

ProviderSpec ProviderSpec::from_json(std::string_view text) {
  const auto j = parse_json(text, "provider spec");
  ProviderSpec spec;
  try {
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "hash") {
      spec.kind = Kind::Hashing;
    } else if (kind == "store") {
      spec.kind = Kind::Store;
    } else {
      throw FormatError("provider spec: unknown kind '" + kind + "'", 0);
    }
    spec.dim = j.at("dim").get<int>();
    spec.seed = j.value("seed", std::uint64_t{0});
    spec.store_path = j.value("store", std::string{});
    spec.missing =
        j.value("missing", std::string("fallback")) == "error" ? MissingPolicy::Error
                                                                : MissingPolicy::FallbackToHash;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("provider spec: ") + e.what(), 0);
  }
  return spec;
}

std::shared_ptr<const EmbeddingProvider> make_provider(const ProviderSpec& spec) {
  if (spec.kind == ProviderSpec::Kind::Hashing) {
    return std::make_shared<HashingProvider>(spec.dim, spec.seed);
  }
  auto store = std::make_shared<EmbeddingStore>(
      load_store(spec.store_path, static_cast<std::uint32_t>(spec.dim)));
  return std::make_shared<StoreProvider>(std::move(store), spec.missing, spec.seed);
}

std::string PipelineConfig::to_json() const {
  nlohmann::ordered_json j;
  j["language"] = language;
  j["undirected"] = graph.undirected;
  j["no_node_type"] = graph.no_node_type;
  if (container_kinds) {
    j["container_kinds"] = std::vector<std::string>(container_kinds->begin(), container_kinds->end());
  }
  return j.dump();
}

PipelineConfig PipelineConfig::from_json(std::string_view text) {
  const auto j = parse_json(text, "pipeline config");
  PipelineConfig c;
  try {
    c.language = j.at("language").get<std::string>();
    c.graph.undirected = j.value("undirected", false);
    c.graph.no_node_type = j.value("no_node_type", false);
    if (j.contains("container_kinds")) {
      ContainerKinds kinds;
      for (const auto& k : j["container_kinds"]) kinds.insert(k.get<std::string>());
      c.container_kinds = std::move(kinds);
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("pipeline config: ") + e.what(), 0);
  }
  return c;
}

Pipeline::Pipeline(PipelineConfig config, std::shared_ptr<const EmbeddingProvider> provider)
    : config_(std::move(config)),
      provider_(std::move(provider)),
      vocab_(TypeVocabulary::for_language(config_.language)) {
  if (!provider_) throw ContractViolation("pipeline needs an embedding provider");
  if (config_.container_kinds) {
    containers_ = *config_.container_kinds;
  } else {
    const auto& kinds = grammar(config_.language).container_kinds;
    containers_ = ContainerKinds(kinds.begin(), kinds.end());
  }
}

int Pipeline::feature_width() const {
  return (config_.graph.no_node_type ? 0 : vocab_.size()) + provider_->dim();
}

RefinedAst Pipeline::refine(std::string_view code) const {
  return refine_ast(parse_source(code, config_.language), containers_,
                    provider_->max_input_bytes());
}

EncodedCode Pipeline::encode_code(std::string_view code, std::string_view sample_id) const {
  RefinedAst refined = refine(code);
  std::optional<EmbeddingVector> root;
  if (!sample_id.empty()) root = provider_->lookup("code:" + std::string(sample_id));
  if (!root) root = provider_->embed_text(refined.nodes[refined.root].content);
  if (!normalize(*root)) throw EmbeddingError(refined.root, "root embedding is zero");

  EncodedCode out;
  out.graph = initialize_features(refined, vocab_, *provider_, config_.graph, &*root);
  out.root_embedding = std::move(*root);
  return out;
}

EmbeddingVector Pipeline::embed_doc(std::string_view doc, std::string_view sample_id) const {
  std::optional<EmbeddingVector> v;
  if (!sample_id.empty()) v = provider_->lookup("doc:" + std::string(sample_id));
  if (!v) v = provider_->embed_text(doc);
  if (!normalize(*v)) throw ContractViolation("text embedding is zero");
  return *v;
}

std::string Pipeline::fingerprint() const {
  std::string blob = config_.to_json();
  blob += '\n';
  for (const auto& k : containers_) blob += k + ',';
  blob += '\n';
  for (const auto& k : vocab_.kinds()) blob += k + '\x1f';
  blob += '\n';
  blob += provider_->fingerprint();
  return "pipe:" + hex64(fnv1a64(blob));
}

EncodedCorpus encode_corpus(const Pipeline& pipeline, const std::vector<CorpusSample>& corpus,
                            int jobs) {
  std::vector<std::optional<EncodedSample>> encoded(corpus.size());
  std::vector<std::string> errors(corpus.size());
  detail::parallel_for(corpus.size(), jobs, [&](std::size_t i) {
    const auto& s = corpus[i];
    try {
      if (s.language != pipeline.config().language) {
        throw Error(ErrorKind::Data, "language '" + s.language +
                                         "' does not match pipeline language '" +
                                         pipeline.config().language + "'");
      }
      auto code = pipeline.encode_code(s.code, s.id);
      EncodedSample out;
      out.id = s.id;
      out.graph = std::move(code.graph);
      out.root_embedding = std::move(code.root_embedding);
      out.text_embedding = pipeline.embed_doc(s.doc, s.id);
      encoded[i] = std::move(out);
    } catch (const Error& e) {
      errors[i] = e.what();
    }
  });

  EncodedCorpus result;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (encoded[i]) {
      result.samples.push_back(std::move(*encoded[i]));
    } else {
      result.failures.push_back({corpus[i].id, errors[i]});
    }
  }
  return result;
}

}  // namespace treeseek
