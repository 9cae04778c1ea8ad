// SPDX-License-Identifier: Apache-2.0
#include "cli.hpp"

#include "treeseek/ast.hpp"
#include "treeseek/checkpoint.hpp"
#include "treeseek/corpus.hpp"
#include "treeseek/embedding_store.hpp"
#include "treeseek/error.hpp"
#include "treeseek/languages.hpp"
#include "treeseek/log.hpp"
#include "treeseek/pipeline.hpp"
#include "treeseek/retrieval.hpp"
#include "treeseek/rng.hpp"
#include "treeseek/text.hpp"
#include "treeseek/trainer.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace treeseek::cli {
namespace {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

constexpr const char* kConfigEnv = "TREESEEK_CONFIG";

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Data, "cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Data, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorKind::Data, "failed writing " + path.string());
}

// Writes to `path` when given, otherwise to `out`.
void emit(std::ostream& out, const std::string& path, const std::string& text) {
  if (path.empty()) {
    out << text;
  } else {
    write_file(path, text);
  }
}

std::string fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

// --- shared option groups ---------------------------------------------------

struct ProviderFlags {
  int dim = 64;
  std::uint64_t hash_seed = 0;
  std::string store;
  std::string missing = "fallback";

  void attach(CLI::App& app) {
    app.add_option("--dim", dim, "Hashing embedder dimension")->check(CLI::PositiveNumber);
    app.add_option("--hash-seed", hash_seed, "Hashing embedder seed");
    app.add_option("--store", store, "Embedding store file (EMBS); replaces the hashing embedder");
    app.add_option("--missing", missing, "Store miss policy")
        ->check(CLI::IsMember({"fallback", "error"}));
  }

  ProviderSpec spec() const {
    ProviderSpec s;
    s.dim = dim;
    s.seed = hash_seed;
    if (!store.empty()) {
      s.kind = ProviderSpec::Kind::Store;
      s.store_path = store;
      s.missing = missing == "error" ? MissingPolicy::Error : MissingPolicy::FallbackToHash;
    }
    return s;
  }
};

struct TrainFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> steps, batch_size, depth, hidden;
  std::optional<double> lr, ratio;
  std::optional<std::string> pooling;
  bool no_node_type = false;
  bool undirected = false;
  bool mlp_adapter = false;

  void attach(CLI::App& app) {
    app.add_option("--config", config_path, "Training config JSON (default: $TREESEEK_CONFIG)");
    app.add_option("--seed", seed, "Seed for initialization and batching");
    app.add_option("--steps", steps, "Optimizer steps")->check(CLI::PositiveNumber);
    app.add_option("--batch-size", batch_size, "In-batch negatives per step");
    app.add_option("--lr", lr, "Peak learning rate");
    app.add_option("--depth", depth, "Number of FAConv + pooling stages");
    app.add_option("--hidden", hidden, "Hidden width (0 = embedding dim)");
    app.add_option("--ratio", ratio, "Pooling ratio");
    app.add_option("--pooling", pooling, "astgpool | topk | sag");
    app.add_flag("--no-node-type", no_node_type, "Drop node-kind one-hot features");
    app.add_flag("--undirected", undirected, "Use undirected AST edges");
    app.add_flag("--mlp-adapter", mlp_adapter, "Replace the graph network with an MLP adapter");
  }

  TrainConfig resolve(int jobs) const {
    TrainConfig c;
    std::string path = config_path;
    if (path.empty()) {
      if (const char* env = std::getenv(kConfigEnv); env != nullptr) path = env;
    }
    if (!path.empty()) c = TrainConfig::from_json(read_file(path), c);
    if (seed) c.seed = *seed;
    if (steps) c.steps = *steps;
    if (batch_size) c.batch_size = *batch_size;
    if (lr) c.lr = *lr;
    if (depth) c.depth = *depth;
    if (hidden) c.hidden = *hidden;
    if (ratio) c.pooling_ratio = *ratio;
    if (pooling) c.pooling = parse_pooling_method(*pooling);
    c.no_node_type = c.no_node_type || no_node_type;
    c.undirected = c.undirected || undirected;
    c.mlp_adapter = c.mlp_adapter || mlp_adapter;
    c.jobs = jobs;
    c.validate();
    return c;
  }
};

PipelineConfig pipeline_config(const std::string& language, const TrainConfig& tc) {
  PipelineConfig pc;
  pc.language = language;
  pc.graph.no_node_type = tc.no_node_type;
  pc.graph.undirected = tc.undirected;
  return pc;
}

std::vector<CorpusSample> load_corpus(const std::string& path) {
  return read_corpus(path);
}

struct Trained {
  Checkpoint checkpoint;
  TrainResult result;
  std::size_t samples = 0;
  std::vector<SampleFailure> failures;
};

Trained train_on(const std::vector<CorpusSample>& corpus, const std::string& language,
                 const ProviderSpec& provider, const TrainConfig& tc) {
  const PipelineConfig pc = pipeline_config(language, tc);
  const Pipeline pipeline(pc, make_provider(provider));
  EncodedCorpus encoded = encode_corpus(pipeline, corpus, tc.jobs);
  for (const auto& f : encoded.failures) log::warn("skipping '" + f.id + "': " + f.message);
  if (encoded.samples.size() < 2) {
    throw Error(ErrorKind::Data, "training needs at least two encodable samples, got " +
                                     std::to_string(encoded.samples.size()));
  }
  GnnModel model = GnnModel::create(model_config_for(tc, pipeline), tc.seed);
  Trained t;
  t.samples = encoded.samples.size();
  t.failures = std::move(encoded.failures);
  t.result = train(tc, encoded.samples, std::move(model), [](const StepLog& row) {
    log::info("step " + std::to_string(row.step) + " loss " + fixed(row.loss));
  });
  t.checkpoint = {t.result.model, pc, provider};
  return t;
}

std::vector<EvalQuery> queries_from(const std::vector<CorpusSample>& pairs,
                                    const EmbeddingProvider& provider) {
  std::vector<EvalQuery> queries;
  queries.reserve(pairs.size());
  for (const auto& s : pairs) {
    std::optional<EmbeddingVector> v = provider.lookup("doc:" + s.id);
    if (!v) v = provider.embed_text(s.doc);
    if (!normalize(*v)) throw Error(ErrorKind::Data, "query '" + s.id + "' embeds to zero");
    queries.push_back({s.id, s.id, std::move(*v)});
  }
  return queries;
}

std::string eval_csv(const RetrievalReport& r) {
  std::ostringstream os;
  os.precision(17);
  os << "metric,value\n";
  os << "n_queries," << r.n_queries << '\n';
  os << "excluded," << r.excluded << '\n';
  os << "mrr," << r.mrr << '\n';
  for (const auto& [k, v] : r.recall) os << "recall@" << k << ',' << v << '\n';
  os << "mam_mean," << r.mam.mean << '\n';
  os << "mam_sd," << r.mam.sd << '\n';
  os << "mam_prime_mean," << r.mam.mean_prime << '\n';
  os << "mam_prime_sd," << r.mam.sd_prime << '\n';
  return os.str();
}

// --- subcommands ------------------------------------------------------------

int cmd_parse(std::ostream& out, const std::string& lang, const std::string& file, bool refined) {
  const std::string source = read_file(file);
  const RawAst raw = parse_source(source, lang);
  if (!refined) {
    out << summarize(raw);
    return kOk;
  }
  const auto& kinds = grammar(lang).container_kinds;
  const RefinedAst r = refine_ast(raw, ContainerKinds(kinds.begin(), kinds.end()));
  const std::function<void(int, int)> print = [&](int id, int depth) {
    const auto& n = r.nodes[static_cast<std::size_t>(id)];
    out << std::string(static_cast<std::size_t>(2 * depth), ' ') << n.id << ' ' << n.kind << " \""
        << truncate_utf8(n.content, 60) << "\"\n";
    for (int c : n.children) print(c, depth + 1);
  };
  print(r.root, 0);
  return kOk;
}

int cmd_graph(std::ostream& out, const std::string& lang, const std::string& file,
              const ProviderSpec& provider, const GraphOptions& options, bool with_features) {
  PipelineConfig pc;
  pc.language = lang;
  pc.graph = options;
  const Pipeline pipeline(pc, make_provider(provider));
  const EncodedCode code = pipeline.encode_code(read_file(file));
  if (!with_features) {
    out << serialize_graph(code.graph) << '\n';
    return kOk;
  }
  ojson j = ojson::parse(serialize_graph(code.graph));
  ojson feats = ojson::array();
  for (Eigen::Index r = 0; r < code.graph.features.rows(); ++r) {
    ojson row = ojson::array();
    for (Eigen::Index c = 0; c < code.graph.features.cols(); ++c) row.push_back(code.graph.features(r, c));
    feats.push_back(std::move(row));
  }
  j["features"] = std::move(feats);
  out << j.dump() << '\n';
  return kOk;
}

int cmd_train(std::ostream& out, const TrainFlags& flags, const ProviderSpec& provider,
              const std::string& lang, const std::string& corpus_path, const std::string& out_path,
              const std::string& metrics_path, int jobs) {
  const TrainConfig tc = flags.resolve(jobs);
  const auto corpus = load_corpus(corpus_path);
  Trained t = train_on(corpus, lang, provider, tc);
  save_checkpoint(t.checkpoint, out_path);
  if (!metrics_path.empty()) write_file(metrics_path, metrics_csv(t.result.log));

  ojson j;
  j["checkpoint"] = out_path;
  j["samples"] = t.samples;
  j["skipped"] = t.failures.size();
  j["steps"] = tc.steps;
  j["final_loss"] = t.result.log.back().loss;
  j["sigma_lambda"] = t.result.model.sigma_lambda();
  j["tau"] = t.result.model.tau();
  j["model_fingerprint"] = model_fingerprint(t.result.model);
  out << j.dump(2) << '\n';
  return kOk;
}

int cmd_index_build(std::ostream& out, const std::string& ckpt_path, const std::string& corpus_path,
                    const std::string& out_path, int jobs) {
  const Checkpoint ck = load_checkpoint(ckpt_path);
  const Pipeline pipeline(ck.pipeline, make_provider(ck.provider));
  BuildResult built =
      build_index(load_corpus(corpus_path), pipeline, ck.model, ck.provider.to_json(), jobs);
  save_index(built.index, built.payload, out_path);
  ojson j;
  j["index"] = out_path;
  j["entries"] = built.index.size();
  j["dim"] = built.index.dim();
  ojson failures = ojson::array();
  for (const auto& f : built.failures) failures.push_back({{"id", f.id}, {"error", f.message}});
  j["failures"] = std::move(failures);
  out << j.dump(2) << '\n';
  return kOk;
}

int cmd_query(std::ostream& out, const std::string& index_path, const std::string& text,
              std::size_t k, const std::string& format, bool show_code) {
  const RetrievalIndex index = load_index(index_path);
  const auto provider = make_provider(ProviderSpec::from_json(index.provider_spec_json()));
  const auto hits = query(index, text, *provider, k);
  if (format == "csv") {
    std::ostringstream os;
    os.precision(17);
    os << "rank,id,similarity\n";
    for (std::size_t i = 0; i < hits.size(); ++i) {
      os << i + 1 << ',' << hits[i].id << ',' << hits[i].similarity << '\n';
    }
    out << os.str();
    return kOk;
  }
  ojson arr = ojson::array();
  for (std::size_t i = 0; i < hits.size(); ++i) {
    ojson h = {{"rank", i + 1}, {"id", hits[i].id}, {"similarity", hits[i].similarity}};
    if (show_code) {
      const auto& entry = index.entries()[*index.find(hits[i].id)];
      h["code"] = load_payload(index_path, entry).code;
    }
    arr.push_back(std::move(h));
  }
  out << arr.dump(2) << '\n';
  return kOk;
}

int cmd_eval(std::ostream& out, const std::string& index_path, const std::string& pairs_path,
             const std::vector<int>& ks, std::optional<std::size_t> pool, std::uint64_t seed,
             const std::string& format, const std::string& out_path, const std::string& ranks_path) {
  const RetrievalIndex index = load_index(index_path);
  const auto provider = make_provider(ProviderSpec::from_json(index.provider_spec_json()));
  if (provider->fingerprint() != index.fingerprints().provider) {
    throw FingerprintMismatch("index provider fingerprint does not match its recorded spec");
  }
  EvalOptions opt;
  opt.ks = ks;
  opt.pool_size = pool;
  opt.seed = seed;
  const RetrievalReport report =
      evaluate_retrieval(index, queries_from(load_corpus(pairs_path), *provider), opt);
  for (const auto& e : report.errors) log::warn(e);
  emit(out, out_path, format == "csv" ? eval_csv(report) : report_json(report) + "\n");
  if (!ranks_path.empty()) write_file(ranks_path, ranks_csv(report));
  return report.n_queries == 0 ? kData : kOk;
}

int cmd_sweep(std::ostream& out, const TrainFlags& flags, const ProviderSpec& provider,
              const std::string& lang, const std::string& corpus_path, int synthetic,
              const std::vector<double>& ratios, const std::string& out_path, int jobs) {
  const TrainConfig base = flags.resolve(jobs);
  const auto corpus =
      corpus_path.empty() ? synthetic_corpus(synthetic, base.seed) : load_corpus(corpus_path);
  std::ostringstream csv;
  csv << "ratio,mrr,recall@1,recall@5,recall@10,mam_mean,mam_sd\n";
  for (double ratio : ratios) {
    TrainConfig tc = base;
    tc.pooling_ratio = ratio;
    tc.validate();
    Trained t = train_on(corpus, lang, provider, tc);
    const Pipeline pipeline(t.checkpoint.pipeline, make_provider(provider));
    const BuildResult built =
        build_index(corpus, pipeline, t.result.model, provider.to_json(), jobs);
    const RetrievalReport r =
        evaluate_retrieval(built.index, queries_from(built.payload, pipeline.provider()));
    csv << fixed(ratio, 2) << ',' << fixed(r.mrr) << ',' << fixed(r.recall.at(1)) << ','
        << fixed(r.recall.at(5)) << ',' << fixed(r.recall.at(10)) << ',' << fixed(r.mam.mean)
        << ',' << fixed(r.mam.sd) << '\n';
    log::info("ratio " + fixed(ratio, 2) + " mrr " + fixed(r.mrr));
  }
  emit(out, out_path, csv.str());
  return kOk;
}

constexpr const char* kMeanExample =
    "def mean(data):\n"
    "    return sum(data) / len(data)\n";

int cmd_export_fixtures(std::ostream& out, const std::string& dir, std::uint64_t seed) {
  const fs::path root(dir);
  fs::create_directories(root);
  SplitMix64 rng(seed);

  write_corpus(root / "synthetic_corpus.jsonl", synthetic_corpus(64, seed));
  write_file(root / "mean.py", kMeanExample);
  write_file(root / "train_config.json", TrainConfig{}.to_json() + "\n");

  // Contrastive loss inputs with their closed-form values.
  ojson loss;
  loss["identical_n4"] = {{"tau", 1.0},
                          {"codes", std::vector<std::vector<double>>(4, {1.0, 0.0, 0.0})},
                          {"texts", std::vector<std::vector<double>>(4, {1.0, 0.0, 0.0})},
                          {"expected", "ln 4"}};
  loss["orthonormal_n2"] = {{"tau", 1.0},
                            {"codes", {{1.0, 0.0}, {0.0, 1.0}}},
                            {"texts", {{1.0, 0.0}, {0.0, 1.0}}},
                            {"expected", "ln(1 + e^-1)"}};
  write_file(root / "loss_fixtures.json", loss.dump(2) + "\n");

  // Random trees for the degree-only pooling check: parent[i] < i, root 0.
  ojson trees = ojson::array();
  for (int t = 0; t < 100; ++t) {
    const int n = 2 + static_cast<int>(rng.below(30));
    std::vector<int> parent(static_cast<std::size_t>(n), -1);
    for (int i = 1; i < n; ++i) parent[i] = static_cast<int>(rng.below(static_cast<std::uint64_t>(i)));
    const double ratio = 0.1 + 0.1 * static_cast<double>(rng.below(9));
    trees.push_back({{"parent", parent}, {"ratio", ratio}});
  }
  write_file(root / "pool_trees.json", trees.dump() + "\n");

  // Small featured graph for finite-difference gradient checks.
  ojson grad;
  const int n = 7;
  const int width = 5;
  std::vector<int> parent(n, -1);
  for (int i = 1; i < n; ++i) parent[i] = static_cast<int>(rng.below(static_cast<std::uint64_t>(i)));
  std::vector<std::vector<double>> x(n, std::vector<double>(width));
  for (auto& row : x) {
    for (auto& v : row) v = rng.uniform(-1.0, 1.0);
  }
  grad["parent"] = parent;
  grad["features"] = x;
  grad["hidden"] = 4;
  write_file(root / "gradient_graph.json", grad.dump() + "\n");

  ojson j;
  j["dir"] = dir;
  j["files"] = {"synthetic_corpus.jsonl", "mean.py", "train_config.json", "loss_fixtures.json",
                "pool_trees.json", "gradient_graph.json"};
  out << j.dump(2) << '\n';
  return kOk;
}

int cmd_store_import(std::ostream& out, const std::string& jsonl, const std::string& out_path,
                     const std::string& model_id) {
  const EmbeddingStore store = import_jsonl(jsonl, model_id);
  save_store(store, out_path);
  ojson j = {{"store", out_path}, {"dim", store.dim()}, {"count", store.size()}};
  out << j.dump(2) << '\n';
  return kOk;
}

log::Level parse_level(const std::string& s) {
  if (s == "debug") return log::Level::Debug;
  if (s == "info") return log::Level::Info;
  if (s == "error") return log::Level::Error;
  if (s == "off") return log::Level::Off;
  return log::Level::Warn;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"treeseek: AST graph encoder for code retrieval", "treeseek"};
  app.require_subcommand(1);
  // Global options such as --jobs may also follow the subcommand.
  app.fallthrough();
  std::string log_level = "warn";
  int jobs = 1;
  app.add_option("--log-level", log_level, "debug | info | warn | error | off")
      ->check(CLI::IsMember({"debug", "info", "warn", "error", "off"}));
  app.add_option("--jobs", jobs, "Worker threads (results do not depend on this)")
      ->check(CLI::PositiveNumber);

  std::function<int()> action;

  // parse
  std::string lang = "python";
  std::string file;
  bool refined = false;
  auto* parse = app.add_subcommand("parse", "Print the parsed syntax tree");
  parse->add_option("--lang", lang, "Source language");
  parse->add_option("file", file, "Source file")->required();
  parse->add_flag("--refined", refined, "Print the refined tree instead");
  parse->callback([&] { action = [&] { return cmd_parse(out, lang, file, refined); }; });

  // graph
  ProviderFlags graph_provider;
  GraphOptions graph_opts;
  bool with_features = false;
  auto* graph = app.add_subcommand("graph", "Emit the refined, edge-reversed graph as JSON");
  graph->add_option("--lang", lang, "Source language");
  graph->add_option("file", file, "Source file")->required();
  graph->add_flag("--no-node-type", graph_opts.no_node_type, "Drop node-kind one-hot features");
  graph->add_flag("--undirected", graph_opts.undirected, "Add reverse edges");
  graph->add_flag("--features", with_features, "Include the feature matrix");
  graph_provider.attach(*graph);
  graph->callback([&] {
    action = [&] {
      return cmd_graph(out, lang, file, graph_provider.spec(), graph_opts, with_features);
    };
  });

  // train
  TrainFlags train_flags;
  ProviderFlags train_provider;
  std::string corpus_path, out_path, metrics_path;
  auto* train_cmd = app.add_subcommand("train", "Train a model and write a checkpoint");
  train_flags.attach(*train_cmd);
  train_provider.attach(*train_cmd);
  train_cmd->add_option("--lang", lang, "Corpus language");
  train_cmd->add_option("--corpus", corpus_path, "JSONL corpus")->required();
  train_cmd->add_option("--out", out_path, "Checkpoint path")->required();
  train_cmd->add_option("--metrics", metrics_path, "Per-step CSV log");
  train_cmd->callback([&] {
    action = [&] {
      return cmd_train(out, train_flags, train_provider.spec(), lang, corpus_path, out_path,
                       metrics_path, jobs);
    };
  });

  // index build / index query
  std::string ckpt_path, index_path, text, format = "json";
  std::size_t k = 10;
  bool show_code = false;
  auto* index = app.add_subcommand("index", "Build or query a retrieval index");
  index->require_subcommand(1);
  auto* build = index->add_subcommand("build", "Embed a corpus into an index");
  build->add_option("--ckpt", ckpt_path, "Checkpoint")->required();
  build->add_option("--corpus", corpus_path, "JSONL corpus")->required();
  build->add_option("--out", out_path, "Index path")->required();
  build->callback([&] {
    action = [&] { return cmd_index_build(out, ckpt_path, corpus_path, out_path, jobs); };
  });
  const auto add_query_options = [&](CLI::App* q) {
    q->add_option("--index", index_path, "Index path")->required();
    q->add_option("--text", text, "Natural-language query")->required();
    q->add_option("--k", k, "Number of hits")->check(CLI::PositiveNumber);
    q->add_option("--format", format, "json | csv")->check(CLI::IsMember({"json", "csv"}));
    q->add_flag("--show-code", show_code, "Include code from the payload file");
    q->callback([&] { action = [&] { return cmd_query(out, index_path, text, k, format, show_code); }; });
  };
  add_query_options(index->add_subcommand("query", "Top-k search"));
  add_query_options(app.add_subcommand("query", "Top-k search (same as index query)"));

  // eval
  std::string pairs_path, ranks_path;
  std::vector<int> ks{1, 5, 10};
  std::optional<std::size_t> pool;
  std::uint64_t eval_seed = 0;
  auto* eval = app.add_subcommand("eval", "MRR, Recall@K and MAM over query/code pairs");
  eval->add_option("--index", index_path, "Index path")->required();
  eval->add_option("--pairs", pairs_path, "JSONL pairs; doc is the query, id the answer")->required();
  eval->add_option("--k", ks, "Recall cutoffs")->delimiter(',');
  eval->add_option("--pool", pool, "Candidates per query (truth + random distractors)");
  eval->add_option("--seed", eval_seed, "Seed for distractor sampling");
  eval->add_option("--format", format, "json | csv")->check(CLI::IsMember({"json", "csv"}));
  eval->add_option("--out", out_path, "Write the report here instead of stdout");
  eval->add_option("--ranks", ranks_path, "Per-query ranks CSV");
  eval->callback([&] {
    action = [&] {
      return cmd_eval(out, index_path, pairs_path, ks, pool, eval_seed, format, out_path, ranks_path);
    };
  });

  // sweep
  TrainFlags sweep_flags;
  ProviderFlags sweep_provider;
  std::vector<double> ratios{0.1, 0.3, 0.5, 0.7, 0.9};
  int synthetic = 64;
  auto* sweep = app.add_subcommand("sweep", "Train and evaluate once per pooling ratio");
  sweep_flags.attach(*sweep);
  sweep_provider.attach(*sweep);
  sweep->add_option("--lang", lang, "Corpus language");
  sweep->add_option("--corpus", corpus_path, "JSONL corpus (default: synthetic)");
  sweep->add_option("--synthetic", synthetic, "Synthetic corpus size when --corpus is absent")
      ->check(CLI::Range(2, 128));
  sweep->add_option("--ratios", ratios, "Pooling ratios")->delimiter(',');
  sweep->add_option("--out", out_path, "Write the CSV here instead of stdout");
  sweep->callback([&] {
    action = [&] {
      return cmd_sweep(out, sweep_flags, sweep_provider.spec(), lang, corpus_path, synthetic,
                       ratios, out_path, jobs);
    };
  });

  // export-fixtures
  std::string fixtures_dir;
  std::uint64_t fixtures_seed = 0;
  auto* fixtures = app.add_subcommand("export-fixtures", "Write the inputs used by the test oracles");
  fixtures->add_option("--out", fixtures_dir, "Output directory")->required();
  fixtures->add_option("--seed", fixtures_seed, "Seed for random fixtures");
  fixtures->callback([&] {
    action = [&] { return cmd_export_fixtures(out, fixtures_dir, fixtures_seed); };
  });

  // store-import
  std::string jsonl_path, model_id = "imported";
  auto* import = app.add_subcommand("store-import", "Convert JSONL vectors to an EMBS store");
  import->add_option("--jsonl", jsonl_path, "Input JSONL")->required();
  import->add_option("--out", out_path, "Store path")->required();
  import->add_option("--model-id", model_id, "model_id field of the store");
  import->callback([&] {
    action = [&] { return cmd_store_import(out, jsonl_path, out_path, model_id); };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kUsage;
  }

  log::set_level(parse_level(log_level));
  try {
    return action ? action() : kUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    switch (e.kind()) {
      case ErrorKind::Usage: return kUsage;
      case ErrorKind::Data: return kData;
      case ErrorKind::Internal: return kInternal;
    }
    return kInternal;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kInternal;
  }
}

}  // namespace treeseek::cli
