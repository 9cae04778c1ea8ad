// SPDX-License-Identifier: Apache-2.0
// Acceptance harness: one PASS/FAIL line per headline criterion. Tolerances
// and budgets are fixed here and never relaxed at run time.
#include "support/fixtures.hpp"
#include "support/gradient_suite.hpp"

#include "treeseek/ast.hpp"
#include "treeseek/checkpoint.hpp"
#include "treeseek/embedding_store.hpp"
#include "treeseek/languages.hpp"
#include "treeseek/log.hpp"
#include "treeseek/loss.hpp"
#include "treeseek/metrics.hpp"
#include "treeseek/retrieval.hpp"
#include "treeseek/text.hpp"
#include "treeseek/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <optional>
#include <iostream>
#include <sstream>

using namespace treeseek;
using Clock = std::chrono::steady_clock;

namespace {

constexpr double kGradTolerance = 1e-4;
constexpr double kGradBudgetSeconds = 60.0;
constexpr double kLossTolerance = 1e-9;
constexpr double kOverfitBudgetSeconds = 300.0;
constexpr double kMamIdentityTolerance = 1e-12;

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(const std::string& name, const std::function<Outcome()>& body) {
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  if (!o.pass) ++failures;
  std::cout << (o.pass ? "PASS " : "FAIL ") << name << "  (" << o.detail << ")" << std::endl;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

std::string shell_quote(const std::string& s) {
  std::string q = "'";
  for (char c : s) q += c == '\'' ? std::string("'\\''") : std::string(1, c);
  return q + "'";
}

/// Runs the installed binary; stdout goes to `out_file`. Returns the exit status.
int run_cli(const std::vector<std::string>& args, const std::filesystem::path& out_file) {
  std::string cmd = shell_quote(TREESEEK_CLI_PATH);
  for (const auto& a : args) cmd += " " + shell_quote(a);
  cmd += " > " + shell_quote(out_file.string()) + " 2>/dev/null";
  return std::system(cmd.c_str());
}

Outcome gradient_suite() {
  const auto t0 = Clock::now();
  const auto checks = fixtures::full_gradient_suite(20240601);
  const double secs = seconds_since(t0);
  double worst = 0.0;
  std::string worst_name;
  for (const auto& c : checks) {
    if (!(c.rel_error <= worst)) {
      worst = c.rel_error;
      worst_name = c.name;
    }
  }
  const bool ok = worst < kGradTolerance && secs < kGradBudgetSeconds;
  return {ok, std::to_string(checks.size()) + " tensors, max rel err " + fmt(worst) + " at " + worst_name +
                  ", " + fmt(secs) + " s"};
}

Outcome refinement_fidelity() {
  const auto& kinds = grammar("python").container_kinds;
  const RawAst raw = parse_source("def mean(data):\n    return sum(data)/len(data)", "python");
  const RefinedAst r = refine_ast(raw, ContainerKinds(kinds.begin(), kinds.end()));
  std::string fn;
  bool shadow = false;
  for (const auto& n : r.nodes) {
    if (n.kind == "function_definition") fn = n.content;
    if (n.id != r.root && n.kind == n.content) shadow = true;
  }
  const bool ok = strip_whitespace(fn) == strip_whitespace("def mean (data):") && !shadow;
  return {ok, "function_definition = \"" + fn + "\", shadow nodes left: " + (shadow ? "yes" : "none")};
}

Outcome degree_reduction() {
  SplitMix64 rng(77);
  int agree = 0;
  for (int t = 0; t < 100; ++t) {
    const int n = 2 + static_cast<int>(rng.below(40));
    GraphState s = fixtures::random_state(rng, n, 6);
    const double ratio = 0.1 * static_cast<double>(1 + rng.below(9));
    const AstGPoolLayer layer{fixtures::random_vector(rng, 6), 0.0, 1.0, ratio};
    PoolTrace trace;
    graph_pool(layer, s, PoolingMethod::AstGPool, &trace);
    oracle::Vec deg;
    for (int d : oracle::indegree(static_cast<std::size_t>(n), fixtures::to_edges(s.edges))) deg.push_back(d);
    if (trace.kept == oracle::select(deg, ratio, s.root)) ++agree;
  }
  return {agree == 100, std::to_string(agree) + "/100 trees agree with the in-degree oracle"};
}

Outcome loss_fixtures() {
  SplitMix64 rng(5);
  const Eigen::RowVectorXd row = fixtures::random_unit(rng, 8).transpose();
  const Eigen::MatrixXd same = row.replicate(4, 1);
  const double a = contrastive_loss(same, same, 0.07).loss;
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(2, 2);
  const double b = contrastive_loss(eye, eye, 1.0).loss;
  const double ea = std::abs(a - std::log(4.0));
  const double eb = std::abs(b - std::log1p(std::exp(-1.0)));
  return {ea <= kLossTolerance && eb <= kLossTolerance,
          "|L - ln 4| = " + fmt(ea) + ", |L - ln(1+e^-1)| = " + fmt(eb)};
}

struct TrainingRun {
  std::vector<int> ranks;
  MamReport before, after;
  double seconds = 0.0;
};

std::vector<int> training_ranks(const Eigen::MatrixXd& codes, const Eigen::MatrixXd& texts,
                                const std::vector<std::string>& ids) {
  const Eigen::MatrixXd sims = similarity_matrix(codes, texts);
  std::vector<int> ranks;
  for (Eigen::Index j = 0; j < texts.rows(); ++j) {
    std::vector<double> col(sims.col(j).data(), sims.col(j).data() + sims.rows());
    ranks.push_back(rank_of(col, ids, static_cast<std::size_t>(j)));
  }
  return ranks;
}

TrainingRun overfit_run() {
  TrainConfig tc;  // batch 64, 300 steps, lr 0.004, ratio 0.1
  tc.seed = 7;
  tc.jobs = 1;
  ProviderSpec ps;
  ps.dim = 64;
  ps.seed = 7;
  const Pipeline pipe(PipelineConfig{}, make_provider(ps));
  const auto enc = encode_corpus(pipe, synthetic_corpus(64, 7), 1);
  if (enc.samples.size() != 64) throw std::runtime_error("synthetic corpus failed to encode");
  std::vector<std::string> ids;
  for (const auto& s : enc.samples) ids.push_back(s.id);

  const GnnModel init = GnnModel::create(model_config_for(tc, pipe), tc.seed);
  const Eigen::MatrixXd texts = text_matrix(enc.samples);
  TrainingRun run;
  run.before = mam_report(embed_codes(init, enc.samples), texts);
  const auto t0 = Clock::now();
  const TrainResult trained = train(tc, enc.samples, init);
  run.seconds = seconds_since(t0);
  const Eigen::MatrixXd codes = embed_codes(trained.model, enc.samples);
  run.after = mam_report(codes, texts);
  run.ranks = training_ranks(codes, texts, ids);
  return run;
}

Outcome overfit(const TrainingRun& r) {
  const double m = mrr(r.ranks), r1 = recall_at_k(r.ranks, 1);
  return {m == 1.0 && r1 == 1.0 && r.seconds < kOverfitBudgetSeconds,
          "MRR " + fmt(m) + ", R@1 " + fmt(r1) + ", " + fmt(r.seconds) + " s on one thread"};
}

Outcome mam_direction(const TrainingRun& r) {
  const double gap = std::max(std::abs(r.before.mean - r.before.mean_prime),
                              std::abs(r.after.mean - r.after.mean_prime));
  const bool ok = std::abs(r.after.mean) < std::abs(r.before.mean) && gap <= kMamIdentityTolerance;
  return {ok, "|MAM| " + fmt(std::abs(r.before.mean)) + " -> " + fmt(std::abs(r.after.mean)) +
                  ", max |mean - mean'| " + fmt(gap)};
}

Outcome sweep(const std::filesystem::path& dir) {
  const auto t0 = Clock::now();
  const int code = run_cli({"sweep", "--seed", "1", "--ratios", "0.1,0.3,0.5,0.7,0.9"}, dir / "sweep.csv");
  std::istringstream in(fixtures::slurp(dir / "sweep.csv"));
  std::string line;
  std::getline(in, line);
  int rows = 0;
  bool finite = true;
  std::string mrrs;
  while (std::getline(in, line)) {
    const auto cells = split(line, ',');
    if (cells.size() < 2) {
      finite = false;
      continue;
    }
    const double v = std::stod(std::string(cells[1]));
    finite = finite && std::isfinite(v) && v > 0.0 && v <= 1.0;
    mrrs += (rows ? " " : "") + fmt(v);
    ++rows;
  }
  return {code == 0 && rows == 5 && finite,
          std::to_string(rows) + " rows, MRR " + mrrs + ", " + fmt(seconds_since(t0)) + " s"};
}

Outcome cli_determinism(const std::filesystem::path& dir) {
  const std::string corpus = (dir / "corpus.jsonl").string();
  write_corpus(corpus, synthetic_corpus(24, 11));
  const auto p = [&](const char* name) { return (dir / name).string(); };
  const std::vector<std::vector<std::string>> commands{
      {"export-fixtures", "--out", p("fx"), "--seed", "3"},
      {"train", "--seed", "3", "--corpus", corpus, "--out", p("m.json"), "--dim", "32", "--steps", "25",
       "--batch-size", "8", "--ratio", "0.5", "--metrics", p("m.csv")},
      {"index", "build", "--ckpt", p("m.json"), "--corpus", corpus, "--out", p("m.idx")},
      {"query", "--index", p("m.idx"), "--text", "average of the values", "--k", "5"},
      {"eval", "--index", p("m.idx"), "--pairs", corpus, "--k", "1,5,10", "--pool", "10", "--seed", "4",
       "--ranks", p("ranks.csv")},
      {"sweep", "--seed", "3", "--synthetic", "16", "--steps", "10", "--batch-size", "8", "--dim", "16"},
      {"graph", p("fx/mean.py"), "--features", "--dim", "8"},
  };
  const std::vector<std::string> artifacts{"fx/synthetic_corpus.jsonl", "fx/pool_trees.json",
                                           "fx/gradient_graph.json",    "m.json",
                                           "m.json.bin",                "m.csv",
                                           "m.idx",                     "m.idx.payload.jsonl",
                                           "ranks.csv"};
  std::vector<std::string> first;
  for (int round = 0; round < 2; ++round) {
    std::vector<std::string> snapshot;
    for (std::size_t c = 0; c < commands.size(); ++c) {
      const auto out = dir / ("stdout" + std::to_string(c) + ".txt");
      if (run_cli(commands[c], out) != 0) return {false, "command failed: " + commands[c][0]};
      snapshot.push_back(fixtures::slurp(out));
    }
    for (const auto& a : artifacts) snapshot.push_back(fixtures::slurp(dir / a));
    if (round == 0) first = std::move(snapshot);
    else if (snapshot != first) {
      for (std::size_t i = 0; i < first.size(); ++i) {
        if (first[i] != snapshot[i]) return {false, "output " + std::to_string(i) + " differs"};
      }
    }
  }
  return {true, std::to_string(commands.size()) + " commands, " + std::to_string(commands.size() + artifacts.size()) +
                    " outputs byte-identical across two runs"};
}

Outcome round_trips(const std::filesystem::path& dir) {
  SplitMix64 rng(99);
  std::vector<std::string> done;

  // Embedding store.
  for (int t = 0; t < 5; ++t) {
    const int dim = 1 + static_cast<int>(rng.below(32));
    EmbeddingStore s(static_cast<std::uint32_t>(dim), "model-" + std::to_string(t));
    for (int i = 0, n = static_cast<int>(rng.below(40)); i < n; ++i) {
      std::vector<float> v(static_cast<std::size_t>(dim));
      for (float& x : v) x = static_cast<float>(rng.uniform(-3.0, 3.0));
      s.add("code:" + std::to_string(i) + "\xc3\xa9", std::move(v));
    }
    save_store(s, dir / "s.embs");
    const EmbeddingStore back = load_store(dir / "s.embs");
    save_store(back, dir / "s2.embs");
    if (!(back == s) || fixtures::slurp(dir / "s.embs") != fixtures::slurp(dir / "s2.embs")) {
      return {false, "embedding store"};
    }
  }
  done.push_back("store");

  // Checkpoint.
  for (int t = 0; t < 3; ++t) {
    ModelConfig cfg;
    cfg.type_width = static_cast<int>(rng.below(10));
    cfg.content_dim = 8 + static_cast<int>(rng.below(8));
    cfg.depth = 1 + static_cast<int>(rng.below(3));
    cfg.mlp_adapter = t == 2;
    const Checkpoint c{GnnModel::create(cfg, rng.next()), PipelineConfig{}, ProviderSpec{}};
    save_checkpoint(c, dir / "c.json");
    const Checkpoint back = load_checkpoint(dir / "c.json");
    std::filesystem::create_directories(dir / "copy");
    save_checkpoint(back, dir / "copy" / "c.json");
    if (fixtures::slurp(dir / "c.json.bin") != fixtures::slurp(dir / "copy" / "c.json.bin") ||
        fixtures::slurp(dir / "c.json") != fixtures::slurp(dir / "copy" / "c.json") ||
        model_fingerprint(back.model) != model_fingerprint(c.model)) {
      return {false, "checkpoint"};
    }
  }
  done.push_back("checkpoint");

  // Index.
  for (int t = 0; t < 3; ++t) {
    const int dim = 4 + static_cast<int>(rng.below(12));
    RetrievalIndex idx(dim, {"fnv1a64:" + std::to_string(t), "pipe:x", "hash:y"}, ProviderSpec{}.to_json());
    std::vector<CorpusSample> payload;
    for (int i = 0, n = static_cast<int>(rng.below(30)); i < n; ++i) {
      const Eigen::VectorXd v = fixtures::random_unit(rng, dim);
      std::vector<float> f(v.data(), v.data() + dim);
      double norm = 0.0;
      for (float x : f) norm += static_cast<double>(x) * x;
      for (float& x : f) x = static_cast<float>(x / std::sqrt(norm));
      const std::string id = "s" + std::to_string(i);
      idx.add({id, f, "python", 0});
      payload.push_back({id, "python", "x = " + std::to_string(rng.below(100)) + "\n", "doc \"" + id + "\""});
    }
    save_index(idx, payload, dir / "i.idx");
    RetrievalIndex back = load_index(dir / "i.idx");
    std::filesystem::create_directories(dir / "copy");
    save_index(back, payload, dir / "copy" / "i.idx");
    if (!(back == idx) || fixtures::slurp(dir / "i.idx") != fixtures::slurp(dir / "copy" / "i.idx")) {
      return {false, "index"};
    }
    for (std::size_t i = 0; i < payload.size(); ++i) {
      if (!(load_payload(dir / "i.idx", back.entries()[i]) == payload[i])) return {false, "index payload"};
    }
  }
  done.push_back("index");

  // Graph JSON.
  for (int t = 0; t < 20; ++t) {
    GraphDump g;
    const int n = 1 + static_cast<int>(rng.below(20));
    for (int i = 0; i < n; ++i) {
      g.nodes.push_back({i, "kind" + std::to_string(rng.below(5)), "c\"\n\t" + std::to_string(rng.next())});
    }
    for (const auto& e : fixtures::random_tree_edges(rng, n)) g.edges.push_back(e);
    const std::string text = serialize_graph(g);
    if (!(parse_graph(text) == g) || serialize_graph(parse_graph(text)) != text) return {false, "graph JSON"};
  }
  done.push_back("graph JSON");

  std::string list;
  for (const auto& d : done) list += (list.empty() ? "" : ", ") + d;
  return {true, list + " lossless"};
}

}  // namespace

int main() {
  log::set_level(log::Level::Error);
  fixtures::TempDir dir("acceptance");

  report("gradient-suite", gradient_suite);
  report("refinement-fidelity", refinement_fidelity);
  report("degree-only-pooling-reduction", degree_reduction);
  report("loss-fixtures", loss_fixtures);

  std::optional<TrainingRun> run;
  std::string train_error;
  try {
    run = overfit_run();
  } catch (const std::exception& e) {
    train_error = e.what();
  }
  report("overfit-sanity", [&] { return run ? overfit(*run) : Outcome{false, train_error}; });
  report("mam-direction", [&] { return run ? mam_direction(*run) : Outcome{false, train_error}; });

  report("pooling-sweep", [&] { return sweep(dir.path()); });
  report("cli-determinism", [&] { return cli_determinism(dir.path()); });
  report("round-trips", [&] { return round_trips(dir.path()); });

  std::cout << (failures == 0 ? "ALL PASS" : std::to_string(failures) + " FAILED") << std::endl;
  return failures == 0 ? 0 : 1;
}
