// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "cli.hpp"
#include "support/fixtures.hpp"
#include "treeseek/checkpoint.hpp"
#include "treeseek/corpus.hpp"
#include "treeseek/embedding_store.hpp"
#include "treeseek/retrieval.hpp"

#include <json.hpp>

#include <cstdlib>
#include <sstream>

using namespace treeseek;

namespace {

struct Run {
  int code = 0;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "treeseek");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string p(const std::filesystem::path& path) { return path.string(); }

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("usage errors exit with 1") {
    CHECK(run({}).code == cli::kUsage);
    CHECK(run({"frobnicate"}).code == cli::kUsage);
    CHECK(run({"train"}).code == cli::kUsage);
    CHECK(run({"eval", "--index", "x", "--pairs", "y", "--format", "xml"}).code == cli::kUsage);
    const Run help = run({"--help"});
    CHECK(help.code == cli::kOk);
    CHECK(help.out.find("export-fixtures") != std::string::npos);
  }

  TEST_CASE("data errors exit with 2") {
    fixtures::TempDir dir("cli-data");
    CHECK(run({"parse", p(dir / "missing.py")}).code == cli::kData);
    fixtures::spit(dir / "bad.py", "x = 1\n\xff\n");
    const Run r = run({"parse", p(dir / "bad.py")});
    CHECK(r.code == cli::kData);
    CHECK(r.err.find("6") != std::string::npos);
    CHECK(run({"parse", "--lang", "cobol", p(dir / "bad.py")}).code == cli::kData);
    fixtures::spit(dir / "c.jsonl", "{oops\n");
    CHECK(run({"train", "--corpus", p(dir / "c.jsonl"), "--out", p(dir / "m.json")}).code == cli::kData);
  }

  TEST_CASE("parse and graph output") {
    fixtures::TempDir dir("cli-parse");
    fixtures::spit(dir / "mean.py", "def mean(data):\n    return sum(data) / len(data)\n");
    const Run raw = run({"parse", p(dir / "mean.py")});
    REQUIRE(raw.code == 0);
    CHECK(raw.out.find("function_definition") != std::string::npos);
    const Run refined = run({"parse", p(dir / "mean.py"), "--refined"});
    CHECK(refined.out.find("def mean ( data ) :") != std::string::npos);

    const Run g = run({"graph", p(dir / "mean.py"), "--dim", "8"});
    REQUIRE(g.code == 0);
    const GraphDump dump = parse_graph(g.out);
    CHECK(dump.edges.size() == dump.nodes.size() - 1);
    CHECK(serialize_graph(dump) + "\n" == g.out);
    const Run u = run({"graph", p(dir / "mean.py"), "--undirected"});
    CHECK(parse_graph(u.out).edges.size() == 2 * dump.edges.size());
    const auto feats = nlohmann::json::parse(run({"graph", p(dir / "mean.py"), "--dim", "8", "--features"}).out);
    CHECK(feats.contains("features"));
  }

  TEST_CASE("train, index, query and eval are deterministic") {
    fixtures::TempDir dir("cli-e2e");
    write_corpus(dir / "c.jsonl", synthetic_corpus(16, 4));
    const std::vector<std::string> train_args{"train", "--corpus", p(dir / "c.jsonl"), "--dim", "16",
                                              "--steps", "15", "--batch-size", "8", "--ratio", "0.5",
                                              "--metrics", p(dir / "m.csv")};
    auto a = train_args;
    a.insert(a.end(), {"--out", p(dir / "a.json")});
    REQUIRE(run(a).code == 0);
    const std::string metrics_a = fixtures::slurp(dir / "m.csv");
    REQUIRE(run({"--jobs", "3", "train", "--corpus", p(dir / "c.jsonl"), "--dim", "16", "--steps", "15",
                 "--batch-size", "8", "--ratio", "0.5", "--metrics", p(dir / "m.csv"), "--out",
                 p(dir / "b.json")})
                .code == 0);
    CHECK(fixtures::slurp(dir / "a.json.bin") == fixtures::slurp(dir / "b.json.bin"));
    CHECK(fixtures::slurp(dir / "m.csv") == metrics_a);
    CHECK(metrics_a.starts_with("step,loss,lr,sigma_lambda,tau\n"));

    // Same file name in two directories, since the header records the sidecar name.
    std::filesystem::create_directories(dir / "x");
    REQUIRE(run({"index", "build", "--ckpt", p(dir / "b.json"), "--corpus", p(dir / "c.jsonl"), "--out",
                 p(dir / "x" / "a.idx")})
                .code == 0);
    REQUIRE(run({"index", "build", "--ckpt", p(dir / "a.json"), "--corpus", p(dir / "c.jsonl"), "--out",
                 p(dir / "a.idx")})
                .code == 0);
    CHECK(fixtures::slurp(dir / "a.idx") == fixtures::slurp(dir / "x" / "a.idx"));
    CHECK(load_index(dir / "a.idx").size() == 16);

    const Run q1 = run({"query", "--index", p(dir / "a.idx"), "--text", "mean of values", "--k", "3"});
    const Run q2 = run({"index", "query", "--index", p(dir / "a.idx"), "--text", "mean of values", "--k", "3"});
    REQUIRE(q1.code == 0);
    CHECK(q1.out == q2.out);
    const auto hits = nlohmann::json::parse(q1.out);
    CHECK(hits.size() == 3);
    CHECK(hits[0]["rank"] == 1);
    const Run csv = run({"query", "--index", p(dir / "a.idx"), "--text", "x", "--k", "2", "--format", "csv"});
    CHECK(std::count(csv.out.begin(), csv.out.end(), '\n') == 3);

    const Run e1 = run({"eval", "--index", p(dir / "a.idx"), "--pairs", p(dir / "c.jsonl"), "--k", "1,5",
                        "--ranks", p(dir / "r.csv")});
    const Run e2 = run({"eval", "--index", p(dir / "a.idx"), "--pairs", p(dir / "c.jsonl"), "--k", "1,5"});
    REQUIRE(e1.code == 0);
    CHECK(e1.out == e2.out);
    const auto report = nlohmann::json::parse(e1.out);
    CHECK(report["n_queries"] == 16);
    CHECK(report["recall"].contains("recall@5"));
    CHECK(fixtures::slurp(dir / "r.csv").starts_with("query_id,rank\n"));

    const Run shown = run({"query", "--index", p(dir / "a.idx"), "--text", "x", "--k", "1", "--show-code"});
    CHECK(nlohmann::json::parse(shown.out)[0].contains("code"));
    CHECK(run({"query", "--index", p(dir / "none.idx"), "--text", "x"}).code == cli::kData);
  }

  TEST_CASE("config file from the environment") {
    fixtures::TempDir dir("cli-env");
    write_corpus(dir / "c.jsonl", synthetic_corpus(8, 4));
    fixtures::spit(dir / "cfg.json", R"({"steps": 3, "batch_size": 4, "pooling": "topk"})");
    ::setenv("TREESEEK_CONFIG", p(dir / "cfg.json").c_str(), 1);
    const Run r = run({"train", "--corpus", p(dir / "c.jsonl"), "--out", p(dir / "m.json"), "--dim", "8",
                       "--metrics", p(dir / "m.csv")});
    ::unsetenv("TREESEEK_CONFIG");
    REQUIRE(r.code == 0);
    CHECK(load_checkpoint(dir / "m.json").model.config.pooling == PoolingMethod::TopKPool);
    const std::string csv = fixtures::slurp(dir / "m.csv");
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);

    fixtures::spit(dir / "bad.json", R"({"stepz": 3})");
    CHECK(run({"train", "--config", p(dir / "bad.json"), "--corpus", p(dir / "c.jsonl"), "--out",
               p(dir / "n.json")})
              .code == cli::kUsage);
  }

  TEST_CASE("sweep emits one row per ratio") {
    const Run r = run({"sweep", "--synthetic", "12", "--ratios", "0.2,0.8", "--steps", "4", "--batch-size",
                       "6", "--dim", "8"});
    REQUIRE(r.code == 0);
    std::istringstream in(r.out);
    std::string line;
    std::vector<std::string> lines;
    while (std::getline(in, line)) lines.push_back(line);
    REQUIRE(lines.size() == 3);
    CHECK(lines[0] == "ratio,mrr,recall@1,recall@5,recall@10,mam_mean,mam_sd");
    CHECK(lines[1].starts_with("0.20,"));
    CHECK(lines[2].starts_with("0.80,"));
    CHECK(r.out == run({"sweep", "--synthetic", "12", "--ratios", "0.2,0.8", "--steps", "4",
                        "--batch-size", "6", "--dim", "8", "--jobs", "2"})
                       .out);
  }

  TEST_CASE("fixture export is reproducible") {
    fixtures::TempDir dir("cli-fx");
    REQUIRE(run({"export-fixtures", "--out", p(dir / "a"), "--seed", "3"}).code == 0);
    REQUIRE(run({"export-fixtures", "--out", p(dir / "b"), "--seed", "3"}).code == 0);
    for (const char* f : {"synthetic_corpus.jsonl", "mean.py", "train_config.json", "loss_fixtures.json",
                          "pool_trees.json", "gradient_graph.json"}) {
      CHECK(fixtures::slurp(dir / "a" / f) == fixtures::slurp(dir / "b" / f));
    }
    CHECK(nlohmann::json::parse(fixtures::slurp(dir / "a" / "pool_trees.json")).size() == 100);
  }

  TEST_CASE("store import") {
    fixtures::TempDir dir("cli-store");
    fixtures::spit(dir / "v.jsonl", "{\"id\": \"code:a\", \"vector\": [1, 0, 0, 0, 0, 0, 0, 0]}\n"
                                    "{\"id\": \"doc:a\", \"vector\": [0, 1, 0, 0, 0, 0, 0, 0]}\n");
    REQUIRE(run({"store-import", "--jsonl", p(dir / "v.jsonl"), "--out", p(dir / "v.embs"), "--model-id", "enc"})
                .code == 0);
    const EmbeddingStore s = load_store(dir / "v.embs");
    CHECK(s.size() == 2);
    CHECK(s.model_id() == "enc");
    fixtures::spit(dir / "w.jsonl", "{\"id\": \"a\", \"vector\": [1]}\n{\"id\": \"b\", \"vector\": [1, 2]}\n");
    CHECK(run({"store-import", "--jsonl", p(dir / "w.jsonl"), "--out", p(dir / "w.embs")}).code == cli::kData);
  }
}
