// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "support/fixtures.hpp"
#include "treeseek/checkpoint.hpp"
#include "treeseek/error.hpp"

#include <json.hpp>

using namespace treeseek;

namespace {

Checkpoint sample_checkpoint(bool adapter, std::uint64_t seed) {
  ModelConfig cfg;
  cfg.type_width = 4;
  cfg.content_dim = 8;
  cfg.hidden = 5;
  cfg.depth = 2;
  cfg.ratio = 0.3;
  cfg.pooling = PoolingMethod::SagPool;
  cfg.mlp_adapter = adapter;
  Checkpoint c{GnnModel::create(cfg, seed), PipelineConfig{}, ProviderSpec{}};
  c.model.lambda = 0.37;
  c.pipeline.graph.undirected = true;
  c.provider.dim = 8;
  c.provider.seed = 99;
  return c;
}

}  // namespace

TEST_SUITE("checkpoint") {
  TEST_CASE("round trip keeps float32-rounded parameters") {
    fixtures::TempDir dir("ckpt");
    for (bool adapter : {false, true}) {
      const Checkpoint c = sample_checkpoint(adapter, 17);
      save_checkpoint(c, dir / "m.json");
      const Checkpoint back = load_checkpoint(dir / "m.json");
      CHECK(to_json(back.model.config) == to_json(c.model.config));
      CHECK(back.pipeline.to_json() == c.pipeline.to_json());
      CHECK(back.provider == c.provider);
      const auto a = c.model.parameters();
      const auto b = back.model.parameters();
      REQUIRE(a.size() == b.size());
      for (std::size_t k = 0; k < a.size(); ++k) {
        CHECK(a[k].name == b[k].name);
        CHECK(a[k].shape == b[k].shape);
        for (std::size_t i = 0; i < a[k].data.size(); ++i) {
          CHECK(b[k].data[i] == static_cast<double>(static_cast<float>(a[k].data[i])));
        }
      }
      CHECK(model_fingerprint(back.model) == model_fingerprint(c.model));

      save_checkpoint(back, dir / "n.json");
      CHECK(fixtures::slurp(dir / "m.json.bin") == fixtures::slurp(dir / "n.json.bin"));
      const auto ja = nlohmann::json::parse(fixtures::slurp(dir / "m.json"));
      auto jb = nlohmann::json::parse(fixtures::slurp(dir / "n.json"));
      CHECK(ja["blob"] == "m.json.bin");
      jb["blob"] = ja["blob"];
      CHECK(ja == jb);
      CHECK(ja["dtype"] == "float32-le");
      CHECK(ja["layout"] == "column-major");
    }
  }

  TEST_CASE("fingerprint changes with any parameter") {
    Checkpoint c = sample_checkpoint(false, 1);
    const std::string fp = model_fingerprint(c.model);
    CHECK(fp.starts_with("fnv1a64:"));
    c.model.conv[1].gate[0] += 0.5;
    CHECK(model_fingerprint(c.model) != fp);
    CHECK(model_fingerprint(sample_checkpoint(false, 2).model) != fp);
  }

  TEST_CASE("damaged files are rejected") {
    fixtures::TempDir dir("ckpt-bad");
    save_checkpoint(sample_checkpoint(false, 3), dir / "m.json");
    const std::string blob = fixtures::slurp(dir / "m.json.bin");
    const std::string manifest = fixtures::slurp(dir / "m.json");

    fixtures::spit(dir / "m.json.bin", blob.substr(0, blob.size() - 4));
    CHECK_THROWS_AS(load_checkpoint(dir / "m.json"), FormatError);
    fixtures::spit(dir / "m.json.bin", blob + "xxxx");
    CHECK_THROWS_AS(load_checkpoint(dir / "m.json"), FormatError);
    fixtures::spit(dir / "m.json.bin", blob);

    auto j = nlohmann::json::parse(manifest);
    j["tensors"][0]["name"] = "bogus";
    fixtures::spit(dir / "m.json", j.dump());
    CHECK_THROWS_AS(load_checkpoint(dir / "m.json"), FormatError);

    j = nlohmann::json::parse(manifest);
    j["tensors"][1]["shape"] = {1, 1};
    fixtures::spit(dir / "m.json", j.dump());
    CHECK_THROWS_AS(load_checkpoint(dir / "m.json"), FormatError);

    j = nlohmann::json::parse(manifest);
    j["version"] = 99;
    fixtures::spit(dir / "m.json", j.dump());
    CHECK_THROWS_AS(load_checkpoint(dir / "m.json"), FormatError);

    fixtures::spit(dir / "m.json", "[1, 2");
    CHECK_THROWS_AS(load_checkpoint(dir / "m.json"), FormatError);
  }

  TEST_CASE("model config JSON") {
    ModelConfig c = sample_checkpoint(true, 1).model.config;
    c.pool_last = false;
    c.eps = 0.25;
    const ModelConfig back = model_config_from_json(to_json(c));
    CHECK(to_json(back) == to_json(c));
    CHECK(back.pooling == PoolingMethod::SagPool);
    CHECK(!back.pool_last);
    CHECK_THROWS_AS(model_config_from_json("{}"), FormatError);
  }
}
