// SPDX-License-Identifier: Apache-2.0
#include "treeseek/checkpoint.hpp"

#include "binary_io.hpp"
#include "treeseek/error.hpp"
#include "treeseek/text.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace treeseek {
namespace {

using ojson = nlohmann::ordered_json;

constexpr int kVersion = 1;

ojson config_json(const ModelConfig& c) {
  ojson j;
  j["type_width"] = c.type_width;
  j["content_dim"] = c.content_dim;
  j["hidden"] = c.hidden;
  j["out_dim"] = c.out_dim;
  j["depth"] = c.depth;
  j["eps"] = c.eps;
  j["pooling"] = std::string(to_string(c.pooling));
  j["ratio"] = c.ratio;
  j["pool_last"] = c.pool_last;
  j["mlp_adapter"] = c.mlp_adapter;
  j["initial_sigma_lambda"] = c.initial_sigma_lambda;
  j["initial_tau"] = c.initial_tau;
  return j;
}

ModelConfig config_from(const nlohmann::json& j) {
  ModelConfig c;
  c.type_width = j.at("type_width").get<int>();
  c.content_dim = j.at("content_dim").get<int>();
  c.hidden = j.value("hidden", 0);
  c.out_dim = j.value("out_dim", 0);
  c.depth = j.at("depth").get<int>();
  c.eps = j.at("eps").get<double>();
  c.pooling = parse_pooling_method(j.at("pooling").get<std::string>());
  c.ratio = j.at("ratio").get<double>();
  c.pool_last = j.value("pool_last", true);
  c.mlp_adapter = j.value("mlp_adapter", false);
  c.initial_sigma_lambda = j.value("initial_sigma_lambda", c.initial_sigma_lambda);
  c.initial_tau = j.value("initial_tau", c.initial_tau);
  return c;
}

std::string blob_bytes(const GnnModel& model) {
  std::ostringstream os(std::ios::binary);
  for (const auto& p : model.parameters()) {
    for (double v : p.data) detail::put_f32(os, static_cast<float>(v));
  }
  return os.str();
}

nlohmann::json parse_or_throw(std::string_view text, const std::string& what) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(what + ": " + e.what(), 0);
  }
}

}  // namespace

std::string to_json(const ModelConfig& config) { return config_json(config).dump(); }

ModelConfig model_config_from_json(std::string_view text) {
  const auto j = parse_or_throw(text, "model config");
  try {
    return config_from(j);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("model config: ") + e.what(), 0);
  }
}

std::string model_fingerprint(const GnnModel& model) {
  const std::uint64_t h = fnv1a64(blob_bytes(model), fnv1a64(to_json(model.config)));
  return "fnv1a64:" + hex64(h);
}

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
  const GnnModel& model = checkpoint.model;
  const ModelConfig& c = model.config;
  std::filesystem::path blob_path = path;
  blob_path += ".bin";

  ojson j;
  j["version"] = kVersion;
  j["dims"] = {{"type_width", c.type_width},
               {"content_dim", c.content_dim},
               {"hidden", c.hidden_size()},
               {"out", c.output_size()},
               {"depth", c.depth}};
  j["config"] = config_json(c);
  j["pipeline"] = ojson::parse(checkpoint.pipeline.to_json());
  j["provider"] = ojson::parse(checkpoint.provider.to_json());
  j["blob"] = blob_path.filename().string();
  j["dtype"] = "float32-le";
  j["layout"] = "column-major";
  j["tau_encoding"] = "log_inverse";
  ojson tensors = ojson::array();
  std::size_t offset = 0;
  for (const auto& p : model.parameters()) {
    tensors.push_back({{"name", p.name}, {"shape", p.shape}, {"offset", offset},
                       {"len", p.data.size()}});
    offset += p.data.size();
  }
  j["tensors"] = std::move(tensors);

  {
    std::ofstream out(blob_path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot open " + blob_path.string() + " for writing", 0);
    const std::string bytes = blob_bytes(model);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw FormatError("failed to write " + blob_path.string(), 0);
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing", 0);
  out << j.dump(2) << '\n';
  if (!out) throw FormatError("failed to write " + path.string(), 0);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open checkpoint " + path.string(), 0);
  std::stringstream ss;
  ss << in.rdbuf();
  const auto j = parse_or_throw(ss.str(), "checkpoint " + path.string());

  Checkpoint ck;
  std::vector<std::tuple<std::string, std::vector<int>, std::size_t, std::size_t>> tensors;
  std::string blob_name;
  try {
    if (j.at("version").get<int>() != kVersion) {
      throw FormatError("unsupported checkpoint version", 0);
    }
    if (j.value("dtype", std::string("float32-le")) != "float32-le") {
      throw FormatError("unsupported checkpoint dtype", 0);
    }
    const ModelConfig config = config_from(j.at("config"));
    try {
      ck.model = GnnModel::create(config, 0);
    } catch (const ContractViolation& e) {
      throw FormatError(std::string("checkpoint config invalid: ") + e.what(), 0);
    }
    ck.pipeline = PipelineConfig::from_json(j.at("pipeline").dump());
    ck.provider = ProviderSpec::from_json(j.at("provider").dump());
    blob_name = j.at("blob").get<std::string>();
    for (const auto& t : j.at("tensors")) {
      tensors.emplace_back(t.at("name").get<std::string>(), t.at("shape").get<std::vector<int>>(),
                           t.at("offset").get<std::size_t>(), t.at("len").get<std::size_t>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("checkpoint " + path.string() + ": " + e.what(), 0);
  }

  auto params = ck.model.parameters();
  if (params.size() != tensors.size()) {
    throw FormatError("checkpoint lists " + std::to_string(tensors.size()) + " tensors, expected " +
                          std::to_string(params.size()),
                      0);
  }
  std::size_t expected_offset = 0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    const auto& [name, shape, offset, len] = tensors[k];
    if (name != params[k].name || shape != params[k].shape || len != params[k].data.size() ||
        offset != expected_offset) {
      throw FormatError("checkpoint tensor '" + name + "' does not match the model layout", 0);
    }
    expected_offset += len;
  }

  const std::filesystem::path blob_path = path.parent_path() / blob_name;
  std::ifstream blob(blob_path, std::ios::binary);
  if (!blob) throw FormatError("cannot open checkpoint blob " + blob_path.string(), 0);
  detail::ByteReader r(blob, 0);
  for (auto& p : params) {
    for (double& v : p.data) v = static_cast<double>(r.f32("checkpoint tensor"));
  }
  if (blob.peek() != std::char_traits<char>::eof()) {
    throw FormatError("trailing bytes in checkpoint blob", r.offset());
  }
  return ck;
}

}  // namespace treeseek
