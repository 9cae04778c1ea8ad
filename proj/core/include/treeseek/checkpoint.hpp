// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "treeseek/model.hpp"
#include "treeseek/pipeline.hpp"

#include <filesystem>
#include <string>

namespace treeseek {

/// A model plus everything needed to rebuild its input pipeline.
struct Checkpoint {
  GnnModel model;
  PipelineConfig pipeline;
  ProviderSpec provider;
};

/// Writes the JSON manifest to `path` and the float32 little-endian tensor
/// blob to `path` + ".bin":
///
///   {"version": 1, "dims": {...}, "config": {...}, "pipeline": {...},
///    "provider": {...}, "blob": "<file name>",
///    "tensors": [{"name", "shape", "offset", "len"}]}
///
/// offset and len count float32 elements.
void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);

/// Throws FormatError on a malformed manifest or a blob of the wrong size.
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Hash over the tensor blob and dims as written to disk.
std::string model_fingerprint(const GnnModel& model);

std::string to_json(const ModelConfig& config);
ModelConfig model_config_from_json(std::string_view text);

}  // namespace treeseek
