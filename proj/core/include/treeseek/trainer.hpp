// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "treeseek/error.hpp"
#include "treeseek/gnn_layers.hpp"
#include "treeseek/model.hpp"
#include "treeseek/pipeline.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace treeseek {

struct TrainConfig {
  int batch_size = 64;
  int steps = 300;
  double lr = 0.004;
  double warmup_fraction = 0.10;
  double weight_decay = 0.01;
  std::uint64_t seed = 0;
  PoolingMethod pooling = PoolingMethod::AstGPool;
  double pooling_ratio = 0.1;
  bool no_node_type = false;
  bool undirected = false;
  bool mlp_adapter = false;
  int depth = 3;
  double eps = 0.5;
  int hidden = 0;
  bool pool_last = true;
  int jobs = 1;

  /// Throws UsageError when a field is out of range.
  void validate() const;

  std::string to_json() const;
  /// Reads a JSON mirror of the fields above; missing keys keep `base` values.
  static TrainConfig from_json(std::string_view text, const TrainConfig& base);
  static TrainConfig from_json(std::string_view text);
};

/// Linear warmup over the first floor(warmup_fraction * steps) steps, then
/// cosine decay reaching zero at step steps - 1.
double lr_at(int step, const TrainConfig& config);

struct StepLog {
  int step = 0;
  double loss = 0.0;
  double lr = 0.0;
  double sigma_lambda = 0.0;
  double tau = 0.0;
};

struct TrainResult {
  GnnModel model;
  std::vector<StepLog> log;
};

/// Model shape for a pipeline under a training config.
ModelConfig model_config_for(const TrainConfig& config, const Pipeline& pipeline);

/// Thrown when the loss stops being finite; message carries diagnostics.
class TrainingDiverged : public Error {
public:
  explicit TrainingDiverged(const std::string& what) : Error(ErrorKind::Internal, what) {}
};

/// Optimizes `model` on pre-encoded samples. Text embeddings are inputs only.
/// Batches come from a seeded shuffle; per-sample passes may run on `jobs`
/// threads but gradients are summed in batch order, so results do not depend
/// on the thread count. `on_step` sees each log row as it is produced.
TrainResult train(const TrainConfig& config, const std::vector<EncodedSample>& samples,
                  GnnModel model, const std::function<void(const StepLog&)>& on_step = {});

/// Embeds every sample's code with the model (row i = sample i).
Eigen::MatrixXd embed_codes(const GnnModel& model, const std::vector<EncodedSample>& samples,
                            int jobs = 1);
Eigen::MatrixXd text_matrix(const std::vector<EncodedSample>& samples);

std::string metrics_csv(const std::vector<StepLog>& log);

}  // namespace treeseek
