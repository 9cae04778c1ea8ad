// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "treeseek/embedding.hpp"
#include "treeseek/gnn_layers.hpp"
#include "treeseek/graph.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace treeseek {

struct ModelConfig {
  int type_width = 0;   // T; 0 when node kinds are ablated
  int content_dim = 0;  // d
  int hidden = 0;       // h; 0 means h = d
  int out_dim = 0;      // 0 means out = d
  int depth = 3;
  double eps = 0.5;
  PoolingMethod pooling = PoolingMethod::AstGPool;
  double ratio = 0.1;
  /// Pool after the deepest FAConv as well.
  bool pool_last = true;
  /// Replace the graph network with a two-layer perceptron on the root embedding.
  bool mlp_adapter = false;
  double initial_sigma_lambda = 0.2;
  double initial_tau = 0.07;

  int input_width() const { return type_width + content_dim; }
  int hidden_size() const { return hidden > 0 ? hidden : content_dim; }
  int output_size() const { return out_dim > 0 ? out_dim : content_dim; }
};

/// out = W2 relu(W1 x + b1) + b2 with hidden width 2d. The identity
/// initialization W1 = [I; -I], W2 = [I, -I] reproduces x exactly.
struct MlpAdapter {
  Eigen::MatrixXd w1;
  Eigen::VectorXd b1;
  Eigen::MatrixXd w2;
  Eigen::VectorXd b2;
};

struct ParamView {
  std::string name;
  std::span<double> data;
  std::vector<int> shape;
  /// Whether decoupled weight decay applies.
  bool decay = true;
};

struct ConstParamView {
  std::string name;
  std::span<const double> data;
  std::vector<int> shape;
  bool decay = true;
};

/// All learnable parameters. The same type doubles as the gradient buffer.
struct GnnModel {
  ModelConfig config;
  Eigen::MatrixXd input_proj;  // h x (T + d)
  std::vector<FaConvLayer> conv;
  std::vector<AstGPoolLayer> pool;
  GruParams gru;
  Eigen::MatrixXd output_proj;  // out x h
  std::optional<MlpAdapter> adapter;
  /// Residual balance, stored unconstrained; the blend weight is sigmoid(lambda).
  double lambda = 0.0;
  /// Temperature, stored as log(1 / tau).
  double log_inv_tau = 0.0;

  static constexpr double kMinTau = 1e-3;

  /// Seeded initialization (Xavier-uniform projections, PyTorch-style GRU).
  static GnnModel create(const ModelConfig& config, std::uint64_t seed);
  /// Same shapes, all parameters zero.
  static GnnModel zeros_like(const GnnModel& model);

  double sigma_lambda() const;
  double tau() const;

  /// Stable names: "input_proj", "conv.0.g", "pool.1.p", "pool.1.beta1",
  /// "gru.w_z", "out_proj", "adapter.w1", "lambda", "tau", ...
  std::vector<ParamView> parameters();
  std::vector<ConstParamView> parameters() const;
  std::size_t parameter_count() const;

  void set_zero();
  GnnModel& operator+=(const GnnModel& other);
};

/// Intermediate activations of one depth.
struct DepthTrace {
  GraphState input;  // state entering the convolution
  FaConvTrace conv;
  Eigen::MatrixXd conv_out;
  std::vector<int> argmax;
  bool pooled = false;
  GraphState conv_state;  // conv_out with input's topology, as seen by pooling
  PoolTrace pool;
};

struct ForwardTrace {
  Eigen::MatrixXd input_features;  // X
  Eigen::MatrixXd projected;  // pre-activation X W^T
  std::vector<DepthTrace> depths;
  std::vector<Eigen::VectorXd> readouts;  // F1..FL
  std::vector<GruStepTrace> gru;
  Eigen::VectorXd fused;
  Eigen::VectorXd mlp_pre;  // adapter hidden pre-activation
  Eigen::VectorXd gnn_out;
  Eigen::VectorXd blended;
  Eigen::VectorXd output;
  Eigen::VectorXd root_embedding;
};

struct ForwardOptions {
  /// Per-depth kept ids (in that depth's numbering) that override top-k.
  const std::vector<std::vector<int>>* forced_selection = nullptr;
};

/// Full forward pass; dispatches to the adapter when config.mlp_adapter is
/// set. Output = normalize(s * gnn_out + (1 - s) * root_embedding) with
/// s = sigmoid(lambda). Throws ShapeError on width mismatches.
EmbeddingVector model_forward(const GnnModel& model, const CodeGraph& graph,
                              const EmbeddingVector& root_embedding,
                              ForwardTrace* trace = nullptr, const ForwardOptions& options = {});

EmbeddingVector mlp_adapter_forward(const GnnModel& model, const EmbeddingVector& root_embedding,
                                    ForwardTrace* trace = nullptr);

/// Reverse pass of model_forward. Accumulates into `grads`, which must have
/// the shapes of `model` (see GnnModel::zeros_like). Top-k choices stay at
/// the forward selection.
void model_backward(const GnnModel& model, const ForwardTrace& trace,
                    const EmbeddingVector& d_output, GnnModel& grads);

/// Kept ids per depth recorded in a trace; feed back through ForwardOptions.
std::vector<std::vector<int>> recorded_selection(const ForwardTrace& trace);

}  // namespace treeseek
