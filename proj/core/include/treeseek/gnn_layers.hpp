// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "treeseek/graph.hpp"

#include <Eigen/Core>

#include <optional>
#include <string_view>
#include <vector>

namespace treeseek {

enum class PoolingMethod { AstGPool, TopKPool, SagPool };

std::string_view to_string(PoolingMethod method);
/// Accepts "astgpool", "topk"/"topkpool", "sag"/"sagpool" (case-insensitive).
PoolingMethod parse_pooling_method(std::string_view name);

/// Node states flowing through the hierarchy. `origin[i]` is the row of node
/// i in the depth-1 graph, which is where H0 and its gradient live.
struct GraphState {
  Eigen::MatrixXd h;
  Eigen::MatrixXd h0;
  std::vector<Edge> edges;
  int root = 0;
  std::vector<int> origin;

  int num_nodes() const { return static_cast<int>(h.rows()); }
};

/// Frequency-adaptive convolution:
///   H'_i = eps * H0_i + sum_{j in N(i)} tanh(g^T [H_i || H_j]) / sqrt(d_i d_j) * H_j
/// with N(i) the in-neighbours of i and d = in-degree + 1.
struct FaConvLayer {
  Eigen::VectorXd gate;  // size 2h: [g_self; g_neighbour]
  double eps = 0.5;
};

/// Scoring and selection parameters of a pooling layer. For ASTGPool the
/// score is beta1 * (H p) / |p| + beta2 * indeg; TopKPool drops the degree
/// term; SAGPool runs one normalized graph convolution of H p.
struct AstGPoolLayer {
  Eigen::VectorXd proj;
  double beta1 = 1.0;
  double beta2 = 1.0;
  double ratio = 0.1;
};

/// GRU cell with the original reset placement: h~ = tanh(W_h x + U_h (r * h) + b_h).
struct GruParams {
  Eigen::MatrixXd w_z, u_z, w_r, u_r, w_h, u_h;
  Eigen::VectorXd b_z, b_r, b_h;

  int input_size() const { return static_cast<int>(w_z.cols()); }
  int hidden_size() const { return static_cast<int>(w_z.rows()); }
};

std::vector<int> in_degrees(int num_nodes, const std::vector<Edge>& edges);

// --- FAConv -----------------------------------------------------------------

struct FaConvTrace {
  std::vector<double> alpha;  // per edge
  std::vector<double> norm;   // 1 / sqrt(d_dst d_src) per edge
};

/// Throws ShapeError when gate size != 2 * feature width or H0 differs in shape.
Eigen::MatrixXd faconv_forward(const FaConvLayer& layer, const GraphState& state,
                               FaConvTrace* trace = nullptr);

/// Accumulates into d_h, d_h0 and d_gate given the output gradient.
void faconv_backward(const FaConvLayer& layer, const GraphState& state,
                     const FaConvTrace& trace, const Eigen::MatrixXd& d_out,
                     Eigen::MatrixXd& d_h, Eigen::MatrixXd& d_h0, Eigen::VectorXd& d_gate);

// --- pooling ----------------------------------------------------------------

/// Importance score on the current graph. A zero projection
/// vector contributes nothing (and a warning is logged).
Eigen::VectorXd astgpool_score(const AstGPoolLayer& layer, const GraphState& state);

Eigen::VectorXd pooling_scores(const AstGPoolLayer& layer, const GraphState& state,
                               PoolingMethod method);

/// Top-k selection with the root forced in: k = max(1, ceil(ratio * n)); ties
/// go to the lower node id; if the root is outside the top k, it replaces the
/// lowest-ranked kept node. Returned ids are ascending.
std::vector<int> select_top_k(const Eigen::VectorXd& scores, double ratio, int root);

struct PoolTrace {
  Eigen::VectorXd scores;
  std::vector<int> kept;
  Eigen::VectorXd gate;  // tanh(score) of kept nodes
};

/// Keeps the selected nodes, gates their features by tanh(score) and takes
/// the induced subgraph. `forced_selection` replaces the top-k choice (used
/// to hold selection fixed under finite differences).
GraphState graph_pool(const AstGPoolLayer& layer, const GraphState& state,
                      PoolingMethod method, PoolTrace* trace = nullptr,
                      const std::vector<int>* forced_selection = nullptr);

struct PoolGrads {
  Eigen::VectorXd d_proj;
  double d_beta1 = 0.0;
  double d_beta2 = 0.0;
};

/// Backward through gating and scoring; selection is treated as constant.
void graph_pool_backward(const AstGPoolLayer& layer, const GraphState& input,
                         PoolingMethod method, const PoolTrace& trace,
                         const Eigen::MatrixXd& d_pooled_h, Eigen::MatrixXd& d_input_h,
                         PoolGrads& grads);

// --- readout and fusion -----------------------------------------------------

/// Column-wise maximum; `argmax` receives the first row attaining it.
Eigen::VectorXd global_max_pool(const Eigen::MatrixXd& h, std::vector<int>* argmax = nullptr);

struct GruStepTrace {
  Eigen::VectorXd x, h_prev, z, r, h_tilde;
};

Eigen::VectorXd gru_step(const GruParams& gru, const Eigen::VectorXd& x,
                         const Eigen::VectorXd& h_prev, GruStepTrace* trace = nullptr);

/// Runs the GRU over F1..FL from a zero state and returns the last hidden
/// state. Throws ContractViolation on an empty sequence.
Eigen::VectorXd gru_fuse(const GruParams& gru, const std::vector<Eigen::VectorXd>& features,
                         std::vector<GruStepTrace>* trace = nullptr);

/// Backpropagates d(final hidden) through the whole recurrence; returns the
/// gradient for each input in order and accumulates parameter gradients.
std::vector<Eigen::VectorXd> gru_fuse_backward(const GruParams& gru,
                                               const std::vector<GruStepTrace>& trace,
                                               const Eigen::VectorXd& d_h_final,
                                               GruParams& d_gru);

}  // namespace treeseek
