// SPDX-License-Identifier: Apache-2.0
#include "treeseek/gnn_layers.hpp"

#include "treeseek/error.hpp"
#include "treeseek/log.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <numeric>
#include <string>

namespace treeseek {
namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Eigen::VectorXd sigmoid(const Eigen::VectorXd& x) {
  return x.unaryExpr([](double v) { return sigmoid(v); });
}

void warn_zero_projection() {
  static std::atomic<bool> warned{false};
  if (!warned.exchange(true)) {
    log::warn("pooling projection vector has zero norm; its score term is dropped");
  }
}

// Per-edge 1 / sqrt(d_i d_j) with d = in-degree + 1 (self loop included).
double sym_norm(const std::vector<int>& indeg, int i, int j) {
  return 1.0 / std::sqrt(static_cast<double>(indeg[i] + 1) * static_cast<double>(indeg[j] + 1));
}

}  // namespace

std::string_view to_string(PoolingMethod method) {
  switch (method) {
    case PoolingMethod::AstGPool: return "astgpool";
    case PoolingMethod::TopKPool: return "topkpool";
    case PoolingMethod::SagPool: return "sagpool";
  }
  return "unknown";
}

PoolingMethod parse_pooling_method(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "astgpool" || lower == "astg") return PoolingMethod::AstGPool;
  if (lower == "topkpool" || lower == "topk") return PoolingMethod::TopKPool;
  if (lower == "sagpool" || lower == "sag") return PoolingMethod::SagPool;
  throw UsageError("unknown pooling method '" + std::string(name) + "'");
}

std::vector<int> in_degrees(int num_nodes, const std::vector<Edge>& edges) {
  std::vector<int> deg(num_nodes, 0);
  for (const auto& e : edges) ++deg.at(e.dst);
  return deg;
}

// --- FAConv -----------------------------------------------------------------

Eigen::MatrixXd faconv_forward(const FaConvLayer& layer, const GraphState& state,
                               FaConvTrace* trace) {
  const Eigen::Index h = state.h.cols();
  if (layer.gate.size() != 2 * h) {
    throw ShapeError("FAConv gate has size " + std::to_string(layer.gate.size()) +
                     ", expected " + std::to_string(2 * h));
  }
  if (state.h0.rows() != state.h.rows() || state.h0.cols() != h) {
    throw ShapeError("FAConv initial features do not match the node features");
  }
  const int n = state.num_nodes();
  const auto indeg = in_degrees(n, state.edges);
  const auto g_self = layer.gate.head(h);
  const auto g_nbr = layer.gate.tail(h);

  Eigen::MatrixXd out = layer.eps * state.h0;
  if (trace) {
    trace->alpha.assign(state.edges.size(), 0.0);
    trace->norm.assign(state.edges.size(), 0.0);
  }
  for (std::size_t k = 0; k < state.edges.size(); ++k) {
    const int i = state.edges[k].dst;
    const int j = state.edges[k].src;
    const double alpha = std::tanh(state.h.row(i).dot(g_self) + state.h.row(j).dot(g_nbr));
    const double norm = sym_norm(indeg, i, j);
    out.row(i) += (alpha * norm) * state.h.row(j);
    if (trace) {
      trace->alpha[k] = alpha;
      trace->norm[k] = norm;
    }
  }
  return out;
}

void faconv_backward(const FaConvLayer& layer, const GraphState& state, const FaConvTrace& trace,
                     const Eigen::MatrixXd& d_out, Eigen::MatrixXd& d_h, Eigen::MatrixXd& d_h0,
                     Eigen::VectorXd& d_gate) {
  const Eigen::Index h = state.h.cols();
  const auto g_self = layer.gate.head(h);
  const auto g_nbr = layer.gate.tail(h);

  d_h0 += layer.eps * d_out;
  for (std::size_t k = 0; k < state.edges.size(); ++k) {
    const int i = state.edges[k].dst;
    const int j = state.edges[k].src;
    const double alpha = trace.alpha[k];
    const double norm = trace.norm[k];
    d_h.row(j) += (alpha * norm) * d_out.row(i);
    const double d_alpha = norm * d_out.row(i).dot(state.h.row(j));
    const double d_pre = d_alpha * (1.0 - alpha * alpha);
    d_gate.head(h) += d_pre * state.h.row(i).transpose();
    d_gate.tail(h) += d_pre * state.h.row(j).transpose();
    d_h.row(i) += d_pre * g_self.transpose();
    d_h.row(j) += d_pre * g_nbr.transpose();
  }
}

// --- pooling ----------------------------------------------------------------

Eigen::VectorXd astgpool_score(const AstGPoolLayer& layer, const GraphState& state) {
  const int n = state.num_nodes();
  if (layer.proj.size() != state.h.cols()) {
    throw ShapeError("pooling projection has size " + std::to_string(layer.proj.size()) +
                     ", expected " + std::to_string(state.h.cols()));
  }
  const auto indeg = in_degrees(n, state.edges);
  Eigen::VectorXd score = Eigen::VectorXd::Zero(n);
  const double pn = layer.proj.norm();
  if (pn > 0.0) {
    score = layer.beta1 * (state.h * layer.proj) / pn;
  } else {
    warn_zero_projection();
  }
  for (int i = 0; i < n; ++i) score[i] += layer.beta2 * indeg[i];
  return score;
}

Eigen::VectorXd pooling_scores(const AstGPoolLayer& layer, const GraphState& state,
                               PoolingMethod method) {
  switch (method) {
    case PoolingMethod::AstGPool:
      return astgpool_score(layer, state);
    case PoolingMethod::TopKPool: {
      AstGPoolLayer feature_only = layer;
      feature_only.beta1 = 1.0;
      feature_only.beta2 = 0.0;
      return astgpool_score(feature_only, state);
    }
    case PoolingMethod::SagPool: {
      if (layer.proj.size() != state.h.cols()) throw ShapeError("pooling projection size");
      const int n = state.num_nodes();
      const auto indeg = in_degrees(n, state.edges);
      const Eigen::VectorXd hp = state.h * layer.proj;
      Eigen::VectorXd score(n);
      for (int i = 0; i < n; ++i) score[i] = hp[i] / static_cast<double>(indeg[i] + 1);
      for (const auto& e : state.edges) score[e.dst] += hp[e.src] * sym_norm(indeg, e.dst, e.src);
      return score;
    }
  }
  throw ContractViolation("unhandled pooling method");
}

std::vector<int> select_top_k(const Eigen::VectorXd& scores, double ratio, int root) {
  const int n = static_cast<int>(scores.size());
  if (!(ratio > 0.0 && ratio <= 1.0)) {
    throw ContractViolation("pooling ratio must lie in (0, 1], got " + std::to_string(ratio));
  }
  if (n == 0) return {};
  if (root < 0 || root >= n) throw ContractViolation("pooling root out of range");

  // The epsilon keeps products like 0.7 * 10 = 7.000000000000001 from rounding up.
  int k = static_cast<int>(std::ceil(ratio * n - 1e-9));
  k = std::clamp(k, 1, n);

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  });
  std::vector<int> kept(order.begin(), order.begin() + k);
  if (std::find(kept.begin(), kept.end(), root) == kept.end()) kept.back() = root;
  std::sort(kept.begin(), kept.end());
  return kept;
}

GraphState graph_pool(const AstGPoolLayer& layer, const GraphState& state, PoolingMethod method,
                      PoolTrace* trace, const std::vector<int>* forced_selection) {
  const Eigen::VectorXd scores = pooling_scores(layer, state, method);
  std::vector<int> kept = forced_selection ? *forced_selection
                                           : select_top_k(scores, layer.ratio, state.root);
  if (forced_selection) {
    std::sort(kept.begin(), kept.end());
    if (std::find(kept.begin(), kept.end(), state.root) == kept.end()) {
      throw ContractViolation("forced selection drops the root");
    }
  }

  const int n = state.num_nodes();
  std::vector<int> remap(n, -1);
  for (std::size_t r = 0; r < kept.size(); ++r) {
    if (kept[r] < 0 || kept[r] >= n) throw ContractViolation("selected node out of range");
    remap[kept[r]] = static_cast<int>(r);
  }

  const auto m = static_cast<Eigen::Index>(kept.size());
  GraphState out;
  out.h.resize(m, state.h.cols());
  out.h0.resize(m, state.h0.cols());
  out.origin.resize(kept.size());
  Eigen::VectorXd gate(m);
  for (Eigen::Index r = 0; r < m; ++r) {
    const int i = kept[r];
    gate[r] = std::tanh(scores[i]);
    out.h.row(r) = gate[r] * state.h.row(i);
    out.h0.row(r) = state.h0.row(i);
    out.origin[r] = state.origin.empty() ? i : state.origin[i];
  }
  for (const auto& e : state.edges) {
    if (remap[e.src] >= 0 && remap[e.dst] >= 0) out.edges.push_back({remap[e.src], remap[e.dst]});
  }
  out.root = remap[state.root];

  if (trace) {
    trace->scores = scores;
    trace->kept = std::move(kept);
    trace->gate = std::move(gate);
  }
  return out;
}

void graph_pool_backward(const AstGPoolLayer& layer, const GraphState& input, PoolingMethod method,
                         const PoolTrace& trace, const Eigen::MatrixXd& d_pooled_h,
                         Eigen::MatrixXd& d_input_h, PoolGrads& grads) {
  const int n = input.num_nodes();
  const Eigen::Index h = input.h.cols();
  if (grads.d_proj.size() != h) grads.d_proj = Eigen::VectorXd::Zero(h);

  Eigen::VectorXd d_score = Eigen::VectorXd::Zero(n);
  for (std::size_t r = 0; r < trace.kept.size(); ++r) {
    const int i = trace.kept[r];
    const double g = trace.gate[static_cast<Eigen::Index>(r)];
    const auto d_row = d_pooled_h.row(static_cast<Eigen::Index>(r));
    d_input_h.row(i) += g * d_row;
    d_score[i] = (1.0 - g * g) * input.h.row(i).dot(d_row);
  }

  const auto indeg = in_degrees(n, input.edges);
  switch (method) {
    case PoolingMethod::AstGPool:
    case PoolingMethod::TopKPool: {
      const bool ast = method == PoolingMethod::AstGPool;
      const double beta1 = ast ? layer.beta1 : 1.0;
      const double pn = layer.proj.norm();
      if (pn > 0.0) {
        const Eigen::VectorXd u = layer.proj / pn;
        for (int i = 0; i < n; ++i) {
          if (d_score[i] == 0.0) continue;
          const double proj = input.h.row(i).dot(u);
          if (ast) grads.d_beta1 += d_score[i] * proj;
          d_input_h.row(i) += (d_score[i] * beta1) * u.transpose();
          grads.d_proj += (d_score[i] * beta1 / pn) * (input.h.row(i).transpose() - proj * u);
        }
      }
      if (ast) {
        for (int i = 0; i < n; ++i) grads.d_beta2 += d_score[i] * indeg[i];
      }
      break;
    }
    case PoolingMethod::SagPool: {
      for (int i = 0; i < n; ++i) {
        if (d_score[i] == 0.0) continue;
        const double c = d_score[i] / static_cast<double>(indeg[i] + 1);
        grads.d_proj += c * input.h.row(i).transpose();
        d_input_h.row(i) += c * layer.proj.transpose();
      }
      for (const auto& e : input.edges) {
        if (d_score[e.dst] == 0.0) continue;
        const double c = d_score[e.dst] * sym_norm(indeg, e.dst, e.src);
        grads.d_proj += c * input.h.row(e.src).transpose();
        d_input_h.row(e.src) += c * layer.proj.transpose();
      }
      break;
    }
  }
}

// --- readout and fusion -----------------------------------------------------

Eigen::VectorXd global_max_pool(const Eigen::MatrixXd& h, std::vector<int>* argmax) {
  if (h.rows() == 0) throw ContractViolation("global max pool over an empty graph");
  Eigen::VectorXd out(h.cols());
  if (argmax) argmax->assign(static_cast<std::size_t>(h.cols()), 0);
  for (Eigen::Index k = 0; k < h.cols(); ++k) {
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < h.rows(); ++i) {
      if (h(i, k) > h(best, k)) best = i;
    }
    out[k] = h(best, k);
    if (argmax) (*argmax)[static_cast<std::size_t>(k)] = static_cast<int>(best);
  }
  return out;
}

Eigen::VectorXd gru_step(const GruParams& gru, const Eigen::VectorXd& x,
                         const Eigen::VectorXd& h_prev, GruStepTrace* trace) {
  if (x.size() != gru.input_size() || h_prev.size() != gru.hidden_size()) {
    throw ShapeError("GRU input or state has the wrong size");
  }
  const Eigen::VectorXd z = sigmoid(gru.w_z * x + gru.u_z * h_prev + gru.b_z);
  const Eigen::VectorXd r = sigmoid(gru.w_r * x + gru.u_r * h_prev + gru.b_r);
  const Eigen::VectorXd h_tilde =
      (gru.w_h * x + gru.u_h * r.cwiseProduct(h_prev) + gru.b_h).array().tanh().matrix();
  Eigen::VectorXd h_next =
      (Eigen::VectorXd::Ones(z.size()) - z).cwiseProduct(h_prev) + z.cwiseProduct(h_tilde);
  if (trace) *trace = {x, h_prev, z, r, h_tilde};
  return h_next;
}

Eigen::VectorXd gru_fuse(const GruParams& gru, const std::vector<Eigen::VectorXd>& features,
                         std::vector<GruStepTrace>* trace) {
  if (features.empty()) throw ContractViolation("GRU fusion needs at least one feature vector");
  Eigen::VectorXd h = Eigen::VectorXd::Zero(gru.hidden_size());
  if (trace) trace->assign(features.size(), {});
  for (std::size_t t = 0; t < features.size(); ++t) {
    h = gru_step(gru, features[t], h, trace ? &(*trace)[t] : nullptr);
  }
  return h;
}

std::vector<Eigen::VectorXd> gru_fuse_backward(const GruParams& gru,
                                               const std::vector<GruStepTrace>& trace,
                                               const Eigen::VectorXd& d_h_final, GruParams& d_gru) {
  std::vector<Eigen::VectorXd> d_inputs(trace.size());
  Eigen::VectorXd d_h = d_h_final;
  for (std::size_t step = trace.size(); step-- > 0;) {
    const auto& s = trace[step];
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(s.z.size());

    const Eigen::VectorXd d_z = d_h.cwiseProduct(s.h_tilde - s.h_prev);
    const Eigen::VectorXd d_tilde = d_h.cwiseProduct(s.z);
    Eigen::VectorXd d_prev = d_h.cwiseProduct(ones - s.z);

    const Eigen::VectorXd a_h = d_tilde.cwiseProduct(ones - s.h_tilde.cwiseProduct(s.h_tilde));
    const Eigen::VectorXd rh = s.r.cwiseProduct(s.h_prev);
    d_gru.w_h += a_h * s.x.transpose();
    d_gru.u_h += a_h * rh.transpose();
    d_gru.b_h += a_h;
    const Eigen::VectorXd d_rh = gru.u_h.transpose() * a_h;
    const Eigen::VectorXd d_r = d_rh.cwiseProduct(s.h_prev);
    d_prev += d_rh.cwiseProduct(s.r);
    Eigen::VectorXd d_x = gru.w_h.transpose() * a_h;

    const Eigen::VectorXd a_z = d_z.cwiseProduct(s.z.cwiseProduct(ones - s.z));
    d_gru.w_z += a_z * s.x.transpose();
    d_gru.u_z += a_z * s.h_prev.transpose();
    d_gru.b_z += a_z;
    d_x += gru.w_z.transpose() * a_z;
    d_prev += gru.u_z.transpose() * a_z;

    const Eigen::VectorXd a_r = d_r.cwiseProduct(s.r.cwiseProduct(ones - s.r));
    d_gru.w_r += a_r * s.x.transpose();
    d_gru.u_r += a_r * s.h_prev.transpose();
    d_gru.b_r += a_r;
    d_x += gru.w_r.transpose() * a_r;
    d_prev += gru.u_r.transpose() * a_r;

    d_inputs[step] = std::move(d_x);
    d_h = std::move(d_prev);
  }
  return d_inputs;
}

}  // namespace treeseek
