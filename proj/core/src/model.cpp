// SPDX-License-Identifier: Apache-2.0
#include "treeseek/model.hpp"

#include "treeseek/error.hpp"
#include "treeseek/rng.hpp"

#include <cmath>
#include <numeric>

namespace treeseek {
namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void fill_uniform(Eigen::MatrixXd& m, double limit, SplitMix64& rng) {
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = rng.uniform(-limit, limit);
  }
}

void fill_uniform(Eigen::VectorXd& v, double limit, SplitMix64& rng) {
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = rng.uniform(-limit, limit);
}

double xavier_limit(Eigen::Index fan_in, Eigen::Index fan_out) {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

template <typename View, typename Self>
std::vector<View> collect_parameters(Self& m) {
  std::vector<View> out;
  const auto add_matrix = [&](std::string name, auto& mat, bool decay = true) {
    out.push_back({std::move(name), {mat.data(), static_cast<std::size_t>(mat.size())},
                   {static_cast<int>(mat.rows()), static_cast<int>(mat.cols())}, decay});
  };
  const auto add_vector = [&](std::string name, auto& vec, bool decay = true) {
    out.push_back({std::move(name), {vec.data(), static_cast<std::size_t>(vec.size())},
                   {static_cast<int>(vec.size())}, decay});
  };
  const auto add_scalar = [&](std::string name, auto& x) {
    out.push_back({std::move(name), {&x, 1}, {}, false});
  };

  if (!m.config.mlp_adapter) {
    add_matrix("input_proj", m.input_proj);
    for (std::size_t l = 0; l < m.conv.size(); ++l) {
      add_vector("conv." + std::to_string(l) + ".g", m.conv[l].gate);
    }
    for (std::size_t l = 0; l < m.pool.size(); ++l) {
      const std::string p = "pool." + std::to_string(l) + ".";
      add_vector(p + "p", m.pool[l].proj);
      add_scalar(p + "beta1", m.pool[l].beta1);
      add_scalar(p + "beta2", m.pool[l].beta2);
    }
    add_matrix("gru.w_z", m.gru.w_z);
    add_matrix("gru.u_z", m.gru.u_z);
    add_vector("gru.b_z", m.gru.b_z);
    add_matrix("gru.w_r", m.gru.w_r);
    add_matrix("gru.u_r", m.gru.u_r);
    add_vector("gru.b_r", m.gru.b_r);
    add_matrix("gru.w_h", m.gru.w_h);
    add_matrix("gru.u_h", m.gru.u_h);
    add_vector("gru.b_h", m.gru.b_h);
    add_matrix("out_proj", m.output_proj);
  } else {
    add_matrix("adapter.w1", m.adapter->w1);
    add_vector("adapter.b1", m.adapter->b1);
    add_matrix("adapter.w2", m.adapter->w2);
    add_vector("adapter.b2", m.adapter->b2);
  }
  add_scalar("lambda", m.lambda);
  add_scalar("tau", m.log_inv_tau);
  return out;
}

void validate_config(const ModelConfig& c) {
  if (c.content_dim <= 0) throw ContractViolation("model content_dim must be positive");
  if (c.type_width < 0) throw ContractViolation("model type_width must be >= 0");
  if (c.output_size() != c.content_dim) {
    throw ContractViolation("model output dimension must equal the text embedding dimension");
  }
  if (c.depth < 1) throw ContractViolation("model depth must be >= 1");
  if (!(c.ratio > 0.0 && c.ratio <= 1.0)) throw ContractViolation("pooling ratio must be in (0, 1]");
  if (!(c.eps >= 0.0 && c.eps <= 1.0)) throw ContractViolation("FAConv eps must be in [0, 1]");
  if (!(c.initial_sigma_lambda > 0.0 && c.initial_sigma_lambda < 1.0)) {
    throw ContractViolation("initial sigma(lambda) must be in (0, 1)");
  }
  if (!(c.initial_tau >= GnnModel::kMinTau)) throw ContractViolation("initial tau too small");
}

EmbeddingVector blend(const GnnModel& model, const Eigen::VectorXd& gnn_out,
                      const EmbeddingVector& root_embedding, ForwardTrace* trace) {
  const double s = model.sigma_lambda();
  Eigen::VectorXd blended = s * gnn_out + (1.0 - s) * root_embedding;
  const double norm = blended.norm();
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    throw ContractViolation("model output has zero or non-finite norm");
  }
  EmbeddingVector out = blended / norm;
  if (trace) {
    trace->gnn_out = gnn_out;
    trace->blended = std::move(blended);
    trace->output = out;
    trace->root_embedding = root_embedding;
  }
  return out;
}

}  // namespace

GnnModel GnnModel::create(const ModelConfig& config, std::uint64_t seed) {
  validate_config(config);
  GnnModel m;
  m.config = config;
  SplitMix64 rng(seed);
  const Eigen::Index h = config.hidden_size();
  const Eigen::Index d = config.content_dim;
  const Eigen::Index out = config.output_size();

  if (config.mlp_adapter) {
    MlpAdapter a;
    a.w1 = Eigen::MatrixXd::Zero(2 * d, d);
    a.w1.topRows(d) = Eigen::MatrixXd::Identity(d, d);
    a.w1.bottomRows(d) = -Eigen::MatrixXd::Identity(d, d);
    a.b1 = Eigen::VectorXd::Zero(2 * d);
    a.w2 = Eigen::MatrixXd::Zero(out, 2 * d);
    a.w2.leftCols(d) = Eigen::MatrixXd::Identity(out, d);
    a.w2.rightCols(d) = -Eigen::MatrixXd::Identity(out, d);
    a.b2 = Eigen::VectorXd::Zero(out);
    m.adapter = std::move(a);
  } else {
    const Eigen::Index f = config.input_width();
    m.input_proj.resize(h, f);
    fill_uniform(m.input_proj, xavier_limit(f, h), rng);
    m.conv.resize(config.depth);
    m.pool.resize(config.depth);
    for (int l = 0; l < config.depth; ++l) {
      m.conv[l].eps = config.eps;
      m.conv[l].gate.resize(2 * h);
      fill_uniform(m.conv[l].gate, xavier_limit(2 * h, 1), rng);
      m.pool[l].ratio = config.ratio;
      m.pool[l].proj.resize(h);
      fill_uniform(m.pool[l].proj, 1.0 / std::sqrt(static_cast<double>(h)), rng);
      m.pool[l].beta1 = 1.0;
      m.pool[l].beta2 = 1.0;
    }
    const double k = 1.0 / std::sqrt(static_cast<double>(h));
    for (auto* w : {&m.gru.w_z, &m.gru.w_r, &m.gru.w_h, &m.gru.u_z, &m.gru.u_r, &m.gru.u_h}) {
      w->resize(h, h);
      fill_uniform(*w, k, rng);
    }
    for (auto* b : {&m.gru.b_z, &m.gru.b_r, &m.gru.b_h}) {
      b->resize(h);
      fill_uniform(*b, k, rng);
    }
    m.output_proj.resize(out, h);
    fill_uniform(m.output_proj, xavier_limit(h, out), rng);
  }
  const double s = config.initial_sigma_lambda;
  m.lambda = std::log(s / (1.0 - s));
  m.log_inv_tau = std::log(1.0 / config.initial_tau);
  return m;
}

GnnModel GnnModel::zeros_like(const GnnModel& model) {
  GnnModel z = model;
  z.set_zero();
  return z;
}

double GnnModel::sigma_lambda() const { return sigmoid(lambda); }

double GnnModel::tau() const { return std::max(std::exp(-log_inv_tau), kMinTau); }

std::vector<ParamView> GnnModel::parameters() { return collect_parameters<ParamView>(*this); }

std::vector<ConstParamView> GnnModel::parameters() const {
  return collect_parameters<ConstParamView>(*this);
}

std::size_t GnnModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : parameters()) n += p.data.size();
  return n;
}

void GnnModel::set_zero() {
  for (auto& p : parameters()) std::fill(p.data.begin(), p.data.end(), 0.0);
}

GnnModel& GnnModel::operator+=(const GnnModel& other) {
  auto mine = parameters();
  const auto theirs = other.parameters();
  if (mine.size() != theirs.size()) throw ShapeError("adding models of different layouts");
  for (std::size_t k = 0; k < mine.size(); ++k) {
    if (mine[k].data.size() != theirs[k].data.size()) {
      throw ShapeError("adding models with different shapes for " + mine[k].name);
    }
    for (std::size_t i = 0; i < mine[k].data.size(); ++i) mine[k].data[i] += theirs[k].data[i];
  }
  return *this;
}

EmbeddingVector mlp_adapter_forward(const GnnModel& model, const EmbeddingVector& root_embedding,
                                    ForwardTrace* trace) {
  if (!model.adapter) throw ContractViolation("model has no MLP adapter");
  const auto& a = *model.adapter;
  if (root_embedding.size() != a.w1.cols()) throw ShapeError("root embedding width mismatch");
  Eigen::VectorXd pre = a.w1 * root_embedding + a.b1;
  const Eigen::VectorXd hidden = pre.cwiseMax(0.0);
  const Eigen::VectorXd out = a.w2 * hidden + a.b2;
  if (trace) trace->mlp_pre = std::move(pre);
  return blend(model, out, root_embedding, trace);
}

EmbeddingVector model_forward(const GnnModel& model, const CodeGraph& graph,
                              const EmbeddingVector& root_embedding, ForwardTrace* trace,
                              const ForwardOptions& options) {
  const ModelConfig& cfg = model.config;
  if (root_embedding.size() != cfg.output_size()) {
    throw ShapeError("root embedding has dimension " + std::to_string(root_embedding.size()) +
                     ", model expects " + std::to_string(cfg.output_size()));
  }
  if (cfg.mlp_adapter) return mlp_adapter_forward(model, root_embedding, trace);

  if (graph.features.cols() != cfg.input_width()) {
    throw ShapeError("graph feature width " + std::to_string(graph.features.cols()) +
                     " does not match model input width " + std::to_string(cfg.input_width()));
  }
  if (graph.num_nodes <= 0 || graph.features.rows() != graph.num_nodes) {
    throw ShapeError("graph has no nodes or inconsistent feature rows");
  }

  Eigen::MatrixXd projected = graph.features * model.input_proj.transpose();
  GraphState state;
  state.h = projected.cwiseMax(0.0);
  state.h0 = state.h;
  state.edges = graph.edges;
  state.root = graph.root;
  state.origin.resize(graph.num_nodes);
  std::iota(state.origin.begin(), state.origin.end(), 0);

  std::vector<Eigen::VectorXd> readouts;
  readouts.reserve(cfg.depth);
  if (trace) {
    trace->depths.assign(cfg.depth, {});
    trace->input_features = graph.features;
    trace->projected = std::move(projected);
  }

  for (int l = 0; l < cfg.depth; ++l) {
    DepthTrace local;
    DepthTrace& dt = trace ? trace->depths[l] : local;
    FaConvTrace* conv_trace = trace ? &dt.conv : nullptr;

    Eigen::MatrixXd conv_out = faconv_forward(model.conv[l], state, conv_trace);
    readouts.push_back(global_max_pool(conv_out, trace ? &dt.argmax : nullptr));

    GraphState conv_state;
    conv_state.h = std::move(conv_out);
    conv_state.h0 = state.h0;
    conv_state.edges = state.edges;
    conv_state.root = state.root;
    conv_state.origin = state.origin;

    if (trace) dt.input = std::move(state);

    if (l + 1 < cfg.depth || cfg.pool_last) {
      const std::vector<int>* forced = nullptr;
      if (options.forced_selection && static_cast<std::size_t>(l) < options.forced_selection->size() &&
          !(*options.forced_selection)[l].empty()) {
        forced = &(*options.forced_selection)[l];
      }
      state = graph_pool(model.pool[l], conv_state, cfg.pooling, trace ? &dt.pool : nullptr, forced);
      if (trace) dt.pooled = true;
    } else {
      state = conv_state;
    }
    if (trace) dt.conv_state = std::move(conv_state);
  }

  Eigen::VectorXd fused = gru_fuse(model.gru, readouts, trace ? &trace->gru : nullptr);
  const Eigen::VectorXd gnn_out = model.output_proj * fused;
  if (trace) {
    trace->readouts = std::move(readouts);
    trace->fused = std::move(fused);
  }
  return blend(model, gnn_out, root_embedding, trace);
}

void model_backward(const GnnModel& model, const ForwardTrace& trace,
                    const EmbeddingVector& d_output, GnnModel& grads) {
  const ModelConfig& cfg = model.config;
  const Eigen::VectorXd& y = trace.output;
  const double norm = trace.blended.norm();
  const Eigen::VectorXd d_blended = (d_output - y * y.dot(d_output)) / norm;

  const double s = model.sigma_lambda();
  const Eigen::VectorXd d_out = s * d_blended;
  grads.lambda += (trace.gnn_out - trace.root_embedding).dot(d_blended) * s * (1.0 - s);

  if (cfg.mlp_adapter) {
    const auto& a = *model.adapter;
    auto& ga = *grads.adapter;
    const Eigen::VectorXd hidden = trace.mlp_pre.cwiseMax(0.0);
    ga.w2 += d_out * hidden.transpose();
    ga.b2 += d_out;
    Eigen::VectorXd d_pre = a.w2.transpose() * d_out;
    for (Eigen::Index i = 0; i < d_pre.size(); ++i) {
      if (trace.mlp_pre[i] <= 0.0) d_pre[i] = 0.0;
    }
    ga.w1 += d_pre * trace.root_embedding.transpose();
    ga.b1 += d_pre;
    return;
  }

  grads.output_proj += d_out * trace.fused.transpose();
  const Eigen::VectorXd d_fused = model.output_proj.transpose() * d_out;
  const std::vector<Eigen::VectorXd> d_readouts =
      gru_fuse_backward(model.gru, trace.gru, d_fused, grads.gru);

  const Eigen::Index h = cfg.hidden_size();
  const Eigen::Index n0 = trace.projected.rows();
  Eigen::MatrixXd d_h0_total = Eigen::MatrixXd::Zero(n0, h);
  Eigen::MatrixXd d_next;  // gradient w.r.t. the state leaving the current depth

  for (int l = cfg.depth - 1; l >= 0; --l) {
    const DepthTrace& dt = trace.depths[l];
    const Eigen::Index n = dt.input.h.rows();
    Eigen::MatrixXd d_conv_out = Eigen::MatrixXd::Zero(n, h);

    if (dt.pooled) {
      const Eigen::Index m = static_cast<Eigen::Index>(dt.pool.kept.size());
      if (d_next.size() == 0) d_next = Eigen::MatrixXd::Zero(m, h);
      PoolGrads pg;
      pg.d_proj = Eigen::VectorXd::Zero(h);
      graph_pool_backward(model.pool[l], dt.conv_state, cfg.pooling, dt.pool, d_next, d_conv_out, pg);
      grads.pool[l].proj += pg.d_proj;
      grads.pool[l].beta1 += pg.d_beta1;
      grads.pool[l].beta2 += pg.d_beta2;
    } else if (d_next.size() != 0) {
      d_conv_out += d_next;
    }

    for (Eigen::Index k = 0; k < h; ++k) {
      d_conv_out(dt.argmax[static_cast<std::size_t>(k)], k) += d_readouts[l][k];
    }

    Eigen::MatrixXd d_in = Eigen::MatrixXd::Zero(n, h);
    Eigen::MatrixXd d_in_h0 = Eigen::MatrixXd::Zero(n, h);
    faconv_backward(model.conv[l], dt.input, dt.conv, d_conv_out, d_in, d_in_h0,
                    grads.conv[l].gate);
    for (Eigen::Index i = 0; i < n; ++i) {
      d_h0_total.row(dt.input.origin[static_cast<std::size_t>(i)]) += d_in_h0.row(i);
    }
    d_next = std::move(d_in);
  }

  Eigen::MatrixXd d_projected = d_next + d_h0_total;
  for (Eigen::Index c = 0; c < d_projected.cols(); ++c) {
    for (Eigen::Index r = 0; r < d_projected.rows(); ++r) {
      if (trace.projected(r, c) <= 0.0) d_projected(r, c) = 0.0;
    }
  }
  grads.input_proj += d_projected.transpose() * trace.input_features;
}

std::vector<std::vector<int>> recorded_selection(const ForwardTrace& trace) {
  std::vector<std::vector<int>> out;
  out.reserve(trace.depths.size());
  for (const auto& dt : trace.depths) out.push_back(dt.pooled ? dt.pool.kept : std::vector<int>{});
  return out;
}

}  // namespace treeseek
