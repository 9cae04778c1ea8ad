// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "support/fixtures.hpp"

#include "treeseek/gnn_layers.hpp"
#include "treeseek/loss.hpp"
#include "treeseek/model.hpp"

#include <map>
#include <string>
#include <vector>

namespace fixtures {

struct GradCheck {
  std::string name;
  double rel_error = 0.0;
  std::size_t size = 0;
};

namespace detail {

inline std::span<double> span_of(Eigen::MatrixXd& m) { return {m.data(), static_cast<std::size_t>(m.size())}; }
inline std::span<double> span_of(Eigen::VectorXd& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }
inline std::span<const double> cspan(const Eigen::MatrixXd& m) {
  return {m.data(), static_cast<std::size_t>(m.size())};
}
inline std::span<const double> cspan(const Eigen::VectorXd& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

inline GradCheck compare(std::string name, std::span<const double> analytic, std::span<double> params,
                         const std::function<double()>& f) {
  const auto numeric = numeric_gradient(params, f);
  return {std::move(name), relative_error(analytic, numeric), params.size()};
}

inline double weighted_sum(const Eigen::MatrixXd& w, const Eigen::MatrixXd& m) {
  return (w.array() * m.array()).sum();
}

}  // namespace detail

inline std::vector<GradCheck> faconv_checks(std::uint64_t seed) {
  SplitMix64 rng(seed);
  const int n = 8, h = 5;
  treeseek::GraphState s = random_state(rng, n, h);
  treeseek::FaConvLayer layer{random_vector(rng, 2 * h), 0.5};
  const Eigen::MatrixXd w = random_matrix(rng, n, h);

  treeseek::FaConvTrace trace;
  treeseek::faconv_forward(layer, s, &trace);
  Eigen::MatrixXd dh = Eigen::MatrixXd::Zero(n, h), dh0 = Eigen::MatrixXd::Zero(n, h);
  Eigen::VectorXd dg = Eigen::VectorXd::Zero(2 * h);
  treeseek::faconv_backward(layer, s, trace, w, dh, dh0, dg);

  const auto f = [&] { return detail::weighted_sum(w, treeseek::faconv_forward(layer, s)); };
  return {detail::compare("faconv.h", detail::cspan(dh), detail::span_of(s.h), f),
          detail::compare("faconv.h0", detail::cspan(dh0), detail::span_of(s.h0), f),
          detail::compare("faconv.g", detail::cspan(dg), detail::span_of(layer.gate), f)};
}

inline std::vector<GradCheck> pool_checks(std::uint64_t seed, treeseek::PoolingMethod method) {
  SplitMix64 rng(seed);
  const int n = 10, h = 6;
  treeseek::GraphState s = random_state(rng, n, h);
  treeseek::AstGPoolLayer layer{random_vector(rng, h), 0.7, 0.3, 0.5};

  treeseek::PoolTrace trace;
  const treeseek::GraphState pooled = treeseek::graph_pool(layer, s, method, &trace);
  const std::vector<int> kept = trace.kept;
  const Eigen::MatrixXd w = random_matrix(rng, pooled.h.rows(), h);

  Eigen::MatrixXd dh = Eigen::MatrixXd::Zero(n, h);
  treeseek::PoolGrads g;
  g.d_proj = Eigen::VectorXd::Zero(h);
  treeseek::graph_pool_backward(layer, s, method, trace, w, dh, g);

  const auto f = [&] {
    return detail::weighted_sum(w, treeseek::graph_pool(layer, s, method, nullptr, &kept).h);
  };
  const std::string tag(treeseek::to_string(method));
  std::vector<GradCheck> out{detail::compare(tag + ".h", detail::cspan(dh), detail::span_of(s.h), f),
                             detail::compare(tag + ".p", detail::cspan(g.d_proj),
                                             detail::span_of(layer.proj), f)};
  if (method == treeseek::PoolingMethod::AstGPool) {
    const double b1[1] = {g.d_beta1};
    const double b2[1] = {g.d_beta2};
    out.push_back(detail::compare(tag + ".beta1", b1, {&layer.beta1, 1}, f));
    out.push_back(detail::compare(tag + ".beta2", b2, {&layer.beta2, 1}, f));
  }
  return out;
}

inline treeseek::GruParams random_gru(SplitMix64& rng, int in, int h) {
  treeseek::GruParams g;
  for (auto* m : {&g.w_z, &g.w_r, &g.w_h}) *m = random_matrix(rng, h, in, -0.6, 0.6);
  for (auto* m : {&g.u_z, &g.u_r, &g.u_h}) *m = random_matrix(rng, h, h, -0.6, 0.6);
  for (auto* b : {&g.b_z, &g.b_r, &g.b_h}) *b = random_vector(rng, h, -0.3, 0.3);
  return g;
}

inline std::vector<GradCheck> gru_checks(std::uint64_t seed) {
  SplitMix64 rng(seed);
  const int h = 6, steps = 3;
  treeseek::GruParams gru = random_gru(rng, h, h);
  std::vector<Eigen::VectorXd> xs;
  for (int t = 0; t < steps; ++t) xs.push_back(random_vector(rng, h));
  const Eigen::VectorXd w = random_vector(rng, h);

  std::vector<treeseek::GruStepTrace> trace;
  treeseek::gru_fuse(gru, xs, &trace);
  treeseek::GruParams d = gru;
  for (auto* m : {&d.w_z, &d.w_r, &d.w_h, &d.u_z, &d.u_r, &d.u_h}) m->setZero();
  for (auto* b : {&d.b_z, &d.b_r, &d.b_h}) b->setZero();
  const auto dx = treeseek::gru_fuse_backward(gru, trace, w, d);

  const auto f = [&] { return w.dot(treeseek::gru_fuse(gru, xs)); };
  std::vector<GradCheck> out;
  const std::pair<const char*, std::pair<Eigen::MatrixXd*, Eigen::MatrixXd*>> mats[] = {
      {"gru.w_z", {&gru.w_z, &d.w_z}}, {"gru.u_z", {&gru.u_z, &d.u_z}},
      {"gru.w_r", {&gru.w_r, &d.w_r}}, {"gru.u_r", {&gru.u_r, &d.u_r}},
      {"gru.w_h", {&gru.w_h, &d.w_h}}, {"gru.u_h", {&gru.u_h, &d.u_h}}};
  for (const auto& [name, pair] : mats) {
    out.push_back(detail::compare(name, detail::cspan(*pair.second), detail::span_of(*pair.first), f));
  }
  const std::pair<const char*, std::pair<Eigen::VectorXd*, Eigen::VectorXd*>> vecs[] = {
      {"gru.b_z", {&gru.b_z, &d.b_z}}, {"gru.b_r", {&gru.b_r, &d.b_r}}, {"gru.b_h", {&gru.b_h, &d.b_h}}};
  for (const auto& [name, pair] : vecs) {
    out.push_back(detail::compare(name, detail::cspan(*pair.second), detail::span_of(*pair.first), f));
  }
  for (int t = 0; t < steps; ++t) {
    out.push_back(detail::compare("gru.x" + std::to_string(t), detail::cspan(dx[t]),
                                  detail::span_of(xs[t]), f));
  }
  return out;
}

inline std::vector<GradCheck> loss_checks(std::uint64_t seed) {
  SplitMix64 rng(seed);
  const int n = 4, d = 5;
  Eigen::MatrixXd c = random_matrix(rng, n, d), t = random_matrix(rng, n, d);
  double tau = 0.3;
  const treeseek::LossResult r = treeseek::contrastive_loss(c, t, tau);
  const auto f = [&] { return treeseek::contrastive_loss(c, t, tau).loss; };
  const double dtau[1] = {r.d_tau};
  return {detail::compare("loss.codes", detail::cspan(r.d_code), detail::span_of(c), f),
          detail::compare("loss.texts", detail::cspan(r.d_text), detail::span_of(t), f),
          detail::compare("loss.tau", dtau, {&tau, 1}, f)};
}

/// End-to-end: contrastive loss over a batch of small graphs, every model
/// parameter, with pooling selection held at the unperturbed choice.
inline std::vector<GradCheck> model_checks(std::uint64_t seed, bool mlp_adapter,
                                           treeseek::PoolingMethod method = treeseek::PoolingMethod::AstGPool) {
  SplitMix64 rng(seed);
  treeseek::ModelConfig cfg;
  cfg.type_width = 3;
  cfg.content_dim = 4;
  cfg.hidden = 6;
  cfg.depth = 3;
  cfg.ratio = 0.6;
  cfg.pooling = method;
  cfg.mlp_adapter = mlp_adapter;
  treeseek::GnnModel model = treeseek::GnnModel::create(cfg, seed);
  // Move off the initial values so no parameter sits at a special point.
  for (auto& p : model.parameters()) {
    for (double& v : p.data) v += rng.uniform(-0.1, 0.1);
  }

  const int batch = 3;
  std::vector<treeseek::CodeGraph> graphs;
  std::vector<Eigen::VectorXd> roots;
  Eigen::MatrixXd texts(batch, cfg.content_dim);
  for (int i = 0; i < batch; ++i) {
    graphs.push_back(random_graph(rng, 6 + 2 * i, cfg.type_width, cfg.content_dim));
    roots.push_back(random_unit(rng, cfg.content_dim));
    texts.row(i) = random_unit(rng, cfg.content_dim).transpose();
  }

  std::vector<treeseek::ForwardTrace> traces(batch);
  std::vector<std::vector<std::vector<int>>> selection(batch);
  Eigen::MatrixXd codes(batch, cfg.content_dim);
  for (int i = 0; i < batch; ++i) {
    codes.row(i) = treeseek::model_forward(model, graphs[i], roots[i], &traces[i]).transpose();
    selection[i] = treeseek::recorded_selection(traces[i]);
  }
  const double tau = model.tau();
  const treeseek::LossResult loss = treeseek::contrastive_loss(codes, texts, tau);
  treeseek::GnnModel grads = treeseek::GnnModel::zeros_like(model);
  for (int i = 0; i < batch; ++i) {
    treeseek::model_backward(model, traces[i], loss.d_code.row(i).transpose(), grads);
  }
  grads.log_inv_tau += loss.d_tau * -tau;

  const auto f = [&] {
    Eigen::MatrixXd c(batch, cfg.content_dim);
    for (int i = 0; i < batch; ++i) {
      treeseek::ForwardOptions opt;
      opt.forced_selection = &selection[i];
      c.row(i) = treeseek::model_forward(model, graphs[i], roots[i], nullptr, opt).transpose();
    }
    return treeseek::contrastive_loss(c, texts, model.tau()).loss;
  };

  const std::string prefix = mlp_adapter ? std::string("adapter-model.")
                                         : "model[" + std::string(treeseek::to_string(method)) + "].";
  std::vector<GradCheck> out;
  auto params = model.parameters();
  const auto g = grads.parameters();
  for (std::size_t k = 0; k < params.size(); ++k) {
    out.push_back(detail::compare(prefix + params[k].name, g[k].data, params[k].data, f));
  }
  return out;
}

inline std::vector<GradCheck> full_gradient_suite(std::uint64_t seed) {
  std::vector<GradCheck> all;
  const auto append = [&](std::vector<GradCheck> v) {
    all.insert(all.end(), std::make_move_iterator(v.begin()), std::make_move_iterator(v.end()));
  };
  append(faconv_checks(seed));
  append(pool_checks(seed + 1, treeseek::PoolingMethod::AstGPool));
  append(pool_checks(seed + 2, treeseek::PoolingMethod::TopKPool));
  append(pool_checks(seed + 3, treeseek::PoolingMethod::SagPool));
  append(gru_checks(seed + 4));
  append(loss_checks(seed + 5));
  append(model_checks(seed + 6, false));
  append(model_checks(seed + 7, false, treeseek::PoolingMethod::TopKPool));
  append(model_checks(seed + 8, false, treeseek::PoolingMethod::SagPool));
  append(model_checks(seed + 9, true));
  return all;
}

}  // namespace fixtures
