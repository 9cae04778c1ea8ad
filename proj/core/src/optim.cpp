// SPDX-License-Identifier: Apache-2.0
#include "treeseek/optim.hpp"

#include "treeseek/error.hpp"

#include <cmath>

namespace treeseek {

void AdamW::step(GnnModel& model, const GnnModel& grads, double lr) {
  auto params = model.parameters();
  const auto g = grads.parameters();
  if (params.size() != g.size()) throw ShapeError("gradient layout does not match the model");
  std::vector<std::span<double>> p_spans;
  std::vector<std::span<const double>> g_spans;
  std::vector<bool> decay;
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (params[k].data.size() != g[k].data.size()) {
      throw ShapeError("gradient shape mismatch for " + params[k].name);
    }
    p_spans.push_back(params[k].data);
    g_spans.push_back(g[k].data);
    decay.push_back(params[k].decay);
  }
  step(std::move(p_spans), std::move(g_spans), decay, lr);
}

void AdamW::step(std::vector<std::span<double>> params,
                 std::vector<std::span<const double>> grads, const std::vector<bool>& decay,
                 double lr) {
  if (params.size() != grads.size() || params.size() != decay.size()) {
    throw ShapeError("AdamW: parameter, gradient and decay lists differ in length");
  }
  if (m_.empty()) {
    for (const auto& p : params) {
      m_.emplace_back(p.size(), 0.0);
      v_.emplace_back(p.size(), 0.0);
    }
  }
  if (m_.size() != params.size()) throw ShapeError("AdamW: parameter list changed between steps");

  ++step_;
  const double b1 = options_.beta1;
  const double b2 = options_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(step_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(step_));
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto p = params[k];
    const auto g = grads[k];
    if (p.size() != g.size() || p.size() != m_[k].size()) {
      throw ShapeError("AdamW: slot " + std::to_string(k) + " changed size");
    }
    const double shrink = decay[k] ? 1.0 - lr * options_.weight_decay : 1.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      p[i] *= shrink;
      m_[k][i] = b1 * m_[k][i] + (1.0 - b1) * g[i];
      v_[k][i] = b2 * v_[k][i] + (1.0 - b2) * g[i] * g[i];
      p[i] -= lr * (m_[k][i] / c1) / (std::sqrt(v_[k][i] / c2) + options_.eps);
    }
  }
}

}  // namespace treeseek
