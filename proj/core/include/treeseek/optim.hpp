// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "treeseek/model.hpp"

#include <span>
#include <vector>

namespace treeseek {

struct AdamWOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

/// Decoupled weight decay Adam. Decay multiplies the parameter by
/// (1 - lr * wd) before the moment update, and only for tensors flagged
/// `decay`.
class AdamW {
public:
  explicit AdamW(AdamWOptions options = {}) : options_(options) {}

  const AdamWOptions& options() const { return options_; }
  long step_count() const { return step_; }

  void step(GnnModel& model, const GnnModel& grads, double lr);

  /// Flat-array form used by the model overload; `decay` selects decay per slot.
  void step(std::vector<std::span<double>> params, std::vector<std::span<const double>> grads,
            const std::vector<bool>& decay, double lr);

private:
  AdamWOptions options_;
  long step_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

}  // namespace treeseek
