// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>

namespace treeseek {

struct LossResult {
  double loss = 0.0;
  double loss_code = 0.0;  // code -> text direction (softmax over texts)
  double loss_text = 0.0;  // text -> code direction (softmax over codes)
  Eigen::MatrixXd d_code;  // dL/dC
  Eigen::MatrixXd d_text;  // dL/dT, reported but never applied to a provider
  double d_tau = 0.0;      // dL/dtau
  double tau = 0.0;        // temperature actually used after clamping
};

/// Symmetric in-batch contrastive loss over cosine similarities:
///
///   L_code = -1/N sum_i log softmax_j(sim(c_i, t_j) / tau)_i
///   L_text = -1/N sum_i log softmax_j(sim(c_j, t_i) / tau)_i
///   L      = (L_code + L_text) / 2
///
/// Rows of C pair with rows of T. Requires N >= 2 and no zero rows; tau below
/// 1e-3 is clamped (with a warning), in which case d_tau is zero.
LossResult contrastive_loss(const Eigen::MatrixXd& codes, const Eigen::MatrixXd& texts,
                            double tau);

}  // namespace treeseek
