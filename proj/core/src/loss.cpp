// SPDX-License-Identifier: Apache-2.0
#include "treeseek/loss.hpp"

#include "treeseek/error.hpp"
#include "treeseek/log.hpp"

#include <cmath>

namespace treeseek {
namespace {

constexpr double kMinTau = 1e-3;

Eigen::VectorXd row_norms(const Eigen::MatrixXd& m, const char* what) {
  Eigen::VectorXd n = m.rowwise().norm();
  for (Eigen::Index i = 0; i < n.size(); ++i) {
    if (!(n[i] > 0.0) || !std::isfinite(n[i])) {
      throw ContractViolation(std::string(what) + " row " + std::to_string(i) +
                              " has zero or non-finite norm");
    }
  }
  return n;
}

// Row-wise softmax, returning the mean negative log-probability of the diagonal.
double softmax_rows(const Eigen::MatrixXd& logits, Eigen::MatrixXd& probs) {
  const Eigen::Index n = logits.rows();
  probs.resize(n, logits.cols());
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double mx = logits.row(i).maxCoeff();
    const Eigen::RowVectorXd e = (logits.row(i).array() - mx).exp();
    const double s = e.sum();
    probs.row(i) = e / s;
    total += -(logits(i, i) - mx - std::log(s));
  }
  return total / static_cast<double>(n);
}

}  // namespace

LossResult contrastive_loss(const Eigen::MatrixXd& codes, const Eigen::MatrixXd& texts,
                            double tau) {
  if (codes.rows() != texts.rows() || codes.cols() != texts.cols()) {
    throw ShapeError("code and text matrices differ in shape");
  }
  const Eigen::Index n = codes.rows();
  if (n < 2) throw ContractViolation("contrastive loss needs at least two pairs");

  LossResult r;
  bool clamped = false;
  if (!(tau >= kMinTau)) {
    log::warn("temperature " + std::to_string(tau) + " clamped to 1e-3");
    tau = kMinTau;
    clamped = true;
  }
  r.tau = tau;

  const Eigen::VectorXd cn = row_norms(codes, "code");
  const Eigen::VectorXd tn = row_norms(texts, "text");
  const Eigen::MatrixXd c = cn.cwiseInverse().asDiagonal() * codes;
  const Eigen::MatrixXd t = tn.cwiseInverse().asDiagonal() * texts;

  const Eigen::MatrixXd sims = c * t.transpose();
  const Eigen::MatrixXd logits = sims / tau;

  Eigen::MatrixXd p, q;
  r.loss_code = softmax_rows(logits, p);
  r.loss_text = softmax_rows(logits.transpose(), q);
  r.loss = 0.5 * (r.loss_code + r.loss_text);

  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd d_logits =
      ((p - eye) + (q - eye).transpose()) / (2.0 * static_cast<double>(n));
  r.d_tau = clamped ? 0.0 : -(d_logits.cwiseProduct(sims)).sum() / (tau * tau);

  const Eigen::MatrixXd d_sims = d_logits / tau;
  const Eigen::MatrixXd d_c = d_sims * t;
  const Eigen::MatrixXd d_t = d_sims.transpose() * c;

  // Back through row normalization: d x = (d u - u (u . d u)) / |x|.
  r.d_code = d_c;
  r.d_text = d_t;
  for (Eigen::Index i = 0; i < n; ++i) {
    r.d_code.row(i) = (d_c.row(i) - c.row(i) * c.row(i).dot(d_c.row(i))) / cn[i];
    r.d_text.row(i) = (d_t.row(i) - t.row(i) * t.row(i).dot(d_t.row(i))) / tn[i];
  }
  return r;
}

}  // namespace treeseek
