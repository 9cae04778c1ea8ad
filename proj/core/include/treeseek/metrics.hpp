// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>

#include <span>
#include <string>
#include <vector>

namespace treeseek {

/// a.b / (|a| |b|); 0 (with a warning) when either vector is zero.
double cosine_sim(const Eigen::Ref<const Eigen::VectorXd>& a,
                  const Eigen::Ref<const Eigen::VectorXd>& b);

/// Mean of 1/rank over 1-based ranks. Throws ContractViolation if empty or
/// any rank < 1.
double mrr(std::span<const int> ranks);

/// Fraction of ranks <= k. Throws ContractViolation for k < 1 or empty input.
double recall_at_k(std::span<const int> ranks, int k);

/// MAM_j: mean cosine similarity between one text embedding and every row
/// of `codes`.
double mam(const Eigen::MatrixXd& codes, const Eigen::Ref<const Eigen::VectorXd>& text);

struct MamReport {
  std::vector<double> per_text;  // MAM_j, one per row of T
  std::vector<double> per_code;  // MAM'_i, one per row of C
  double mean = 0.0;
  double sd = 0.0;  // population standard deviation
  double mean_prime = 0.0;
  double sd_prime = 0.0;
};

/// Both distribution statistics over the full similarity matrix. The two
/// means coincide; a violation beyond 1e-9 throws ContractViolation.
MamReport mam_report(const Eigen::MatrixXd& codes, const Eigen::MatrixXd& texts);

/// Cosine similarity matrix, rows = codes, columns = texts.
Eigen::MatrixXd similarity_matrix(const Eigen::MatrixXd& codes, const Eigen::MatrixXd& texts);

/// 1-based rank of candidate `truth` under descending similarity, ties broken
/// by ascending candidate id.
int rank_of(std::span<const double> similarities, std::span<const std::string> ids,
            std::size_t truth);

}  // namespace treeseek
