// SPDX-License-Identifier: Apache-2.0
#include "treeseek/metrics.hpp"

#include "treeseek/error.hpp"
#include "treeseek/log.hpp"

#include <cmath>

namespace treeseek {
namespace {

void check_ranks(std::span<const int> ranks) {
  if (ranks.empty()) throw ContractViolation("rank list is empty");
  for (int r : ranks) {
    if (r < 1) throw ContractViolation("rank " + std::to_string(r) + " is below 1");
  }
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double population_sd(const std::vector<double>& v, double mean) {
  double s = 0.0;
  for (double x : v) s += (x - mean) * (x - mean);
  return std::sqrt(s / static_cast<double>(v.size()));
}

}  // namespace

double cosine_sim(const Eigen::Ref<const Eigen::VectorXd>& a,
                  const Eigen::Ref<const Eigen::VectorXd>& b) {
  if (a.size() != b.size()) throw ShapeError("cosine_sim: vectors differ in length");
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) {
    log::warn("cosine similarity with a zero vector; returning 0");
    return 0.0;
  }
  return a.dot(b) / (na * nb);
}

double mrr(std::span<const int> ranks) {
  check_ranks(ranks);
  double s = 0.0;
  for (int r : ranks) s += 1.0 / static_cast<double>(r);
  return s / static_cast<double>(ranks.size());
}

double recall_at_k(std::span<const int> ranks, int k) {
  if (k < 1) throw ContractViolation("recall cutoff must be >= 1");
  check_ranks(ranks);
  std::size_t hits = 0;
  for (int r : ranks) hits += r <= k ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(ranks.size());
}

double mam(const Eigen::MatrixXd& codes, const Eigen::Ref<const Eigen::VectorXd>& text) {
  if (codes.rows() == 0) throw ContractViolation("MAM needs at least one code embedding");
  double s = 0.0;
  for (Eigen::Index i = 0; i < codes.rows(); ++i) s += cosine_sim(codes.row(i).transpose(), text);
  return s / static_cast<double>(codes.rows());
}

Eigen::MatrixXd similarity_matrix(const Eigen::MatrixXd& codes, const Eigen::MatrixXd& texts) {
  if (codes.cols() != texts.cols()) throw ShapeError("similarity_matrix: width mismatch");
  Eigen::MatrixXd s(codes.rows(), texts.rows());
  for (Eigen::Index i = 0; i < codes.rows(); ++i) {
    for (Eigen::Index j = 0; j < texts.rows(); ++j) {
      s(i, j) = cosine_sim(codes.row(i).transpose(), texts.row(j).transpose());
    }
  }
  return s;
}

MamReport mam_report(const Eigen::MatrixXd& codes, const Eigen::MatrixXd& texts) {
  if (codes.rows() == 0 || texts.rows() == 0) {
    throw ContractViolation("MAM report needs non-empty code and text sets");
  }
  const Eigen::MatrixXd s = similarity_matrix(codes, texts);
  MamReport r;
  r.per_text.resize(static_cast<std::size_t>(s.cols()));
  r.per_code.resize(static_cast<std::size_t>(s.rows()));
  for (Eigen::Index j = 0; j < s.cols(); ++j) r.per_text[j] = s.col(j).mean();
  for (Eigen::Index i = 0; i < s.rows(); ++i) r.per_code[i] = s.row(i).mean();
  r.mean = mean_of(r.per_text);
  r.sd = population_sd(r.per_text, r.mean);
  r.mean_prime = mean_of(r.per_code);
  r.sd_prime = population_sd(r.per_code, r.mean_prime);
  if (std::abs(r.mean - r.mean_prime) > 1e-9) {
    throw ContractViolation("MAM and MAM' means disagree");
  }
  return r;
}

int rank_of(std::span<const double> similarities, std::span<const std::string> ids,
            std::size_t truth) {
  if (similarities.size() != ids.size() || truth >= ids.size()) {
    throw ContractViolation("rank_of: bad candidate list");
  }
  const double s = similarities[truth];
  int rank = 1;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i == truth) continue;
    if (similarities[i] > s || (similarities[i] == s && ids[i] < ids[truth])) ++rank;
  }
  return rank;
}

}  // namespace treeseek
