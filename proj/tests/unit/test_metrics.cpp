// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "support/fixtures.hpp"
#include "treeseek/error.hpp"
#include "treeseek/metrics.hpp"

#include <cmath>
#include <numeric>

using namespace treeseek;

namespace {

double population_sd(const std::vector<double>& v) {
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double acc = 0.0;
  for (double x : v) acc += (x - mean) * (x - mean);
  return std::sqrt(acc / static_cast<double>(v.size()));
}

}  // namespace

TEST_SUITE("metrics") {
  TEST_CASE("cosine similarity") {
    const Eigen::Vector3d e1(1, 0, 0), e2(0, 1, 0);
    CHECK(cosine_sim(e1, e1) == 1.0);
    CHECK(cosine_sim(e1, e2) == 0.0);
    CHECK(cosine_sim(e1, Eigen::Vector3d::Zero()) == 0.0);
    CHECK_THROWS_AS(cosine_sim(e1, Eigen::Vector2d(1, 0)), ShapeError);
    SplitMix64 rng(1);
    for (int i = 0; i < 20; ++i) {
      const Eigen::VectorXd a = fixtures::random_vector(rng, 7), b = fixtures::random_vector(rng, 7);
      CHECK(std::abs(cosine_sim(a, b) - oracle::cosine(fixtures::to_vec(a), fixtures::to_vec(b))) < 1e-14);
    }
  }

  TEST_CASE("reciprocal rank and recall") {
    const std::vector<int> ones{1, 1, 1}, mixed{1, 2, 4}, r{1, 2, 1};
    CHECK(mrr(ones) == 1.0);
    CHECK(mrr(mixed) == doctest::Approx(7.0 / 12.0).epsilon(1e-15));
    CHECK(recall_at_k(r, 1) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(recall_at_k(mixed, 4) == 1.0);
    CHECK_THROWS_AS(mrr(std::vector<int>{}), ContractViolation);
    CHECK_THROWS_AS(mrr(std::vector<int>{0}), ContractViolation);
    CHECK_THROWS_AS(recall_at_k(r, 0), ContractViolation);
  }

  TEST_CASE("recall at one never exceeds MRR") {
    SplitMix64 rng(2);
    for (int trial = 0; trial < 200; ++trial) {
      std::vector<int> ranks(1 + rng.below(30));
      for (int& x : ranks) x = 1 + static_cast<int>(rng.below(10));
      const double m = mrr(ranks);
      CHECK(recall_at_k(ranks, 1) <= m);
      CHECK(m <= 1.0);
      for (int k = 1; k < 10; ++k) CHECK(recall_at_k(ranks, k) <= recall_at_k(ranks, k + 1));
    }
  }

  TEST_CASE("rank with ties follows id order") {
    SplitMix64 rng(3);
    for (int trial = 0; trial < 200; ++trial) {
      const std::size_t n = 1 + rng.below(15);
      std::vector<double> sims(n);
      std::vector<std::string> ids(n);
      for (std::size_t i = 0; i < n; ++i) {
        sims[i] = 0.5 * static_cast<double>(rng.below(3));
        ids[i] = "id" + std::to_string(rng.below(1000)) + "-" + std::to_string(i);
      }
      const std::size_t truth = rng.below(n);
      CHECK(rank_of(sims, ids, truth) == oracle::brute_rank(sims, ids, truth));
    }
    const std::vector<double> tie{0.3, 0.3, 0.3};
    const std::vector<std::string> ids{"c", "a", "b"};
    CHECK(rank_of(tie, ids, 0) == 3);
    CHECK(rank_of(tie, ids, 1) == 1);
  }

  TEST_CASE("MAM values") {
    Eigen::MatrixXd codes(3, 2);
    codes << 0, 1, 0, -1, 0, 2;
    CHECK(mam(codes, Eigen::Vector2d(1, 0)) == 0.0);
    // Similarities 0.2, 0, -0.2.
    const double a = 0.2, b = std::sqrt(1 - a * a);
    Eigen::MatrixXd sym(3, 2);
    sym << a, b, 0, 1, -a, b;
    CHECK(std::abs(mam(sym, Eigen::Vector2d(1, 0))) < 1e-15);
  }

  TEST_CASE("MAM report matches the reference") {
    SplitMix64 rng(4);
    const Eigen::MatrixXd c = fixtures::random_matrix(rng, 5, 4);
    const Eigen::MatrixXd t = fixtures::random_matrix(rng, 3, 4);
    const MamReport r = mam_report(c, t);
    const auto [per_text, per_code] = oracle::mam(fixtures::to_mat(c), fixtures::to_mat(t));
    CHECK(fixtures::max_abs_diff(r.per_text, per_text) < 1e-14);
    CHECK(fixtures::max_abs_diff(r.per_code, per_code) < 1e-14);
    CHECK(std::abs(r.mean - r.mean_prime) < 1e-12);
    CHECK(r.sd == doctest::Approx(population_sd(per_text)).epsilon(1e-12));
    CHECK(r.sd_prime == doctest::Approx(population_sd(per_code)).epsilon(1e-12));
    for (double v : r.per_text) CHECK(std::abs(v) <= 1.0);
    for (int j = 0; j < 3; ++j) CHECK(r.per_text[static_cast<std::size_t>(j)] == doctest::Approx(mam(c, t.row(j).transpose())));
  }

  TEST_CASE("MAM closed forms") {
    const MamReport id = mam_report(Eigen::MatrixXd::Identity(4, 4), Eigen::MatrixXd::Identity(4, 4));
    CHECK(id.mean == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(id.sd == doctest::Approx(0.0));
    const Eigen::MatrixXd same = Eigen::MatrixXd::Ones(3, 2);
    const MamReport s = mam_report(same, same);
    CHECK(s.mean == doctest::Approx(1.0));
    CHECK(s.sd < 1e-15);
    CHECK_THROWS_AS(mam_report(Eigen::MatrixXd(0, 2), same), ContractViolation);
  }

  TEST_CASE("grand mean identity on random matrices") {
    SplitMix64 rng(5);
    for (int trial = 0; trial < 50; ++trial) {
      const Eigen::MatrixXd c = fixtures::random_matrix(rng, 1 + rng.below(20), 6);
      const Eigen::MatrixXd t = fixtures::random_matrix(rng, 1 + rng.below(20), 6);
      const MamReport r = mam_report(c, t);
      CHECK(std::abs(r.mean - r.mean_prime) < 1e-12);
      CHECK(std::abs(r.mean - similarity_matrix(c, t).mean()) < 1e-12);
    }
  }
}
