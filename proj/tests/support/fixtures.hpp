// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "oracles/oracles.hpp"

#include "treeseek/gnn_layers.hpp"
#include "treeseek/graph.hpp"
#include "treeseek/model.hpp"
#include "treeseek/rng.hpp"

#include <Eigen/Core>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

namespace fixtures {

using treeseek::Edge;
using treeseek::SplitMix64;

inline oracle::Mat to_mat(const Eigen::MatrixXd& m) {
  oracle::Mat out(static_cast<std::size_t>(m.rows()), oracle::Vec(static_cast<std::size_t>(m.cols())));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) out[r][c] = m(r, c);
  }
  return out;
}

inline oracle::Vec to_vec(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

inline oracle::EdgeList to_edges(const std::vector<Edge>& edges) {
  oracle::EdgeList out;
  for (const auto& e : edges) out.emplace_back(e.src, e.dst);
  return out;
}

inline double max_abs_diff(const oracle::Mat& a, const oracle::Mat& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t k = 0; k < a[i].size(); ++k) m = std::max(m, std::abs(a[i][k] - b[i][k]));
  }
  return m;
}

inline double max_abs_diff(const oracle::Vec& a, const oracle::Vec& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline Eigen::MatrixXd random_matrix(SplitMix64& rng, Eigen::Index r, Eigen::Index c,
                                     double lo = -1.0, double hi = 1.0) {
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index j = 0; j < c; ++j) {
    for (Eigen::Index i = 0; i < r; ++i) m(i, j) = rng.uniform(lo, hi);
  }
  return m;
}

inline Eigen::VectorXd random_vector(SplitMix64& rng, Eigen::Index n, double lo = -1.0,
                                     double hi = 1.0) {
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = rng.uniform(lo, hi);
  return v;
}

/// Random rooted tree on n nodes (parent[i] < i, root 0) as child->parent edges.
inline std::vector<Edge> random_tree_edges(SplitMix64& rng, int n) {
  std::vector<Edge> edges;
  for (int i = 1; i < n; ++i) edges.push_back({i, static_cast<int>(rng.below(static_cast<std::uint64_t>(i)))});
  return edges;
}

inline treeseek::GraphState random_state(SplitMix64& rng, int n, int width) {
  treeseek::GraphState s;
  s.h = random_matrix(rng, n, width);
  s.h0 = random_matrix(rng, n, width);
  s.edges = random_tree_edges(rng, n);
  s.root = 0;
  s.origin.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) s.origin[static_cast<std::size_t>(i)] = i;
  return s;
}

inline treeseek::CodeGraph random_graph(SplitMix64& rng, int n, int type_width, int content_dim) {
  treeseek::CodeGraph g;
  g.num_nodes = n;
  g.edges = random_tree_edges(rng, n);
  g.root = 0;
  g.type_width = type_width;
  g.content_dim = content_dim;
  g.features = random_matrix(rng, n, type_width + content_dim);
  g.node_kinds.assign(static_cast<std::size_t>(n), 0);
  g.kinds.assign(static_cast<std::size_t>(n), "k");
  g.contents.assign(static_cast<std::size_t>(n), "c");
  return g;
}

inline Eigen::VectorXd random_unit(SplitMix64& rng, Eigen::Index n) {
  Eigen::VectorXd v = random_vector(rng, n);
  return v / v.norm();
}

/// Central differences of f with respect to every entry of `params`.
inline std::vector<double> numeric_gradient(std::span<double> params,
                                            const std::function<double()>& f,
                                            double step = 1e-5) {
  std::vector<double> g(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double keep = params[i];
    params[i] = keep + step;
    const double up = f();
    params[i] = keep - step;
    const double down = f();
    params[i] = keep;
    g[i] = (up - down) / (2.0 * step);
  }
  return g;
}

/// |a - n| / max(|a|, |n|); zero when both vanish.
inline double relative_error(std::span<const double> analytic, std::span<const double> numeric) {
  double diff = 0.0, na = 0.0, nn = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    diff += (analytic[i] - numeric[i]) * (analytic[i] - numeric[i]);
    na += analytic[i] * analytic[i];
    nn += numeric[i] * numeric[i];
  }
  const double denom = std::sqrt(std::max(na, nn));
  return denom < 1e-12 ? std::sqrt(diff) : std::sqrt(diff) / denom;
}

/// Scratch directory removed on destruction.
class TempDir {
public:
  explicit TempDir(const std::string& tag) {
    const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
    path_ = std::filesystem::temp_directory_path() /
            ("treeseek-" + tag + "-" + std::to_string(stamp));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void spit(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << text;
}

}  // namespace fixtures
