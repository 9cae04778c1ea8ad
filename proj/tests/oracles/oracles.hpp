// SPDX-License-Identifier: Apache-2.0
#pragma once

// Straight-line reference implementations. Nothing here calls into the
// library: plain nested vectors, explicit loops, full sorts.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

namespace oracle {

using Vec = std::vector<double>;
using Mat = std::vector<Vec>;  // row-major
using EdgeList = std::vector<std::pair<int, int>>;  // (src, dst)

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline Mat zeros(std::size_t r, std::size_t c) { return Mat(r, Vec(c, 0.0)); }

inline Vec matvec(const Mat& w, const Vec& x) {
  Vec y(w.size(), 0.0);
  for (std::size_t i = 0; i < w.size(); ++i) {
    for (std::size_t j = 0; j < x.size(); ++j) y[i] += w[i][j] * x[j];
  }
  return y;
}

inline std::vector<int> indegree(std::size_t n, const EdgeList& edges) {
  std::vector<int> d(n, 0);
  for (const auto& [s, t] : edges) d[static_cast<std::size_t>(t)] += 1;
  return d;
}

// H'_i = eps H0_i + sum over edges j->i of tanh(g_a . H_i + g_b . H_j) / sqrt(d_i d_j) H_j
inline Mat faconv(const Mat& h, const Mat& h0, const EdgeList& edges, const Vec& g, double eps) {
  const std::size_t n = h.size();
  const std::size_t w = n ? h[0].size() : 0;
  const auto deg = indegree(n, edges);
  Mat out = zeros(n, w);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < w; ++k) out[i][k] = eps * h0[i][k];
  }
  for (const auto& [j, i] : edges) {
    double a = 0.0;
    for (std::size_t k = 0; k < w; ++k) a += g[k] * h[i][k] + g[w + k] * h[j][k];
    const double coef = std::tanh(a) / std::sqrt((deg[i] + 1.0) * (deg[j] + 1.0));
    for (std::size_t k = 0; k < w; ++k) out[i][k] += coef * h[j][k];
  }
  return out;
}

inline Vec ast_scores(const Mat& h, const EdgeList& edges, const Vec& p, double b1, double b2) {
  double pn = 0.0;
  for (double v : p) pn += v * v;
  pn = std::sqrt(pn);
  const auto deg = indegree(h.size(), edges);
  Vec s(h.size(), 0.0);
  for (std::size_t i = 0; i < h.size(); ++i) {
    double proj = 0.0;
    if (pn > 0.0) {
      for (std::size_t k = 0; k < p.size(); ++k) proj += h[i][k] * p[k];
      proj /= pn;
    }
    s[i] = b1 * proj + b2 * deg[i];
  }
  return s;
}

// One symmetric-normalized convolution (with self loop) of the scalar field H p.
inline Vec sag_scores(const Mat& h, const EdgeList& edges, const Vec& p) {
  const std::size_t n = h.size();
  const auto deg = indegree(n, edges);
  Vec hp(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < p.size(); ++k) hp[i] += h[i][k] * p[k];
  }
  Vec s(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) s[i] = hp[i] / (deg[i] + 1.0);
  for (const auto& [j, i] : edges) s[i] += hp[j] / std::sqrt((deg[i] + 1.0) * (deg[j] + 1.0));
  return s;
}

// Sort everything by (score desc, id asc), keep the first k, then force the root.
inline std::vector<int> select(const Vec& scores, double ratio, int root) {
  const int n = static_cast<int>(scores.size());
  int k = static_cast<int>(std::ceil(ratio * n - 1e-9));
  k = std::max(1, std::min(k, n));
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  });
  std::vector<int> kept(order.begin(), order.begin() + k);
  if (std::find(kept.begin(), kept.end(), root) == kept.end()) kept.back() = root;
  std::sort(kept.begin(), kept.end());
  return kept;
}

struct Pooled {
  std::vector<int> kept;
  Mat h;
  EdgeList edges;  // renumbered
};

inline Pooled pool(const Mat& h, const EdgeList& edges, const Vec& scores, double ratio, int root) {
  Pooled out;
  out.kept = select(scores, ratio, root);
  std::vector<int> pos(h.size(), -1);
  for (std::size_t r = 0; r < out.kept.size(); ++r) {
    const int i = out.kept[r];
    pos[static_cast<std::size_t>(i)] = static_cast<int>(r);
    Vec row = h[static_cast<std::size_t>(i)];
    for (double& v : row) v *= std::tanh(scores[static_cast<std::size_t>(i)]);
    out.h.push_back(std::move(row));
  }
  for (const auto& [s, t] : edges) {
    if (pos[s] >= 0 && pos[t] >= 0) out.edges.emplace_back(pos[s], pos[t]);
  }
  return out;
}

inline Vec max_pool(const Mat& h) {
  Vec f = h.at(0);
  for (const auto& row : h) {
    for (std::size_t k = 0; k < row.size(); ++k) f[k] = std::max(f[k], row[k]);
  }
  return f;
}

struct Gru {
  Mat wz, uz, wr, ur, wh, uh;
  Vec bz, br, bh;
};

inline Vec gru_step(const Gru& g, const Vec& x, const Vec& h) {
  const Vec az = matvec(g.wz, x), cz = matvec(g.uz, h);
  const Vec ar = matvec(g.wr, x), cr = matvec(g.ur, h);
  const std::size_t n = h.size();
  Vec z(n), r(n), rh(n);
  for (std::size_t i = 0; i < n; ++i) {
    z[i] = sigmoid(az[i] + cz[i] + g.bz[i]);
    r[i] = sigmoid(ar[i] + cr[i] + g.br[i]);
    rh[i] = r[i] * h[i];
  }
  const Vec ah = matvec(g.wh, x), ch = matvec(g.uh, rh);
  Vec out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double cand = std::tanh(ah[i] + ch[i] + g.bh[i]);
    out[i] = (1.0 - z[i]) * h[i] + z[i] * cand;
  }
  return out;
}

inline Vec gru_sequence(const Gru& g, const std::vector<Vec>& xs) {
  Vec h(g.bz.size(), 0.0);
  for (const auto& x : xs) h = gru_step(g, x, h);
  return h;
}

inline double cosine(const Vec& a, const Vec& b) {
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  return ab / std::sqrt(aa * bb);
}

// Symmetric in-batch cross-entropy over cosine / tau.
inline double contrastive_loss(const Mat& c, const Mat& t, double tau) {
  const std::size_t n = c.size();
  Mat s = zeros(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) s[i][j] = cosine(c[i], t[j]) / tau;
  }
  double lc = 0.0, lt = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double row = 0.0, col = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      row += std::exp(s[i][j]);
      col += std::exp(s[j][i]);
    }
    lc += std::log(row) - s[i][i];
    lt += std::log(col) - s[i][i];
  }
  return 0.5 * (lc + lt) / static_cast<double>(n);
}

// 1-based position of `truth` after fully sorting by (similarity desc, id asc).
inline int brute_rank(const Vec& sims, const std::vector<std::string>& ids, std::size_t truth) {
  std::vector<std::size_t> order(sims.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (sims[a] != sims[b]) return sims[a] > sims[b];
    return ids[a] < ids[b];
  });
  return static_cast<int>(std::find(order.begin(), order.end(), truth) - order.begin()) + 1;
}

// Per-text and per-code mean similarity (columns and rows of the cosine matrix).
inline std::pair<Vec, Vec> mam(const Mat& codes, const Mat& texts) {
  Vec per_text(texts.size(), 0.0), per_code(codes.size(), 0.0);
  for (std::size_t i = 0; i < codes.size(); ++i) {
    for (std::size_t j = 0; j < texts.size(); ++j) {
      const double s = cosine(codes[i], texts[j]);
      per_text[j] += s / static_cast<double>(codes.size());
      per_code[i] += s / static_cast<double>(texts.size());
    }
  }
  return {per_text, per_code};
}

inline std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace oracle
