#pragma once

#include <limits>
#include <set>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "corrgan/correlation.hpp"

namespace testing {

using corrgan::Index;
using Edge = std::pair<Index, Index>;

/// Decode a Pruefer sequence into the edges of a labelled tree on n nodes.
inline std::vector<Edge> pruefer_tree(const std::vector<Index>& seq, Index n) {
  std::vector<Index> degree(static_cast<std::size_t>(n), 1);
  for (const Index v : seq) ++degree[static_cast<std::size_t>(v)];
  std::vector<Edge> edges;
  for (const Index v : seq) {
    for (Index leaf = 0; leaf < n; ++leaf) {
      if (degree[static_cast<std::size_t>(leaf)] == 1) {
        edges.emplace_back(std::min(leaf, v), std::max(leaf, v));
        --degree[static_cast<std::size_t>(leaf)];
        --degree[static_cast<std::size_t>(v)];
        break;
      }
    }
  }
  Index u = -1;
  for (Index k = 0; k < n; ++k) {
    if (degree[static_cast<std::size_t>(k)] == 1) {
      if (u < 0) {
        u = k;
      } else {
        edges.emplace_back(u, k);
      }
    }
  }
  return edges;
}

/// Minimum total weight over all n^(n-2) spanning trees.
inline std::pair<double, std::set<Edge>> brute_force_mst(const Eigen::MatrixXd& d) {
  const Index n = d.rows();
  std::vector<Index> seq(static_cast<std::size_t>(n - 2), 0);
  double best = std::numeric_limits<double>::infinity();
  std::set<Edge> best_edges;
  while (true) {
    const auto edges = pruefer_tree(seq, n);
    double w = 0.0;
    for (const auto& [i, j] : edges) w += d(i, j);
    if (w < best) {
      best = w;
      best_edges = {edges.begin(), edges.end()};
    }
    std::size_t k = 0;
    while (k < seq.size() && ++seq[k] == n) seq[k++] = 0;
    if (k == seq.size()) break;
  }
  return {best, best_edges};
}

}  // namespace testing
