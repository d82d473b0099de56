#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "chronoscope/dataset.hpp"
#include "chronoscope/error.hpp"
#include "chronoscope/matrix.hpp"
#include "chronoscope/parallel.hpp"

namespace chronoscope {

/// Exact k-nearest-neighbour graph. Row i lists its k neighbours by
/// ascending distance, ties by ascending index. Edges are directed.
struct KnnGraph {
  std::vector<std::vector<std::size_t>> neighbors;
  std::vector<std::vector<double>> distances;
  std::size_t k = 0;
  bool symmetric = false;

  std::size_t n() const noexcept { return neighbors.size(); }
};

inline KnnGraph knn_graph(const Matrix& x, std::size_t k, unsigned threads = 1) {
  const std::size_t n = x.rows();
  if (k < 1 || k + 1 > n)
    throw Error(Errc::KTooLarge, "k=" + std::to_string(k) + " needs 1 <= k <= n-1 with n=" + std::to_string(n));
  KnnGraph g;
  g.k = k;
  g.neighbors.resize(n);
  g.distances.resize(n);
  parallel_for(n, threads, [&](std::size_t i) {
    std::vector<std::pair<double, std::size_t>> cand;
    cand.reserve(n - 1);
    auto xi = x.row(i);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      auto xj = x.row(j);
      double s = 0.0;
      for (std::size_t p = 0; p < xi.size(); ++p) {
        const double diff = xi[p] - xj[p];
        s += diff * diff;
      }
      cand.emplace_back(s, j);
    }
    std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k), cand.end());
    g.neighbors[i].resize(k);
    g.distances[i].resize(k);
    for (std::size_t r = 0; r < k; ++r) {
      g.neighbors[i][r] = cand[r].second;
      g.distances[i][r] = std::sqrt(cand[r].first);
    }
  });
  return g;
}

inline KnnGraph knn_graph(const ActivationSet& a, std::size_t k, unsigned threads = 1) {
  return knn_graph(a.values, k, threads);
}

/// Number of connected components of the graph with edge directions ignored.
inline std::size_t component_count(const KnnGraph& g) {
  std::vector<std::size_t> parent(g.n());
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t v) {
    while (parent[v] != v) v = parent[v] = parent[parent[v]];
    return v;
  };
  std::size_t count = g.n();
  for (std::size_t i = 0; i < g.n(); ++i)
    for (std::size_t j : g.neighbors[i]) {
      const std::size_t a = find(i), b = find(j);
      if (a != b) {
        parent[std::max(a, b)] = std::min(a, b);
        --count;
      }
    }
  return count;
}

/// Undirected adjacency (union of both directions) with edge lengths,
/// each list sorted by neighbour index.
inline std::vector<std::vector<std::pair<std::size_t, double>>> undirected_adjacency(const KnnGraph& g) {
  std::vector<std::vector<std::pair<std::size_t, double>>> adj(g.n());
  for (std::size_t i = 0; i < g.n(); ++i)
    for (std::size_t r = 0; r < g.neighbors[i].size(); ++r) {
      const std::size_t j = g.neighbors[i][r];
      adj[i].emplace_back(j, g.distances[i][r]);
      adj[j].emplace_back(i, g.distances[i][r]);
    }
  for (auto& row : adj) {
    std::sort(row.begin(), row.end());
    row.erase(std::unique(row.begin(), row.end(),
                          [](const auto& a, const auto& b) { return a.first == b.first; }),
              row.end());
  }
  return adj;
}

}  // namespace chronoscope
