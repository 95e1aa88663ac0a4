#pragma once

#include <random>
#include <vector>

#include <Eigen/Dense>

#include "baca/graph.hpp"

namespace baca::test {

// Erdos-Renyi G(n, p).
template <typename Engine>
Graph random_graph(int n, double p, Engine& rng) {
  std::bernoulli_distribution coin(p);
  std::vector<Edge> edges;
  for (int u = 0; u < n; ++u)
    for (int v = u + 1; v < n; ++v)
      if (coin(rng)) edges.emplace_back(u, v);
  return Graph(n, std::move(edges));
}

inline double cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return a.dot(b) / (a.norm() * b.norm());
}

// Random symmetric matrix with entries uniform in [lo, hi].
template <typename Engine>
Eigen::MatrixXd random_symmetric(int n, Engine& rng, double lo = 0.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) m(i, j) = m(j, i) = u(rng);
  return m;
}

}  // namespace baca::test
