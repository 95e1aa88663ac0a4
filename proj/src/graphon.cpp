#include "baca/graphon.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include <Eigen/Eigenvalues>

#include "baca/error.hpp"

namespace baca {

Graphon::Graphon(Eigen::MatrixXd matrix) : matrix_(std::move(matrix)) {
  if (matrix_.rows() != matrix_.cols() || matrix_.rows() < 1) {
    throw ValidationError("graphon matrix must be square and non-empty");
  }
  for (Eigen::Index i = 0; i < matrix_.rows(); ++i) {
    for (Eigen::Index j = 0; j < matrix_.cols(); ++j) {
      const double v = matrix_(i, j);
      if (!(v >= 0.0 && v <= 1.0)) throw ValidationError("graphon entry outside [0,1]");
      if (v != matrix_(j, i)) throw ValidationError("graphon matrix is not symmetric");
    }
  }
}

Graphon Graphon::constant(int resolution, double p) {
  return Graphon(Eigen::MatrixXd::Constant(resolution, resolution, p));
}

Eigen::MatrixXd aligned_adjacency(const Graph& g, int resolution) {
  const int n = g.num_nodes();
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return g.degree(a) > g.degree(b); });
  std::vector<int> rank(n);
  for (int i = 0; i < n; ++i) rank[order[i]] = i;

  Eigen::MatrixXd sorted = Eigen::MatrixXd::Zero(n, n);
  for (const auto& [u, v] : g.edges()) {
    sorted(rank[u], rank[v]) = 1.0;
    sorted(rank[v], rank[u]) = 1.0;
  }
  if (n <= resolution) {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(resolution, resolution);
    out.topLeftCorner(n, n) = sorted;
    return out;
  }
  // Contiguous groups [floor(b n / N), floor((b + 1) n / N)).
  std::vector<int> start(resolution + 1);
  for (int b = 0; b <= resolution; ++b) {
    start[b] = static_cast<int>((static_cast<long long>(b) * n) / resolution);
  }
  Eigen::MatrixXd out(resolution, resolution);
  for (int a = 0; a < resolution; ++a) {
    for (int b = 0; b < resolution; ++b) {
      const int ra = start[a + 1] - start[a];
      const int rb = start[b + 1] - start[b];
      out(a, b) = sorted.block(start[a], start[b], ra, rb).sum() / (ra * rb);
    }
  }
  return out;
}

Eigen::MatrixXd usvt(const Eigen::MatrixXd& symmetric, double usvt_c) {
  const auto n = symmetric.rows();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(symmetric);
  if (eig.info() != Eigen::Success) throw RuntimeError("USVT: eigendecomposition failed");
  const double threshold = usvt_c * std::sqrt(static_cast<double>(n));
  Eigen::VectorXd kept = eig.eigenvalues();
  for (Eigen::Index i = 0; i < kept.size(); ++i) {
    if (std::abs(kept(i)) < threshold) kept(i) = 0.0;
  }
  const Eigen::MatrixXd& v = eig.eigenvectors();
  Eigen::MatrixXd m = v * kept.asDiagonal() * v.transpose();
  m = 0.5 * (m + m.transpose()).eval();
  return m.cwiseMax(0.0).cwiseMin(1.0);
}

Graphon estimate_graphon(std::span<const Graph> graphs, int resolution, double usvt_c) {
  if (graphs.empty()) throw ValidationError("estimate_graphon: empty graph list");
  if (resolution < 2) throw ValidationError("estimate_graphon: resolution must be >= 2");
  Eigen::MatrixXd avg = Eigen::MatrixXd::Zero(resolution, resolution);
  for (const auto& g : graphs) avg += aligned_adjacency(g, resolution);
  avg /= static_cast<double>(graphs.size());
  return Graphon(usvt(avg, usvt_c));
}

int default_resolution(std::span<const Graph> graphs) {
  if (graphs.empty()) throw ValidationError("default_resolution: empty graph list");
  std::vector<int> sizes;
  sizes.reserve(graphs.size());
  for (const auto& g : graphs) sizes.push_back(g.num_nodes());
  std::sort(sizes.begin(), sizes.end());
  const std::size_t m = sizes.size();
  const int median = m % 2 == 1 ? sizes[m / 2] : (sizes[m / 2 - 1] + sizes[m / 2]) / 2;
  return std::clamp(median, 8, 64);
}

Graphon mixup(const Graphon& a, const Graphon& b, double lambda) {
  if (a.resolution() != b.resolution()) {
    throw ValidationError("mixup: resolution mismatch (" + std::to_string(a.resolution()) +
                          " vs " + std::to_string(b.resolution()) + ")");
  }
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ValidationError("mixup: lambda outside [0,1]");
  Eigen::MatrixXd m = lambda * a.matrix() + (1.0 - lambda) * b.matrix();
  // Rounding can leave a convex combination a hair outside [0,1].
  return Graphon(m.cwiseMax(0.0).cwiseMin(1.0));
}

int random_size(int resolution, Rng& rng) {
  if (resolution < 2) throw ValidationError("random_size: N must be >= 2");
  std::uniform_int_distribution<int> dist(2, resolution);
  return dist(rng);
}

Graph sample_graph(const Graphon& w, int r, Rng& rng, int feature_dim) {
  const int n = w.resolution();
  if (r < 2 || r > n) {
    throw ValidationError("sample_graph: size " + std::to_string(r) + " outside [2, " +
                          std::to_string(n) + "]");
  }
  std::vector<int> grid(n);
  std::iota(grid.begin(), grid.end(), 0);
  std::vector<int> idx;
  idx.reserve(r);
  std::sample(grid.begin(), grid.end(), std::back_inserter(idx), r, rng);

  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<Edge> edges;
  for (int i = 0; i < r; ++i) {
    for (int j = i + 1; j < r; ++j) {
      if (unif(rng) < w(idx[i], idx[j])) edges.emplace_back(i, j);
    }
  }
  Graph structure(r, std::move(edges));
  return Graph(r, structure.edges(), degree_features(structure, feature_dim));
}

Graph sample_graph_latent(const Graphon& w, int n, Rng& rng) {
  if (n < 0) throw ValidationError("sample_graph_latent: negative size");
  const int res = w.resolution();
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<int> block(n);
  for (auto& b : block) b = std::min(res - 1, static_cast<int>(unif(rng) * res));
  std::vector<Edge> edges;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (unif(rng) < w(block[i], block[j])) edges.emplace_back(i, j);
    }
  }
  return Graph(n, std::move(edges));
}

void write_graphon_csv(const Graphon& w, std::ostream& out) {
  const auto& m = w.matrix();
  const auto old_precision = out.precision(17);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j > 0) out << ',';
      out << m(i, j);
    }
    out << '\n';
  }
  out.precision(old_precision);
}

}  // namespace baca
