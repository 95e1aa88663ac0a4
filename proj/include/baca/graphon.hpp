#pragma once

#include <iosfwd>
#include <span>

#include <Eigen/Dense>

#include "baca/graph.hpp"
#include "baca/rng.hpp"

namespace baca {

/// Step-function graphon on a uniform N-block partition of [0,1].
/// Invariants: square, symmetric, entries in [0,1].
class Graphon {
 public:
  explicit Graphon(Eigen::MatrixXd matrix);

  static Graphon constant(int resolution, double p);

  int resolution() const noexcept { return static_cast<int>(matrix_.rows()); }
  double operator()(int i, int j) const { return matrix_(i, j); }
  const Eigen::MatrixXd& matrix() const noexcept { return matrix_; }

 private:
  Eigen::MatrixXd matrix_;
};

inline constexpr double kDefaultUsvtC = 0.2;

// Adjacency with nodes sorted by descending degree (ties by index), zero-padded
// to N x N when smaller and block-averaged down when larger.
Eigen::MatrixXd aligned_adjacency(const Graph& g, int resolution);

// Universal singular value thresholding of a symmetric matrix: drop
// eigenvalues with |lambda| < c * sqrt(N), reconstruct, symmetrize, clip to [0,1].
Eigen::MatrixXd usvt(const Eigen::MatrixXd& symmetric, double usvt_c);

Graphon estimate_graphon(std::span<const Graph> graphs, int resolution,
                         double usvt_c = kDefaultUsvtC);

// Median node count of `graphs`, clamped to [8, 64].
int default_resolution(std::span<const Graph> graphs);

Graphon mixup(const Graphon& a, const Graphon& b, double lambda);

// Uniform on {2, ..., N}.
int random_size(int resolution, Rng& rng);

// r grid indices drawn uniformly without replacement (kept in ascending
// order), one Bernoulli(W'(i,j)) draw per pair i < j. Node features are the
// degree encoding of width `feature_dim`.
Graph sample_graph(const Graphon& w, int r, Rng& rng, int feature_dim);

// Latent-position sampler: each of n nodes gets x ~ Uniform[0,1) and lands
// in block floor(x * N). No node features.
Graph sample_graph_latent(const Graphon& w, int n, Rng& rng);

void write_graphon_csv(const Graphon& w, std::ostream& out);

}  // namespace baca
