#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace baca {

using Edge = std::pair<int, int>;

/// Undirected simple graph with optional dense node features.
///
/// Edges are canonicalized on construction (u < v, sorted lexicographically),
/// so two graphs built from the same edge set compare equal regardless of
/// input order. Construction throws ValidationError on self-loops, duplicate
/// edges, out-of-range endpoints or a feature matrix with the wrong row count.
class Graph {
 public:
  Graph() = default;
  Graph(int num_nodes, std::vector<Edge> edges,
        std::optional<Eigen::MatrixXd> features = std::nullopt);

  int num_nodes() const noexcept { return num_nodes_; }
  std::size_t num_edges() const noexcept { return edges_.size(); }
  const std::vector<Edge>& edges() const noexcept { return edges_; }

  bool has_features() const noexcept { return features_.has_value(); }
  const std::optional<Eigen::MatrixXd>& features() const noexcept { return features_; }

  int degree(int v) const { return static_cast<int>(neighbors_[v].size()); }
  const std::vector<int>& neighbors(int v) const { return neighbors_[v]; }

  double edge_density() const;

  friend bool operator==(const Graph& a, const Graph& b);

 private:
  int num_nodes_ = 0;
  std::vector<Edge> edges_;
  std::optional<Eigen::MatrixXd> features_;
  std::vector<std::vector<int>> neighbors_;
};

/// Test collection. `labels` (0 = ID, 1 = OOD) are used for evaluation only;
/// `precomputed_scores` are externally computed pretrain scores.
struct GraphDataset {
  std::vector<Graph> graphs;
  std::optional<std::vector<int>> labels;
  std::optional<std::vector<double>> precomputed_scores;

  std::size_t size() const noexcept { return graphs.size(); }
  void validate() const;
};

GraphDataset parse_dataset(std::istream& in);
GraphDataset load_dataset(const std::filesystem::path& path);
void write_dataset(const GraphDataset& ds, std::ostream& out);
void save_dataset(const GraphDataset& ds, const std::filesystem::path& path);

// Row i is one-hot at min(degree(i), d_in - 1).
Eigen::MatrixXd degree_features(const Graph& g, int d_in);

// g.features() if present, otherwise degree_features(g, d_in).
Eigen::MatrixXd node_features(const Graph& g, int d_in);

Eigen::MatrixXd adjacency(const Graph& g);

// Same graph with node i renamed to perm[i].
Graph relabel(const Graph& g, const std::vector<int>& perm);

}  // namespace baca
