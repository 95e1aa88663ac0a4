#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "baca/graph.hpp"
#include "baca/rng.hpp"

namespace baca {

/// Dense layer y = W x + b. `weight` is (out x in), the torch.nn.Linear layout.
struct DenseLayer {
  Eigen::MatrixXd weight;
  Eigen::VectorXd bias;

  Eigen::Index in_dim() const { return weight.cols(); }
  Eigen::Index out_dim() const { return weight.rows(); }
};

/// One GIN layer: h' = ReLU(mlp2(ReLU(mlp1((1 + eps) h + sum of neighbor h)))).
struct GinLayer {
  double eps = 0.0;
  DenseLayer mlp1;
  DenseLayer mlp2;
};

/// Frozen GIN encoder. The graph embedding concatenates the sum-pooled node
/// states of every layer, so its dimension is the sum of layer output widths.
class EncoderWeights {
 public:
  explicit EncoderWeights(std::vector<GinLayer> layers);

  const std::vector<GinLayer>& layers() const noexcept { return layers_; }
  std::size_t num_layers() const noexcept { return layers_.size(); }
  int input_dim() const;
  int embedding_dim() const;

 private:
  std::vector<GinLayer> layers_;
};

EncoderWeights parse_encoder(const nlohmann::json& doc);
EncoderWeights load_encoder(const std::filesystem::path& path);
nlohmann::json encoder_to_json(const EncoderWeights& w);
void save_encoder(const EncoderWeights& w, const std::filesystem::path& path);

// Glorot-uniform weights, zero biases, eps = 0. Used for standalone synthetic runs.
EncoderWeights random_encoder(int input_dim, int hidden_dim, int num_layers, std::uint64_t seed);

// Random-feature GIN for featureless graphs with one-hot degree inputs. Every
// layer has eps = -1 (pure neighbour sums). Layer 1 hidden unit j computes
// ReLU(a_j deg(v) + g_j sum_{u~v} deg(u) / 10 + 10 b_j) with a, g, b ~ N(0, 1),
// so its node states are hinge functions of (degree, neighbour-degree mass);
// deeper layers are Gaussian random maps with the same bias scale, damped by
// 1/10. Stands in for a pretrained encoder on degree-encoded synthetic graphs.
EncoderWeights degree_probe_encoder(int input_dim, int hidden_dim, int num_layers,
                                    std::uint64_t seed);

using Embedding = Eigen::VectorXd;

Embedding embed(const EncoderWeights& w, const Graph& g);
std::vector<Embedding> embed_all(const EncoderWeights& w, std::span<const Graph> graphs);

/// Batch InfoNCE proxy for the pretrain loss: two edge-dropped views per graph,
/// per-sample loss -log softmax_j(cos(z1_i, z2_j) / temperature)[i].
struct InfoNceOptions {
  double drop_rate = 0.1;
  double temperature = 0.2;
  std::uint64_t seed = 0x5eed;
};

// Copy of g with every edge removed independently with probability `rate`.
Graph drop_edges(const Graph& g, double rate, Rng& rng);

std::vector<double> infonce_scores(const EncoderWeights& w, std::span<const Graph> batch,
                                   const InfoNceOptions& opts = {});

// Pretrain score S_Pre for ds.graphs[i], i in `batch`. Returns the dataset's
// precomputed scores when present, the InfoNCE proxy otherwise.
std::vector<double> pretrain_score(const EncoderWeights& w, const GraphDataset& ds,
                                   std::span<const std::size_t> batch,
                                   const InfoNceOptions& opts = {});

}  // namespace baca
