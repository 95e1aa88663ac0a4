#pragma once

#include <cstdint>
#include <filesystem>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "baca/graph.hpp"
#include "baca/graphon.hpp"
#include "baca/rng.hpp"

namespace baca {

/// Ground-truth benchmark: ID graphs from w_id (label 0), OOD graphs from
/// w_ood (label 1), sizes uniform in [min_nodes, max_nodes].
struct BenchSpec {
  Graphon w_id = Graphon::constant(2, 0.5);
  Graphon w_ood = Graphon::constant(2, 0.5);
  int n_id = 200;
  int n_ood = 200;
  int min_nodes = 20;
  int max_nodes = 40;
  std::uint64_t seed = 7;
  // Noise level of the simulated frozen detector; negative disables s_pre.
  double detector_noise = 0.5;

  void validate() const;

  // Assortative ID vs disassortative OOD 2-block graphons at N = 16,
  // 200 + 200 graphs with 20-40 nodes.
  static BenchSpec defaults(std::uint64_t seed = 7);
};

// Expands a B x B block matrix into an N x N step graphon (N divisible by B).
Graphon block_graphon(const Eigen::MatrixXd& blocks, int resolution);

BenchSpec parse_bench_spec(const nlohmann::json& doc);
BenchSpec load_bench_spec(const std::filesystem::path& path);
nlohmann::json bench_spec_to_json(const BenchSpec& spec);

// Stand-in for a detector pre-trained on ID data: relative deviation of the
// graph's edge and triangle densities from those of w_id, plus Gaussian noise
// of standard deviation `noise`. Higher = more OOD-like.
double detector_score(const Graph& g, const Graphon& w_id, double noise, Rng& rng);

// Labelled dataset; carries s_pre from detector_score unless detector_noise < 0.
GraphDataset make_benchmark(const BenchSpec& spec);

}  // namespace baca
