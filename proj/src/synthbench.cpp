#include "baca/synthbench.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "baca/analysis.hpp"
#include "baca/error.hpp"
#include "baca/rng.hpp"

namespace baca {

using nlohmann::json;

void BenchSpec::validate() const {
  if (n_id < 1 || n_ood < 1) throw ValidationError("bench spec: n_id and n_ood must be >= 1");
  if (min_nodes < 2 || min_nodes > max_nodes) {
    throw ValidationError("bench spec: need 2 <= min_nodes <= max_nodes");
  }
}

Graphon block_graphon(const Eigen::MatrixXd& blocks, int resolution) {
  const auto b = blocks.rows();
  if (b < 1 || blocks.cols() != b) throw ValidationError("block matrix must be square");
  if (resolution < b || resolution % b != 0) {
    throw ValidationError("resolution must be a positive multiple of the block count");
  }
  const int width = resolution / static_cast<int>(b);
  Eigen::MatrixXd m(resolution, resolution);
  for (int i = 0; i < resolution; ++i)
    for (int j = 0; j < resolution; ++j) m(i, j) = blocks(i / width, j / width);
  return Graphon(std::move(m));
}

BenchSpec BenchSpec::defaults(std::uint64_t seed) {
  Eigen::MatrixXd assortative(2, 2), disassortative(2, 2);
  assortative << 0.7, 0.1, 0.1, 0.7;
  disassortative << 0.1, 0.7, 0.7, 0.1;
  BenchSpec spec;
  spec.w_id = block_graphon(assortative, 16);
  spec.w_ood = block_graphon(disassortative, 16);
  spec.seed = seed;
  return spec;
}

namespace {

Eigen::MatrixXd matrix_from(const json& rows, const char* what) {
  if (!rows.is_array() || rows.empty()) throw ValidationError(std::string(what) + ": expected 2-D array");
  const auto n = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n) {
      throw ValidationError(std::string(what) + ": matrix must be square");
    }
    for (Eigen::Index j = 0; j < n; ++j) m(i, j) = row[static_cast<std::size_t>(j)].get<double>();
  }
  return m;
}

// Either a full matrix, or {"blocks": [[...]], "resolution": N}.
Graphon graphon_from(const json& v, const char* what) {
  if (v.is_object()) {
    const int res = v.value("resolution", 16);
    return block_graphon(matrix_from(v.at("blocks"), what), res);
  }
  return Graphon(matrix_from(v, what));
}

json matrix_to(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

BenchSpec parse_bench_spec(const json& doc) {
  BenchSpec spec = BenchSpec::defaults();
  try {
    if (doc.contains("w_id")) spec.w_id = graphon_from(doc["w_id"], "w_id");
    if (doc.contains("w_ood")) spec.w_ood = graphon_from(doc["w_ood"], "w_ood");
    spec.n_id = doc.value("n_id", spec.n_id);
    spec.n_ood = doc.value("n_ood", spec.n_ood);
    if (doc.contains("size_range")) {
      spec.min_nodes = doc["size_range"].at(0).get<int>();
      spec.max_nodes = doc["size_range"].at(1).get<int>();
    }
    spec.seed = doc.value("seed", spec.seed);
    spec.detector_noise = doc.value("detector_noise", spec.detector_noise);
  } catch (const json::exception& err) {
    throw ValidationError(std::string("bench spec: ") + err.what());
  }
  spec.validate();
  return spec;
}

BenchSpec load_bench_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open bench spec: " + path.string());
  try {
    return parse_bench_spec(json::parse(in));
  } catch (const json::parse_error& err) {
    throw ValidationError(std::string("bench spec: malformed JSON: ") + err.what());
  }
}

json bench_spec_to_json(const BenchSpec& spec) {
  return {{"w_id", matrix_to(spec.w_id.matrix())},
          {"w_ood", matrix_to(spec.w_ood.matrix())},
          {"n_id", spec.n_id},
          {"n_ood", spec.n_ood},
          {"size_range", {spec.min_nodes, spec.max_nodes}},
          {"seed", spec.seed},
          {"detector_noise", spec.detector_noise}};
}

namespace {

// Injective edge and triangle densities; unbiased for t(K2, W) and t(K3, W).
std::pair<double, double> sample_densities(const Graph& g) {
  const double n = g.num_nodes();
  const double edge = 2.0 * g.num_edges() / (n * (n - 1.0));
  if (g.num_nodes() < 3) return {edge, 0.0};
  const Eigen::MatrixXd a = adjacency(g);
  const double closed = (a * a).cwiseProduct(a).sum();
  return {edge, closed / (n * (n - 1.0) * (n - 2.0))};
}

double relative_gap(double x, double ref) {
  return ref > 0.0 ? std::abs(x - ref) / ref : std::abs(x - ref);
}

}  // namespace

double detector_score(const Graph& g, const Graphon& w_id, double noise, Rng& rng) {
  const auto [edge, tri] = sample_densities(g);
  const double gap = relative_gap(edge, homomorphism_density(Motif::complete(2), w_id)) +
                     relative_gap(tri, homomorphism_density(Motif::complete(3), w_id));
  std::normal_distribution<double> eps(0.0, 1.0);
  return gap + noise * eps(rng);
}

GraphDataset make_benchmark(const BenchSpec& spec) {
  spec.validate();
  const int total = spec.n_id + spec.n_ood;
  Rng order_rng = make_rng(spec.seed, 0);
  std::vector<int> order(total);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), order_rng);

  GraphDataset ds;
  ds.labels.emplace();
  ds.graphs.reserve(total);
  for (int slot = 0; slot < total; ++slot) {
    // Draw i < n_id is an ID graph; each draw has its own stream.
    const int draw = order[slot];
    const bool is_ood = draw >= spec.n_id;
    Rng rng = make_rng(spec.seed, 1 + static_cast<std::uint64_t>(draw));
    std::uniform_int_distribution<int> size(spec.min_nodes, spec.max_nodes);
    const int n = size(rng);
    ds.graphs.push_back(sample_graph_latent(is_ood ? spec.w_ood : spec.w_id, n, rng));
    ds.labels->push_back(is_ood ? 1 : 0);
    if (spec.detector_noise >= 0.0) {
      if (!ds.precomputed_scores) ds.precomputed_scores.emplace();
      ds.precomputed_scores->push_back(
          detector_score(ds.graphs.back(), spec.w_id, spec.detector_noise, rng));
    }
  }
  return ds;
}

}  // namespace baca
