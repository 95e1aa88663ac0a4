#include "baca/encoder.hpp"

#include <cmath>
#include <fstream>

#include "baca/error.hpp"
#include "baca/rng.hpp"

namespace baca {

using nlohmann::json;

EncoderWeights::EncoderWeights(std::vector<GinLayer> layers) : layers_(std::move(layers)) {
  if (layers_.empty()) throw ValidationError("encoder needs at least one layer");
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    const auto& l = layers_[k];
    const std::string where = "layer " + std::to_string(k + 1);
    if (l.mlp1.bias.size() != l.mlp1.out_dim() || l.mlp2.bias.size() != l.mlp2.out_dim()) {
      throw ValidationError("dimension mismatch at " + where + ": bias size != weight rows");
    }
    if (l.mlp2.in_dim() != l.mlp1.out_dim()) {
      throw ValidationError("dimension mismatch at " + where + ": w2 cols != w1 rows");
    }
    if (k > 0 && l.mlp1.in_dim() != layers_[k - 1].mlp2.out_dim()) {
      throw ValidationError("dimension mismatch at " + where + ": input dim " +
                            std::to_string(l.mlp1.in_dim()) + " != previous output dim " +
                            std::to_string(layers_[k - 1].mlp2.out_dim()));
    }
    if (!std::isfinite(l.eps) || !l.mlp1.weight.allFinite() || !l.mlp2.weight.allFinite() ||
        !l.mlp1.bias.allFinite() || !l.mlp2.bias.allFinite()) {
      throw ValidationError("non-finite weight at " + where);
    }
  }
}

int EncoderWeights::input_dim() const { return static_cast<int>(layers_.front().mlp1.in_dim()); }

int EncoderWeights::embedding_dim() const {
  int d = 0;
  for (const auto& l : layers_) d += static_cast<int>(l.mlp2.out_dim());
  return d;
}

namespace {

Eigen::MatrixXd matrix_from_json(const json& rows, const std::string& where) {
  if (!rows.is_array() || rows.empty() || !rows[0].is_array()) {
    throw ValidationError("schema mismatch: " + where + " must be a non-empty 2-D array");
  }
  const auto r = static_cast<Eigen::Index>(rows.size());
  const auto c = static_cast<Eigen::Index>(rows[0].size());
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != c) {
      throw ValidationError("schema mismatch: ragged matrix in " + where);
    }
    for (Eigen::Index j = 0; j < c; ++j) {
      if (!row[static_cast<std::size_t>(j)].is_number()) {
        throw ValidationError("schema mismatch: non-numeric entry in " + where);
      }
      m(i, j) = row[static_cast<std::size_t>(j)].get<double>();
    }
  }
  return m;
}

Eigen::VectorXd vector_from_json(const json& vals, const std::string& where) {
  if (!vals.is_array()) throw ValidationError("schema mismatch: " + where + " must be an array");
  Eigen::VectorXd v(static_cast<Eigen::Index>(vals.size()));
  for (std::size_t i = 0; i < vals.size(); ++i) {
    if (!vals[i].is_number()) throw ValidationError("schema mismatch: non-numeric in " + where);
    v(static_cast<Eigen::Index>(i)) = vals[i].get<double>();
  }
  return v;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

json vector_to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

}  // namespace

EncoderWeights parse_encoder(const json& doc) {
  if (!doc.is_object() || !doc.contains("layers") || !doc["layers"].is_array()) {
    throw ValidationError("schema mismatch: expected {\"layers\": [...]}");
  }
  std::vector<GinLayer> layers;
  for (std::size_t k = 0; k < doc["layers"].size(); ++k) {
    const auto& l = doc["layers"][k];
    const std::string where = "layer " + std::to_string(k + 1);
    for (const char* key : {"eps", "w1", "b1", "w2", "b2"}) {
      if (!l.contains(key)) {
        throw ValidationError("schema mismatch: " + where + " missing \"" + key + "\"");
      }
    }
    if (!l["eps"].is_number()) throw ValidationError("schema mismatch: " + where + " eps");
    GinLayer layer;
    layer.eps = l["eps"].get<double>();
    layer.mlp1 = {matrix_from_json(l["w1"], where + ".w1"), vector_from_json(l["b1"], where + ".b1")};
    layer.mlp2 = {matrix_from_json(l["w2"], where + ".w2"), vector_from_json(l["b2"], where + ".b2")};
    layers.push_back(std::move(layer));
  }
  return EncoderWeights(std::move(layers));
}

EncoderWeights load_encoder(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open weights file: " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& err) {
    throw ValidationError(std::string("schema mismatch: malformed JSON: ") + err.what());
  }
  return parse_encoder(doc);
}

json encoder_to_json(const EncoderWeights& w) {
  json layers = json::array();
  for (const auto& l : w.layers()) {
    json obj;
    obj["eps"] = l.eps;
    obj["w1"] = matrix_to_json(l.mlp1.weight);
    obj["b1"] = vector_to_json(l.mlp1.bias);
    obj["w2"] = matrix_to_json(l.mlp2.weight);
    obj["b2"] = vector_to_json(l.mlp2.bias);
    layers.push_back(std::move(obj));
  }
  return json{{"layers", std::move(layers)}};
}

void save_encoder(const EncoderWeights& w, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw RuntimeError("cannot write weights file: " + path.string());
  out << encoder_to_json(w).dump() << '\n';
}

EncoderWeights random_encoder(int input_dim, int hidden_dim, int num_layers, std::uint64_t seed) {
  if (input_dim < 1 || hidden_dim < 1 || num_layers < 1) {
    throw ValidationError("encoder dimensions must be positive");
  }
  Rng rng = make_rng(seed);
  auto dense = [&](int in, int out) {
    const double bound = std::sqrt(6.0 / (in + out));
    std::uniform_real_distribution<double> u(-bound, bound);
    DenseLayer d{Eigen::MatrixXd(out, in), Eigen::VectorXd::Zero(out)};
    for (Eigen::Index i = 0; i < d.weight.rows(); ++i)
      for (Eigen::Index j = 0; j < d.weight.cols(); ++j) d.weight(i, j) = u(rng);
    return d;
  };
  std::vector<GinLayer> layers;
  int in = input_dim;
  for (int k = 0; k < num_layers; ++k) {
    GinLayer l;
    l.mlp1 = dense(in, hidden_dim);
    l.mlp2 = dense(hidden_dim, hidden_dim);
    layers.push_back(std::move(l));
    in = hidden_dim;
  }
  return EncoderWeights(std::move(layers));
}

EncoderWeights degree_probe_encoder(int input_dim, int hidden_dim, int num_layers,
                                    std::uint64_t seed) {
  if (input_dim < 1 || hidden_dim < 1 || num_layers < 1) {
    throw ValidationError("encoder dimensions must be positive");
  }
  Rng rng = make_rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  constexpr double kBiasScale = 10.0;
  std::vector<GinLayer> layers;
  int in = input_dim;
  for (int k = 0; k < num_layers; ++k) {
    GinLayer l;
    l.eps = -1.0;
    l.mlp1 = {Eigen::MatrixXd(hidden_dim, in), Eigen::VectorXd(hidden_dim)};
    for (int j = 0; j < hidden_dim; ++j) {
      if (k == 0) {
        // Column c is the one-hot slot of a neighbour with degree c.
        const double a = gauss(rng), g = gauss(rng);
        for (int c = 0; c < in; ++c) l.mlp1.weight(j, c) = a + g * c / 10.0;
      } else {
        for (int c = 0; c < in; ++c) l.mlp1.weight(j, c) = gauss(rng) / std::sqrt(in);
      }
      l.mlp1.bias(j) = kBiasScale * gauss(rng);
    }
    const double damp = k == 0 ? 1.0 : 0.1;
    l.mlp2 = {damp * Eigen::MatrixXd::Identity(hidden_dim, hidden_dim),
              Eigen::VectorXd::Zero(hidden_dim)};
    layers.push_back(std::move(l));
    in = hidden_dim;
  }
  return EncoderWeights(std::move(layers));
}

Embedding embed(const EncoderWeights& w, const Graph& g) {
  Eigen::MatrixXd h = node_features(g, w.input_dim());
  if (h.cols() != w.input_dim()) {
    throw ValidationError("feature dimension mismatch: graph has " + std::to_string(h.cols()) +
                          ", encoder expects " + std::to_string(w.input_dim()));
  }
  Embedding out(w.embedding_dim());
  Eigen::Index offset = 0;
  for (const auto& layer : w.layers()) {
    // Rows are nodes; aggregation visits neighbors in ascending index order.
    Eigen::MatrixXd agg = (1.0 + layer.eps) * h;
    for (int v = 0; v < g.num_nodes(); ++v) {
      for (int u : g.neighbors(v)) agg.row(v) += h.row(u);
    }
    Eigen::MatrixXd hidden = (agg * layer.mlp1.weight.transpose()).rowwise() +
                             layer.mlp1.bias.transpose();
    hidden = hidden.cwiseMax(0.0);
    h = (hidden * layer.mlp2.weight.transpose()).rowwise() + layer.mlp2.bias.transpose();
    h = h.cwiseMax(0.0);
    const auto width = h.cols();
    out.segment(offset, width) = h.colwise().sum().transpose();
    offset += width;
  }
  return out;
}

std::vector<Embedding> embed_all(const EncoderWeights& w, std::span<const Graph> graphs) {
  std::vector<Embedding> out;
  out.reserve(graphs.size());
  for (const auto& g : graphs) out.push_back(embed(w, g));
  return out;
}

Graph drop_edges(const Graph& g, double rate, Rng& rng) {
  std::bernoulli_distribution drop(rate);
  std::vector<Edge> kept;
  kept.reserve(g.num_edges());
  for (const auto& e : g.edges()) {
    if (!drop(rng)) kept.push_back(e);
  }
  return Graph(g.num_nodes(), std::move(kept), g.features());
}

namespace {

double cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  return a.dot(b) / (na * nb);
}

}  // namespace

std::vector<double> infonce_scores(const EncoderWeights& w, std::span<const Graph> batch,
                                   const InfoNceOptions& opts) {
  if (batch.size() < 2) {
    throw ValidationError("InfoNCE pretrain score needs a batch of at least 2 graphs");
  }
  if (!(opts.temperature > 0.0)) throw ValidationError("InfoNCE temperature must be positive");
  const std::size_t n = batch.size();
  std::vector<Embedding> z1, z2;
  z1.reserve(n);
  z2.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Rng r1 = make_rng(opts.seed, 2 * i);
    Rng r2 = make_rng(opts.seed, 2 * i + 1);
    z1.push_back(embed(w, drop_edges(batch[i], opts.drop_rate, r1)));
    z2.push_back(embed(w, drop_edges(batch[i], opts.drop_rate, r2)));
  }
  std::vector<double> scores(n);
  std::vector<double> logits(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) logits[j] = cosine(z1[i], z2[j]) / opts.temperature;
    double mx = logits[0];
    for (double l : logits) mx = std::max(mx, l);
    double sum = 0.0;
    for (double l : logits) sum += std::exp(l - mx);
    scores[i] = -(logits[i] - mx - std::log(sum));
  }
  return scores;
}

std::vector<double> pretrain_score(const EncoderWeights& w, const GraphDataset& ds,
                                   std::span<const std::size_t> batch,
                                   const InfoNceOptions& opts) {
  if (batch.empty()) throw ValidationError("pretrain_score: empty batch");
  for (std::size_t i : batch) {
    if (i >= ds.size()) throw ValidationError("pretrain_score: batch index out of range");
  }
  if (ds.precomputed_scores) {
    std::vector<double> out;
    out.reserve(batch.size());
    for (std::size_t i : batch) out.push_back((*ds.precomputed_scores)[i]);
    return out;
  }
  std::vector<Graph> graphs;
  graphs.reserve(batch.size());
  for (std::size_t i : batch) graphs.push_back(ds.graphs[i]);
  return infonce_scores(w, graphs, opts);
}

}  // namespace baca
