#include "baca/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "baca/error.hpp"

namespace baca {

using nlohmann::json;
using nlohmann::ordered_json;

Graph::Graph(int num_nodes, std::vector<Edge> edges, std::optional<Eigen::MatrixXd> features)
    : num_nodes_(num_nodes), edges_(std::move(edges)), features_(std::move(features)) {
  if (num_nodes_ < 0) throw ValidationError("negative node count");
  for (auto& [u, v] : edges_) {
    if (u < 0 || v < 0 || u >= num_nodes_ || v >= num_nodes_) {
      throw ValidationError("edge endpoint out of range: [" + std::to_string(u) + "," +
                            std::to_string(v) + "] with " + std::to_string(num_nodes_) +
                            " nodes");
    }
    if (u == v) throw ValidationError("self-loop at node " + std::to_string(u));
    if (u > v) std::swap(u, v);
  }
  std::sort(edges_.begin(), edges_.end());
  auto dup = std::adjacent_find(edges_.begin(), edges_.end());
  if (dup != edges_.end()) {
    throw ValidationError("duplicate edge [" + std::to_string(dup->first) + "," +
                          std::to_string(dup->second) + "]");
  }
  if (features_ && features_->rows() != num_nodes_) {
    throw ValidationError("feature rows (" + std::to_string(features_->rows()) +
                          ") != num_nodes (" + std::to_string(num_nodes_) + ")");
  }
  if (features_ && !features_->allFinite()) throw ValidationError("non-finite node feature");

  neighbors_.assign(num_nodes_, {});
  for (const auto& [u, v] : edges_) {
    neighbors_[u].push_back(v);
    neighbors_[v].push_back(u);
  }
  for (auto& nb : neighbors_) std::sort(nb.begin(), nb.end());
}

double Graph::edge_density() const {
  if (num_nodes_ < 2) return 0.0;
  const double pairs = 0.5 * num_nodes_ * (num_nodes_ - 1.0);
  return static_cast<double>(edges_.size()) / pairs;
}

bool operator==(const Graph& a, const Graph& b) {
  if (a.num_nodes_ != b.num_nodes_ || a.edges_ != b.edges_) return false;
  if (a.features_.has_value() != b.features_.has_value()) return false;
  return !a.features_ || *a.features_ == *b.features_;
}

void GraphDataset::validate() const {
  if (labels) {
    if (labels->size() != graphs.size()) throw ValidationError("labels length != graph count");
    for (int l : *labels) {
      if (l != 0 && l != 1) throw ValidationError("label must be 0 or 1");
    }
  }
  if (precomputed_scores) {
    if (precomputed_scores->size() != graphs.size()) {
      throw ValidationError("precomputed score length != graph count");
    }
    for (double s : *precomputed_scores) {
      if (!std::isfinite(s)) throw ValidationError("non-finite precomputed score");
    }
  }
}

namespace {

Graph graph_from_json(const json& obj, std::size_t line_no) {
  if (!obj.is_object()) throw ParseError(line_no, "expected a JSON object");
  if (!obj.contains("num_nodes") || !obj["num_nodes"].is_number_integer()) {
    throw ParseError(line_no, "missing integer \"num_nodes\"");
  }
  if (!obj.contains("edges") || !obj["edges"].is_array()) {
    throw ParseError(line_no, "missing array \"edges\"");
  }
  const int n = obj["num_nodes"].get<int>();
  std::vector<Edge> edges;
  edges.reserve(obj["edges"].size());
  for (const auto& e : obj["edges"]) {
    if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() ||
        !e[1].is_number_integer()) {
      throw ParseError(line_no, "edge must be a pair of integers");
    }
    edges.emplace_back(e[0].get<int>(), e[1].get<int>());
  }
  std::optional<Eigen::MatrixXd> features;
  if (obj.contains("features")) {
    const auto& rows = obj["features"];
    if (!rows.is_array()) throw ParseError(line_no, "\"features\" must be an array of rows");
    const Eigen::Index cols = rows.empty() ? 0 : static_cast<Eigen::Index>(rows[0].size());
    Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), cols);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (!rows[i].is_array() || static_cast<Eigen::Index>(rows[i].size()) != cols) {
        throw ParseError(line_no, "ragged feature matrix");
      }
      for (Eigen::Index j = 0; j < cols; ++j) {
        if (!rows[i][j].is_number()) throw ParseError(line_no, "non-numeric feature");
        x(static_cast<Eigen::Index>(i), j) = rows[i][j].get<double>();
      }
    }
    features = std::move(x);
  }
  try {
    return Graph(n, std::move(edges), std::move(features));
  } catch (const ValidationError& err) {
    throw ParseError(line_no, err.what());
  }
}

}  // namespace

GraphDataset parse_dataset(std::istream& in) {
  GraphDataset ds;
  std::vector<int> labels;
  std::vector<double> scores;
  std::optional<bool> has_label, has_score, has_features;
  std::string line;
  std::size_t line_no = 0;

  auto check_consistent = [&](std::optional<bool>& seen, bool present, const char* key) {
    if (!seen) {
      seen = present;
    } else if (*seen != present) {
      throw ParseError(line_no, std::string("key \"") + key +
                                    "\" must be present on every line or on none");
    }
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& err) {
      throw ParseError(line_no, std::string("malformed JSON: ") + err.what());
    }
    ds.graphs.push_back(graph_from_json(obj, line_no));

    check_consistent(has_features, obj.contains("features"), "features");
    if (const auto& x = ds.graphs.back().features(); x && ds.graphs.size() > 1) {
      const auto& first = ds.graphs.front().features();
      if (x->cols() != first->cols() && x->rows() > 0 && first->rows() > 0) {
        throw ParseError(line_no, "feature width " + std::to_string(x->cols()) + " != " +
                                      std::to_string(first->cols()) + " on earlier lines");
      }
    }
    check_consistent(has_label, obj.contains("label"), "label");
    check_consistent(has_score, obj.contains("s_pre"), "s_pre");
    if (obj.contains("label")) {
      if (!obj["label"].is_number_integer()) throw ParseError(line_no, "label must be 0 or 1");
      const int l = obj["label"].get<int>();
      if (l != 0 && l != 1) throw ParseError(line_no, "label must be 0 or 1");
      labels.push_back(l);
    }
    if (obj.contains("s_pre")) {
      if (!obj["s_pre"].is_number()) throw ParseError(line_no, "s_pre must be a number");
      scores.push_back(obj["s_pre"].get<double>());
    }
  }
  if (has_label.value_or(false)) ds.labels = std::move(labels);
  if (has_score.value_or(false)) ds.precomputed_scores = std::move(scores);
  ds.validate();
  return ds;
}

GraphDataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open dataset file: " + path.string());
  return parse_dataset(in);
}

void write_dataset(const GraphDataset& ds, std::ostream& out) {
  ds.validate();
  for (std::size_t i = 0; i < ds.graphs.size(); ++i) {
    const Graph& g = ds.graphs[i];
    ordered_json obj;
    obj["num_nodes"] = g.num_nodes();
    auto edges = ordered_json::array();
    for (const auto& [u, v] : g.edges()) edges.push_back({u, v});
    obj["edges"] = std::move(edges);
    if (g.has_features()) {
      const auto& x = *g.features();
      auto rows = ordered_json::array();
      for (Eigen::Index r = 0; r < x.rows(); ++r) {
        auto row = ordered_json::array();
        for (Eigen::Index c = 0; c < x.cols(); ++c) row.push_back(x(r, c));
        rows.push_back(std::move(row));
      }
      obj["features"] = std::move(rows);
    }
    if (ds.labels) obj["label"] = (*ds.labels)[i];
    if (ds.precomputed_scores) obj["s_pre"] = (*ds.precomputed_scores)[i];
    out << obj.dump() << '\n';
  }
}

void save_dataset(const GraphDataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw RuntimeError("cannot write dataset file: " + path.string());
  write_dataset(ds, out);
  if (!out) throw RuntimeError("write failed: " + path.string());
}

Eigen::MatrixXd degree_features(const Graph& g, int d_in) {
  if (d_in < 1) throw ValidationError("d_in must be >= 1");
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(g.num_nodes(), d_in);
  for (int v = 0; v < g.num_nodes(); ++v) x(v, std::min(g.degree(v), d_in - 1)) = 1.0;
  return x;
}

Eigen::MatrixXd node_features(const Graph& g, int d_in) {
  if (g.has_features()) return *g.features();
  return degree_features(g, d_in);
}

Eigen::MatrixXd adjacency(const Graph& g) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(g.num_nodes(), g.num_nodes());
  for (const auto& [u, v] : g.edges()) {
    a(u, v) = 1.0;
    a(v, u) = 1.0;
  }
  return a;
}

Graph relabel(const Graph& g, const std::vector<int>& perm) {
  if (static_cast<int>(perm.size()) != g.num_nodes()) {
    throw ValidationError("permutation size != node count");
  }
  std::vector<Edge> edges;
  edges.reserve(g.num_edges());
  for (const auto& [u, v] : g.edges()) edges.emplace_back(perm[u], perm[v]);
  std::optional<Eigen::MatrixXd> features;
  if (g.has_features()) {
    Eigen::MatrixXd x(g.num_nodes(), g.features()->cols());
    for (int v = 0; v < g.num_nodes(); ++v) x.row(perm[v]) = g.features()->row(v);
    features = std::move(x);
  }
  return Graph(g.num_nodes(), std::move(edges), std::move(features));
}

}  // namespace baca
