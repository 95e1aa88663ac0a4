#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "baca/graph.hpp"
#include "baca/graphon.hpp"
#include "baca/rng.hpp"

namespace baca {

/// Small simple pattern graph, at most kMaxMotifNodes nodes.
class Motif {
 public:
  static constexpr int kMaxMotifNodes = 5;

  Motif(int num_nodes, std::vector<Edge> edges, std::string name = {});

  static Motif complete(int n);  // K_n
  static Motif path(int n);      // P_n, n nodes
  static Motif cycle(int n);     // C_n
  static Motif star(int leaves);

  int num_nodes() const noexcept { return num_nodes_; }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  int edge_count() const noexcept { return static_cast<int>(edges_.size()); }
  const std::string& name() const noexcept { return name_; }

 private:
  int num_nodes_;
  std::vector<Edge> edges_;
  std::string name_;
};

// Exact t(F, W) for a step function: N^{-|V(F)|} times the sum over all block
// assignments of the product of W over motif edges. Accepts signed matrices.
double homomorphism_density(const Motif& f, const Eigen::MatrixXd& w);
inline double homomorphism_density(const Motif& f, const Graphon& w) {
  return homomorphism_density(f, w.matrix());
}

struct CutNormResult {
  double value = 0.0;
  bool exact = true;
};

inline constexpr int kExactCutNormMaxResolution = 16;

// max over block subsets S, T of |sum_{i in S, j in T} w(i,j)| / N^2.
// Exact for N <= 16: S is enumerated in Gray-code order and T chosen optimally
// per column sign. Larger N falls back to randomized alternating local search,
// which returns a lower bound with exact = false.
CutNormResult cut_norm(const Eigen::MatrixXd& w, std::uint64_t seed = 0);

struct BoundReport {
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = true;
  double slack = 0.0;  // rhs - lhs
  bool exact = true;
};

inline constexpr double kBoundTolerance = 1e-12;

BoundReport make_report(double lhs, double rhs, bool exact = true);

// |t(F,W1) - t(F,W2)| <= e(F) * ||W1 - W2||_cut.
BoundReport check_counting_lemma(const Motif& f, const Eigen::MatrixXd& w1,
                                 const Eigen::MatrixXd& w2);

// With W_s = lambda W_G + (1 - lambda) W_H and delta = ||W_G - W_H||_cut:
//   first:  |t(T_G, W_s) - t(T_G, W_G)| <= e(T_G) (1 - lambda) delta
//   second: |t(T_H, W_s) - t(T_H, W_H)| <= e(T_H) lambda delta
std::pair<BoundReport, BoundReport> check_mixup_bounds(const Motif& t_g, const Motif& t_h,
                                                       const Graphon& w_g, const Graphon& w_h,
                                                       double lambda);

// Random symmetric step graphon with i.i.d. uniform entries.
Graphon random_graphon(int resolution, Rng& rng);

/// Randomized verification of the mixup bounds over many trials.
struct TheoremSuiteOptions {
  int trials = 500;
  int max_resolution = 12;
  std::uint64_t seed = 1;
};

struct TheoremSuiteResult {
  int trials = 0;
  int violations = 0;
  double worst_slack = 0.0;  // smallest rhs - lhs seen over both bounds
  bool all_exact = true;
  struct Row {
    std::string motif;
    int checks = 0;
    int violations = 0;
    double worst_slack = 0.0;
  };
  std::vector<Row> per_motif;
};

const std::vector<Motif>& theorem_motifs();  // all motifs with up to 4 nodes used by the suite
TheoremSuiteResult run_theorem_suite(const TheoremSuiteOptions& opts);

}  // namespace baca
